//! Acceptance criteria, one pass/fail line each. Tolerances and time budgets
//! are pinned here; the process fails if any criterion fails.

use std::f64::consts::E;
use std::time::{Duration, Instant};

use holobound::checks::{
    bump_family, dbar_chain, fock_row_analytic, fock_validity, halfplane_row, harmonic_check, jensen_property_run,
    random_dbar_points, specialization_check, square_grid, sup_inverse_suite,
};
use holobound::cli::main_with;
use holobound::config::RandomPoints;
use holobound::dbar::{DbarData, DbarQuadrature};
use holobound::geom::Weight;
use holobound::quadrature::QuadratureSpec;

const SEED: u64 = 7;
const POLAR: QuadratureSpec = QuadratureSpec::DEFAULT_POLAR;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

type Check = fn() -> Result<Verdict, String>;

fn cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["holobound"];
    argv.extend_from_slice(args);
    argv.push("--quiet");
    let code = main_with(argv.iter().map(Into::into), &mut out, &mut err);
    (code, out)
}

fn csv_column(bytes: &[u8], name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_reader(bytes);
    let i = r.headers().unwrap().iter().position(|h| h == name).expect("column");
    r.records().map(|rec| rec.unwrap()[i].parse().unwrap()).collect()
}

fn fock_optimum() -> Result<Verdict, String> {
    const R_TOL: f64 = 1e-8;
    const GAP_TOL: f64 = 1e-6;
    let (code, out) = cli(&["fock-demo"]);
    if code != 0 {
        return Ok(verdict(false, format!("exit status {code}")));
    }
    let r = csv_column(&out, "r_star")[0];
    let g = csv_column(&out, "gap_factor")[0];
    let (er, eg) = ((r - 2f64.sqrt()).abs(), (g - (E / 2.0).sqrt()).abs());
    Ok(verdict(er <= R_TOL && eg <= GAP_TOL, format!("r_star = {r:.12} (err {er:.1e}), gap_factor = {g:.9} (err {eg:.1e})")))
}

fn fock_shape() -> Result<Verdict, String> {
    const TOL: f64 = 1e-6;
    let grid: Vec<[f64; 2]> = square_grid(2.0, 21).into_iter().filter(|z| z[0].hypot(z[1]) <= 2.0).collect();
    let mut worst: f64 = 0.0;
    for z in &grid {
        let row = fock_row_analytic(*z, 1.0).map_err(|e| e.to_string())?;
        // independent closed form: ln(1/sqrt(pi)) + |z|^2/2 + ln sqrt(e/2)
        let want = -0.5 * std::f64::consts::PI.ln() + 0.5 * (z[0] * z[0] + z[1] * z[1]) + 0.5 * (E / 2.0).ln();
        worst = worst.max((row.bound - want).abs());
    }
    Ok(verdict(worst <= TOL, format!("{} points, max |bound - closed form| = {worst:.1e}", grid.len())))
}

fn fock_validity_check() -> Result<Verdict, String> {
    const MARGIN_TOL: f64 = 1e-6;
    const NORM_TOL: f64 = 1e-6;
    let rows = fock_validity(&square_grid(2.0, 21), &POLAR, &POLAR).map_err(|e| e.to_string())?;
    let margin = rows.iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min);
    let norm_err = rows.iter().map(|r| r.norm_rel_error).fold(0.0, f64::max);
    // ||1||_w = sqrt(pi)
    let one = (rows[0].norm - std::f64::consts::PI.sqrt()).abs() / std::f64::consts::PI.sqrt();
    Ok(verdict(
        margin >= -MARGIN_TOL && norm_err <= NORM_TOL && one <= NORM_TOL,
        format!("{} functions x 441 points, min(bound - ln|f|) = {margin:.3e}, max norm rel err = {norm_err:.1e}", rows.len()),
    ))
}

fn halfplane() -> Result<Verdict, String> {
    const TOL: f64 = 1e-9;
    let mut worst: f64 = 0.0;
    let mut worst_derived: f64 = 0.0;
    for h in [2.0, 5.0, 10.0, 100.0] {
        let r = halfplane_row(h, 0.0, &POLAR).map_err(|e| e.to_string())?;
        let stated = -2.0 * h.ln() + (2.0 + 2.0 * 0.5f64.ln());
        let derived = -2.0 * h.ln() - (2.0 + 2.0 * 0.5f64.ln());
        worst = worst.max((r.difference - stated).abs());
        worst_derived = worst_derived.max((r.difference - derived).abs());
    }
    Ok(verdict(
        worst <= TOL,
        format!(
            "max |difference - (-2 ln h + (2 + 2 ln 1/2))| = {worst:.6}; against -2 ln h - (2 + 2 ln 1/2) it is {worst_derived:.1e}"
        ),
    ))
}

fn jensen_suite() -> Result<Verdict, String> {
    let s = jensen_property_run(10_000, 8, 6, SEED).map_err(|e| e.to_string())?;
    Ok(verdict(
        s.trials == 10_000 && s.violations == 0 && s.equality_violations == 0,
        format!(
            "{} trials, {} violations (worst relative slack {:.1e}), equality max err {:.1e}",
            s.trials, s.violations, s.worst_slack, s.equality_max_error
        ),
    ))
}

fn sup_inverse_check() -> Result<Verdict, String> {
    let rows = sup_inverse_suite(20, 1000, SEED).map_err(|e| e.to_string())?;
    let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    let fails = rows.iter().filter(|r| r.case == holobound::ConditionCase::Fails).count();
    Ok(verdict(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} functions ({fails} correctly rejected), 10^3 samples each", rows.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    ))
}

fn specialization() -> Result<Verdict, String> {
    const TOL: f64 = 1e-12;
    let d = specialization_check(50, SEED, &POLAR).map_err(|e| e.to_string())?;
    Ok(verdict(d <= TOL, format!("50 fixtures, max |thm41 - thm31| = {d:.1e}")))
}

fn harmonic() -> Result<Verdict, String> {
    const TOL: f64 = 1e-8;
    let h = harmonic_check(20, SEED, &POLAR).map_err(|e| e.to_string())?;
    Ok(verdict(
        h.max_mean_value_error <= TOL && h.min_sphere_excess >= -TOL,
        format!("max |B_v - v(z)| = {:.1e}, min S_v - B_v = {:.3e}", h.max_mean_value_error, h.min_sphere_excess),
    ))
}

fn dbar() -> Result<Verdict, String> {
    const SLACK_TOL: f64 = -1e-6;
    const RESIDUAL_TOL: f64 = 1e-3;
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (name, g)) in bump_family().into_iter().enumerate() {
        let points = random_dbar_points(&RandomPoints { count: 100, ..RandomPoints::default() }, SEED + i as u64);
        let data = DbarData { g, v: Weight::constant(0.0), a: 2.0 };
        let (s, _) = dbar_chain(&name, data, &points, DbarQuadrature::default()).map_err(|e| e.to_string())?;
        ok &= s.min_slack >= SLACK_TOL && s.residual <= RESIDUAL_TOL;
        parts.push(format!(
            "{name}: min slack {:.3}, residual {:.1e}, const(a) in [{:.3}, {:.3}]",
            s.min_slack, s.residual, s.const_a_min, s.const_a_max
        ));
    }
    Ok(verdict(ok, parts.join("; ")))
}

fn determinism() -> Result<Verdict, String> {
    let runs: [&[&str]; 6] = [
        &["jensen-check", "--seed", "7"],
        &["fock-demo", "--seed", "7"],
        &["halfplane-demo", "--seed", "7"],
        &["dbar-check", "--seed", "7"],
        &["verify-all", "--seed", "7"],
        &["bound", "--config", concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/bound.json"), "--seed", "7"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        let (c1, a) = cli(args);
        let (c2, b) = cli(args);
        if a != b || c1 != c2 || a.is_empty() {
            differing.push(args[0]);
        }
    }
    Ok(verdict(differing.is_empty(), if differing.is_empty() { "6 subcommands byte-identical".into() } else { format!("differs: {differing:?}") }))
}

fn main() {
    let criteria: [(&str, Duration, Check); 10] = [
        ("1 fock optimum", Duration::from_secs(5), fock_optimum),
        ("2 fock bound shape", Duration::from_secs(10), fock_shape),
        ("3 bound validity", Duration::from_secs(60), fock_validity_check),
        ("4 half-plane comparison", Duration::from_secs(5), halfplane),
        ("5 jensen property suite", Duration::from_secs(30), jensen_suite),
        ("6 sup-inverse suite", Duration::from_secs(10), sup_inverse_check),
        ("7 specialization identity", Duration::from_secs(20), specialization),
        ("8 harmonic mean value", Duration::from_secs(10), harmonic),
        ("9 d-bar chain", Duration::from_secs(120), dbar),
        ("10 determinism", Duration::from_secs(600), determinism),
    ];
    let mut failures = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let v = check().unwrap_or_else(|e| verdict(false, format!("error: {e}")));
        let took = start.elapsed();
        let in_time = took <= budget;
        let passed = v.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "{} {name}: {} [{:.2}s / {}s{}]",
            if passed { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("{} of 10 criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
