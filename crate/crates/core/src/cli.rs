//! Command-line front end.
//!
//! Exit status: `0` success, `1` a `verify-all` check failed or output could
//! not be written, `2` invalid input (an error object naming the field is
//! printed to stderr), `3` numerical failure (rows computed so far are
//! written and marked incomplete).

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::bounds::{bound_sup_based, bound_thm31, bound_thm41, BoundReport};
use crate::checks::{fock_row, halfplane_row, jensen_property_run, random_dbar_points, verify_all};
use crate::config::{
    self, BoundConfig, ConfigError, DbarCheckConfig, FockDemoConfig, HalfplaneDemoConfig, JensenCheckConfig, MethodChoice, VerifyAllConfig,
};
use crate::convex::sup_inverse;
use crate::dbar::{check_dbar_points, dbar_residual, DbarContext, DbarData, DbarQuadrature};
use crate::error::{Error, Result};
use crate::geom::{self, Domain, Weight};
use crate::quadrature::QuadratureSpec;
use crate::report::{bound_row, bound_table, Format, Table, Value};

/// Seed used when neither the command line nor the config provides one.
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "holobound", version, about = "Pointwise bounds for holomorphic functions from integral constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file, or `-` for stdout.
    #[arg(long, global = true, default_value = "-")]
    pub out: String,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// No progress messages on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Pointwise bounds on a grid of points.
    Bound,
    /// Randomized check of Jensen's inequality and the mean bound.
    JensenCheck,
    /// The Fock-space example: optimal radius and gap to the sharp bound.
    FockDemo,
    /// Mean-based against supremum-based bounds in the upper half-plane.
    HalfplaneDemo,
    /// Averaged bound for the Cauchy solution of the d-bar equation.
    DbarCheck,
    /// Reduced-size run of every verification.
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bound => "bound",
            Command::JensenCheck => "jensen-check",
            Command::FockDemo => "fock-demo",
            Command::HalfplaneDemo => "halfplane-demo",
            Command::DbarCheck => "dbar-check",
            Command::VerifyAll => "verify-all",
        }
    }
}

/// Result of a subcommand: a table, and whether every check passed.
struct Outcome {
    table: Table,
    failed_checks: bool,
    /// Set when a numerical failure cut the run short.
    error: Option<Error>,
}

impl Outcome {
    fn done(table: Table) -> Self {
        Self { table, failed_checks: false, error: None }
    }
}

/// Settings shared by all subcommands after merging flags and config.
struct Run {
    seed: u64,
    explicit_seed: Option<u64>,
}

impl Run {
    /// MC rules take the run seed when one was given.
    fn quad(&self, q: QuadratureSpec) -> QuadratureSpec {
        match self.explicit_seed {
            Some(s) => q.with_seed(s),
            None => q,
        }
    }
}

/// Parses `args` and runs; returns the process exit status.
pub fn main_with(args: impl IntoIterator<Item = OsString>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = writeln!(stderr, "{}", json!({"error": "usage", "field": null, "message": e.to_string().trim()}));
            return 2;
        }
    };
    run(&cli, stdout, stderr)
}

/// Runs a parsed command line.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let text = match &cli.config {
        Some(path) => match fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => {
                let err = Error::Config(ConfigError::new("config", format!("cannot read {}: {e}", path.display())));
                report_error(&err, stderr);
                return 2;
            }
        },
        None => None,
    };
    let outcome = match dispatch(cli, text.as_deref()) {
        Ok((o, format)) => (o, format),
        Err((e, format)) => {
            if e.is_numerical() {
                // nothing was computed yet; still emit an (empty) marked table
                let mut t = Table::new(&[]);
                t.incomplete = Some(e.to_string());
                (Outcome { table: t, failed_checks: false, error: Some(e) }, format)
            } else {
                report_error(&e, stderr);
                return 2;
            }
        }
    };
    let (outcome, format) = outcome;
    if let Err(e) = write_table(&outcome.table, format, &cli.out, stdout) {
        let _ = writeln!(stderr, "{}", json!({"error": "io", "field": "out", "message": e.to_string()}));
        return 1;
    }
    if let Some(e) = &outcome.error {
        report_error(e, stderr);
        return 3;
    }
    if !cli.quiet {
        let _ = writeln!(stderr, "{}: {} row(s)", cli.command.name(), outcome.table.rows.len());
    }
    if outcome.failed_checks {
        return 1;
    }
    0
}

fn report_error(e: &Error, stderr: &mut dyn Write) {
    let kind = if e.is_numerical() { "numerical" } else { "validation" };
    let _ = writeln!(stderr, "{}", json!({"error": kind, "field": e.field(), "message": e.message()}));
}

fn write_table(t: &Table, format: Format, out: &str, stdout: &mut dyn Write) -> io::Result<()> {
    if out == "-" {
        t.emit(format, stdout)
    } else {
        let mut buf = Vec::new();
        t.emit(format, &mut buf)?;
        fs::write(out, buf)
    }
}

fn parse_or_default<T: serde::de::DeserializeOwned + Default>(text: Option<&str>, command: Command) -> Result<T> {
    match text {
        Some(t) => Ok(config::parse(t, command.name())?),
        None => Ok(T::default()),
    }
}

type Dispatch = std::result::Result<(Outcome, Format), (Error, Format)>;

fn dispatch(cli: &Cli, text: Option<&str>) -> Dispatch {
    let fmt = |cfg: Option<Format>| cli.format.or(cfg).unwrap_or_default();
    let early = cli.format.unwrap_or_default();
    let run = |cfg_seed: Option<u64>| {
        let explicit_seed = cli.seed.or(cfg_seed);
        Run { seed: explicit_seed.unwrap_or(DEFAULT_SEED), explicit_seed }
    };
    macro_rules! go {
        ($cfg:ty, $body:expr) => {{
            let cfg: $cfg = parse_or_default(text, cli.command).map_err(|e| (e, early))?;
            let format = fmt(cfg.output);
            let r = run(cfg.seed);
            $body(&cfg, &r).map(|o| (o, format)).map_err(|e| (e, format))
        }};
    }
    match cli.command {
        Command::Bound => {
            let Some(t) = text else {
                return Err((ConfigError::new("config", "bound needs --config with a domain and a grid").into(), early));
            };
            let cfg: BoundConfig = config::parse(t, "bound").map_err(|e| (Error::from(e), early))?;
            let format = fmt(cfg.output);
            let r = run(cfg.seed);
            run_bound(&cfg, &r).map(|o| (o, format)).map_err(|e| (e, format))
        }
        Command::JensenCheck => go!(JensenCheckConfig, run_jensen),
        Command::FockDemo => go!(FockDemoConfig, run_fock),
        Command::HalfplaneDemo => go!(HalfplaneDemoConfig, run_halfplane),
        Command::DbarCheck => go!(DbarCheckConfig, run_dbar),
        Command::VerifyAll => go!(VerifyAllConfig, run_verify),
    }
}

/// Collects per-item results in input order, stopping at the first error:
/// numerical failures keep the rows so far, input errors abort.
fn collect_rows(mut table: Table, results: Vec<Result<Vec<Vec<Value>>>>) -> Result<Outcome> {
    for r in results {
        match r {
            Ok(rows) => rows.into_iter().for_each(|row| table.push(row)),
            Err(e) if e.is_numerical() => {
                table.incomplete = Some(e.to_string());
                return Ok(Outcome { table, failed_checks: false, error: Some(e) });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Outcome::done(table))
}

fn missing(field: &str, why: &str) -> Error {
    ConfigError::new(field, why).into()
}

fn run_bound(cfg: &BoundConfig, run: &Run) -> Result<Outcome> {
    let dom: &Domain = &cfg.domain;
    dom.validate()?;
    let n = dom.n();
    let points = cfg.grid.points(n)?;
    if let Some(p) = points.iter().find(|p| !dom.contains(p)) {
        return Err(ConfigError::new("grid", format!("point {p:?} is not in the domain")).into());
    }
    let q = run.quad(cfg.quadrature.unwrap_or(QuadratureSpec::default_for(n)));
    let norm_q = run.quad(cfg.norm_quadrature.unwrap_or(QuadratureSpec::default_for(n)));
    q.validate()?;
    norm_q.validate()?;

    let want_norm = matches!(cfg.method, MethodChoice::Thm31 | MethodChoice::SupBased | MethodChoice::All);
    let want_phi = matches!(cfg.method, MethodChoice::Thm41 | MethodChoice::All);
    let mut norm_input = None;
    if want_norm {
        let w = cfg.weight.as_ref().ok_or_else(|| missing("weight", "required by the norm-based bounds"))?;
        w.validate(n)?;
        let norm = match (cfg.norm, &cfg.function) {
            (Some(v), _) => v,
            (None, Some(f)) => geom::weighted_norm(f, cfg.p, w, dom, &norm_q)?,
            (None, None) => return Err(missing("norm", "give norm or function")),
        };
        norm_input = Some((w, norm));
    }
    let mut phi_input = None;
    if want_phi {
        let spec = cfg.phi.as_ref().ok_or_else(|| missing("phi", "required by the sup-inverse bound"))?;
        let phi = spec.build()?;
        let si = sup_inverse(&phi)?;
        let v = cfg.v.clone().unwrap_or(Weight::constant(0.0));
        v.validate(n)?;
        let value = match (cfg.n_phi, &cfg.function) {
            (Some(x), _) => x,
            (None, Some(f)) => geom::n_phi(f, &v, &phi, dom, &norm_q)?,
            (None, None) => return Err(missing("n_phi", "give n_phi or function")),
        };
        phi_input = Some((si, v, value));
    }

    let results: Vec<Result<Vec<Vec<Value>>>> = points
        .par_iter()
        .map(|z| {
            let mut reports: Vec<BoundReport> = Vec::new();
            if let Some((w, norm)) = norm_input {
                if matches!(cfg.method, MethodChoice::Thm31 | MethodChoice::All) {
                    reports.push(bound_thm31(norm, w, cfg.p, z, dom, &q)?);
                }
            }
            if let Some((si, v, value)) = &phi_input {
                reports.push(bound_thm41(*value, si, v, z, dom, &q)?);
            }
            if let Some((w, norm)) = norm_input {
                if matches!(cfg.method, MethodChoice::SupBased | MethodChoice::All) {
                    reports.push(bound_sup_based(norm, w, cfg.p, z, dom, &q)?);
                }
            }
            Ok(reports.iter().map(bound_row).collect())
        })
        .collect();
    collect_rows(bound_table(n), results)
}

fn run_jensen(cfg: &JensenCheckConfig, run: &Run) -> Result<Outcome> {
    for (field, v) in [("trials", cfg.trials), ("max_atoms", cfg.max_atoms), ("max_pieces", cfg.max_pieces)] {
        if v == 0 {
            return Err(missing(field, "must be >= 1"));
        }
    }
    let s = jensen_property_run(cfg.trials, cfg.max_atoms, cfg.max_pieces, run.seed)?;
    let mut t = Table::new(&[
        "trials",
        "violations",
        "worst_slack",
        "equality_trials",
        "equality_max_error",
        "equality_violations",
        "mean_bound_trials",
        "mean_bound_violations",
        "seed",
    ]);
    t.push(vec![
        s.trials.into(),
        s.violations.into(),
        s.worst_slack.into(),
        s.equality_trials.into(),
        s.equality_max_error.into(),
        s.equality_violations.into(),
        s.mean_bound_trials.into(),
        s.mean_bound_violations.into(),
        s.seed.into(),
    ]);
    Ok(Outcome::done(t))
}

fn run_fock(cfg: &FockDemoConfig, run: &Run) -> Result<Outcome> {
    let points = cfg.grid.points(1)?;
    let q = run.quad(cfg.quadrature.unwrap_or(QuadratureSpec::DEFAULT_POLAR));
    q.validate()?;
    let norm = match &cfg.function {
        Some(f) => geom::weighted_norm(f, 2.0, &Weight::AbsSq, &Domain::full_space(1), &q)?,
        None => 1.0,
    };
    let table = Table::new(&["z_re", "z_im", "r_star", "bound", "closed_form", "abs_error", "gap_factor"]);
    let results = points
        .par_iter()
        .map(|p| {
            let r = fock_row([p[0], p[1]], norm, &q)?;
            Ok(vec![vec![
                r.z[0].into(),
                r.z[1].into(),
                r.r_star.into(),
                r.bound.into(),
                r.closed_form.into(),
                r.abs_error.into(),
                r.gap_factor.into(),
            ]])
        })
        .collect();
    collect_rows(table, results)
}

fn run_halfplane(cfg: &HalfplaneDemoConfig, run: &Run) -> Result<Outcome> {
    if let Some((i, h)) = cfg.heights.iter().enumerate().find(|(_, h)| !(h.is_finite() && **h > 0.0)) {
        return Err(ConfigError::new(&format!("heights[{i}]"), format!("must be finite and > 0, got {h}")).into());
    }
    if !cfg.re.is_finite() {
        return Err(missing("re", "must be finite"));
    }
    let q = run.quad(cfg.quadrature.unwrap_or(QuadratureSpec::DEFAULT_POLAR));
    q.validate()?;
    let table = Table::new(&["im_z", "thm41", "sup_based", "difference", "predicted", "r_star_thm41", "r_star_sup_based"]);
    let results = cfg
        .heights
        .par_iter()
        .map(|&h| {
            let r = halfplane_row(h, cfg.re, &q)?;
            Ok(vec![vec![
                r.im_z.into(),
                r.thm41.into(),
                r.sup_based.into(),
                r.difference.into(),
                r.predicted.into(),
                r.r_star_thm41.into(),
                r.r_star_sup_based.into(),
            ]])
        })
        .collect();
    collect_rows(table, results)
}

fn run_dbar(cfg: &DbarCheckConfig, run: &Run) -> Result<Outcome> {
    let points: Vec<([f64; 2], f64)> = match (&cfg.points, &cfg.random) {
        (Some(_), Some(_)) => return Err(missing("points", "give either points or random, not both")),
        (Some(ps), None) => ps.iter().map(|p| ([p[0], p[1]], p[2])).collect(),
        (None, rnd) => {
            let spec = rnd.unwrap_or_default();
            if !(spec.z_radius >= 0.0 && spec.z_radius.is_finite()) {
                return Err(missing("random.z_radius", "must be finite and >= 0"));
            }
            if !(spec.r_min > 0.0 && spec.r_min <= spec.r_max && spec.r_max < 1.0) {
                return Err(missing("random", "need 0 < r_min <= r_max < 1"));
            }
            random_dbar_points(&spec, run.seed)
        }
    };
    if let Some((i, _)) = points.iter().enumerate().find(|(_, (z, r))| !(z[0].is_finite() && z[1].is_finite() && *r > 0.0 && *r < 1.0)) {
        return Err(ConfigError::new(&format!("points[{i}]"), "need finite z and 0 < r < 1").into());
    }
    let quad = DbarQuadrature { cauchy: run.quad(cfg.quadrature.cauchy), ball: run.quad(cfg.quadrature.ball), norm: run.quad(cfg.quadrature.norm) };
    let data = DbarData { g: cfg.g.clone(), v: cfg.v.clone(), a: cfg.a };
    let ctx = DbarContext::new(data, quad)?;
    let residual = dbar_residual(&ctx.solver);
    let table = Table::new(&[
        "z_re",
        "z_im",
        "r",
        "lhs",
        "rhs",
        "slack",
        "const_a_used",
        "premise_holds",
        "rhs_measured",
        "mean_v",
        "mean_log_weight",
        "j",
        "weighted_norm_sq",
        "degenerate",
        "residual",
    ]);
    let results = check_dbar_points(&ctx, &points)
        .into_iter()
        .map(|r| {
            let r = r?;
            Ok(vec![vec![
                r.z[0].into(),
                r.z[1].into(),
                r.r.into(),
                r.lhs.into(),
                r.rhs.into(),
                r.slack.into(),
                r.const_a_used.into(),
                r.premise_holds.into(),
                r.rhs_measured.into(),
                r.mean_v.into(),
                r.mean_log_weight.into(),
                r.j.into(),
                r.weighted_norm_sq.into(),
                r.degenerate.into(),
                residual.into(),
            ]])
        })
        .collect();
    collect_rows(table, results)
}

fn run_verify(_cfg: &VerifyAllConfig, run: &Run) -> Result<Outcome> {
    let rows = verify_all(run.seed);
    let mut t = Table::new(&["check", "passed", "value", "tolerance", "detail"]);
    let failed = rows.iter().any(|r| !r.passed);
    for r in rows {
        t.push(vec![r.check.into(), r.passed.into(), r.value.into(), r.tolerance.into(), r.detail.into()]);
    }
    Ok(Outcome { table: t, failed_checks: failed, error: None })
}
