//! Verification routines shared by the CLI and the test suites: randomized
//! Jensen and sup-inverse properties, the Fock and half-plane worked
//! examples, mean-value identities and the d-bar chain.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{bound_sup_based, bound_thm31, bound_thm31_with, bound_thm41, compare_bounds};
use crate::config::RandomPoints;
use crate::convex::{classify, sample_interval, sup_inverse, ConditionCase, ConvexFunction, SupInverse};
use crate::dbar::{check_dbar_points, dbar_residual, DbarCheckReport, DbarContext, DbarData, DbarQuadrature, Source, ZTerm};
use crate::error::Result;
use crate::geom::{self, Domain, HoloFunction, Weight};
use crate::jensen::{jensen, mean_bound, MeasurePair, MeasureSpace};
use crate::quadrature::QuadratureSpec;

/// Relative tolerance of the Jensen inequality: `slack >= -tol (1 + |rhs|)`.
pub const JENSEN_TOL: f64 = 1e-9;
/// Relative tolerance of the equality case (constant integrand).
pub const EQUALITY_TOL: f64 = 1e-12;
/// Tolerance of the concavity check of a sampled sup-inverse.
pub const CONCAVITY_TOL: f64 = 1e-9;
/// Tolerance of `phi(si(y)) = y` and `si(phi(t)) >= t`.
pub const ROUND_TRIP_TOL: f64 = 1e-9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- Jensen

/// Outcome of a randomized Jensen run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenSummary {
    pub trials: usize,
    pub violations: usize,
    /// Smallest `slack / (1 + |rhs|)` seen.
    pub worst_slack: f64,
    pub equality_trials: usize,
    /// Largest `|lhs - rhs| / (1 + |rhs|)` for constant integrands.
    pub equality_max_error: f64,
    pub equality_violations: usize,
    /// Trials whose random `phi` admits a sup-inverse; the mean bound is
    /// checked on each.
    pub mean_bound_trials: usize,
    pub mean_bound_violations: usize,
    pub seed: u64,
}

/// A random convex piecewise-linear function on a closed interval: knots,
/// then the function. Slopes are half-integers in `[-3, 3]` so that flat
/// pieces and exact ties occur.
pub fn random_pwl(rng: &mut impl Rng, max_pieces: usize) -> (Vec<(f64, f64)>, ConvexFunction) {
    let pieces = rng.random_range(1..=max_pieces.max(1));
    let mut slopes: Vec<f64> = (0..pieces).map(|_| rng.random_range(-6..=6) as f64 / 2.0).collect();
    slopes.sort_by(f64::total_cmp);
    let mut x = rng.random_range(-4.0..-1.0);
    let mut y = rng.random_range(-2.0..2.0);
    let mut knots = vec![(x, y)];
    for s in slopes {
        let dx = rng.random_range(0.2..2.0);
        x += dx;
        y += s * dx;
        knots.push((x, y));
    }
    let phi = ConvexFunction::piecewise_linear(knots.clone(), &[]).expect("nondecreasing slopes give a convex function");
    (knots, phi)
}

/// `trials` random probability measures with up to `max_atoms` atoms,
/// random piecewise-linear `phi` with up to `max_pieces` pieces and random
/// integrands; each trial also runs a constant integrand and, when `phi`
/// admits a sup-inverse, the mean bound with `mu = nu`.
pub fn jensen_property_run(trials: usize, max_atoms: usize, max_pieces: usize, seed: u64) -> Result<JensenSummary> {
    let mut rng = rng(seed);
    let mut s = JensenSummary {
        trials,
        violations: 0,
        worst_slack: f64::INFINITY,
        equality_trials: 0,
        equality_max_error: 0.0,
        equality_violations: 0,
        mean_bound_trials: 0,
        mean_bound_violations: 0,
        seed,
    };
    for _ in 0..trials {
        let (knots, phi) = random_pwl(&mut rng, max_pieces);
        let (lo, hi) = (knots[0].0, knots[knots.len() - 1].0);
        let m = rng.random_range(1..=max_atoms.max(1));
        let points: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let weights: Vec<f64> = (0..m).map(|_| rng.random_range(1e-3..1.0)).collect();
        let ms = MeasureSpace::atoms_1d(&points, &weights)?.normalized();
        let values: Vec<f64> = (0..m).map(|_| rng.random_range(lo..=hi)).collect();
        let f = |p: &[f64]| values[p[0] as usize];

        let rep = jensen(&ms, f, &phi)?;
        let rel = rep.slack / (1.0 + rep.rhs.abs());
        s.worst_slack = s.worst_slack.min(rel);
        if !rep.holds(JENSEN_TOL) {
            s.violations += 1;
        }

        let c = rng.random_range(lo..=hi);
        let eq = jensen(&ms, |_| c, &phi)?;
        let err = (eq.lhs - eq.rhs).abs() / (1.0 + eq.rhs.abs());
        s.equality_trials += 1;
        s.equality_max_error = s.equality_max_error.max(err);
        if err > EQUALITY_TOL {
            s.equality_violations += 1;
        }

        if classify(&phi).case != ConditionCase::Fails {
            let si = sup_inverse(&phi)?;
            let v: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let pair = MeasurePair::equal(&ms);
            let b = mean_bound(&pair, |p| v[p[0] as usize] + values[p[0] as usize], |p| v[p[0] as usize], &si)?;
            s.mean_bound_trials += 1;
            if b.slack() < -JENSEN_TOL * (1.0 + b.rhs.abs()) {
                s.mean_bound_violations += 1;
            }
        }
    }
    Ok(s)
}

// ---------------------------------------------------------------- sup-inverse

/// One function of the sup-inverse suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupInverseRow {
    pub name: String,
    pub expected: ConditionCase,
    pub case: ConditionCase,
    pub samples: usize,
    /// Largest decrease between consecutive samples (0 if monotone).
    pub max_decrease: f64,
    /// Largest amount by which a sample falls below its neighbours' chord.
    pub max_concavity_defect: f64,
    /// Largest `|phi(si(y)) - y| / (1 + |y|)`.
    pub max_round_trip_error: f64,
    /// Largest `(t - si(phi(t))) / (1 + |t|)`, positive if the sup property fails.
    pub max_sup_defect: f64,
    pub passed: bool,
}

/// Case of Proposition-2.2 type for a convex piecewise-linear function on a
/// closed interval, read directly off its knots.
pub fn expected_pwl_case(knots: &[(f64, f64)]) -> ConditionCase {
    let ys: Vec<f64> = knots.iter().map(|k| k.1).collect();
    let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return ConditionCase::Constant;
    }
    let increasing = knots.windows(2).all(|w| w[1].1 > w[0].1);
    if increasing {
        return ConditionCase::StrictlyIncreasing;
    }
    // rightmost minimizer; left of it the function decreases
    let t_max_index = ys.iter().rposition(|&y| y == min).expect("nonempty");
    if t_max_index == ys.len() - 1 {
        return ConditionCase::Fails;
    }
    // values taken left of t_max must also be taken on [t_max, sup I]
    if ys[0] <= ys[ys.len() - 1] {
        ConditionCase::BoundedBelowWithTmax
    } else {
        ConditionCase::Fails
    }
}

fn sup_inverse_invariants(name: &str, expected: ConditionCase, phi: &ConvexFunction, samples: usize) -> Result<SupInverseRow> {
    let case = classify(phi).case;
    let mut row = SupInverseRow {
        name: name.to_string(),
        expected,
        case,
        samples: 0,
        max_decrease: 0.0,
        max_concavity_defect: 0.0,
        max_round_trip_error: 0.0,
        max_sup_defect: 0.0,
        passed: case == expected,
    };
    if case == ConditionCase::Fails {
        return Ok(row);
    }
    let si: SupInverse = sup_inverse(phi)?;
    let ys = si.sample_image(samples);
    let vals: Vec<f64> = ys.iter().map(|&y| si.eval_f64(y)).collect::<std::result::Result<_, _>>()?;
    row.samples = ys.len();
    for i in 1..ys.len() {
        row.max_decrease = row.max_decrease.max(vals[i - 1] - vals[i]);
    }
    for i in 1..ys.len().saturating_sub(1) {
        let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
        if !(y0.is_finite() && y2.is_finite() && vals[i - 1].is_finite() && vals[i + 1].is_finite()) {
            continue;
        }
        let w = (y1 - y0) / (y2 - y0);
        let chord = vals[i - 1] + w * (vals[i + 1] - vals[i - 1]);
        row.max_concavity_defect = row.max_concavity_defect.max((chord - vals[i]) / (1.0 + chord.abs()));
    }
    for (&y, &t) in ys.iter().zip(&vals) {
        if t.is_finite() {
            let back = phi.eval_f64(t)?;
            row.max_round_trip_error = row.max_round_trip_error.max((back - y).abs() / (1.0 + y.abs()));
        }
    }
    for t in sample_interval(phi.domain(), samples) {
        let y = phi.eval_f64(t)?;
        // skip values that underflow out of an open image
        if !si.domain().contains_f64(y) {
            continue;
        }
        let back = si.eval_f64(y)?;
        row.max_sup_defect = row.max_sup_defect.max((t - back) / (1.0 + t.abs()));
    }
    row.passed &= row.max_decrease <= 1e-12 * (1.0 + vals.iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { m }))
        && row.max_concavity_defect <= CONCAVITY_TOL
        && row.max_round_trip_error <= ROUND_TRIP_TOL
        && row.max_sup_defect <= ROUND_TRIP_TOL;
    Ok(row)
}

/// The function `|t|` on `[-1, 3]` with the value at `-1` raised to `2`.
pub fn remark_function() -> ConvexFunction {
    ConvexFunction::piecewise_linear(vec![(-1.0, 1.0), (0.0, 0.0), (3.0, 3.0)], &[(-1.0, 2.0)]).expect("valid")
}

/// Powers `p = 1, 2, 3`, exponentials `p = 1, 2`, the jump example, a
/// constant and `random` random piecewise-linear functions.
pub fn sup_inverse_suite(random: usize, samples: usize, seed: u64) -> Result<Vec<SupInverseRow>> {
    use ConditionCase::*;
    let mut cases: Vec<(String, ConditionCase, ConvexFunction)> = Vec::new();
    for p in [1.0, 2.0, 3.0] {
        cases.push((format!("power p={p}"), BoundedBelowWithTmax, ConvexFunction::power(p)?));
    }
    for p in [1.0, 2.0] {
        cases.push((format!("exponential p={p}"), StrictlyIncreasing, ConvexFunction::exponential(p)?));
    }
    cases.push(("jump at -1".into(), BoundedBelowWithTmax, remark_function()));
    cases.push(("constant".into(), Constant, ConvexFunction::constant(1.5)?));
    let mut rng = rng(seed);
    for i in 0..random {
        let (knots, phi) = random_pwl(&mut rng, 6);
        cases.push((format!("random pwl #{i}"), expected_pwl_case(&knots), phi));
    }
    cases.iter().map(|(name, expected, phi)| sup_inverse_invariants(name, *expected, phi, samples)).collect()
}

// ---------------------------------------------------------------- Fock

/// `ln(1/sqrt(pi)) + |z|^2/2`: the logarithm of the sharp pointwise bound for
/// unit-norm functions of the Fock space.
pub fn fock_sharp(z: &[f64]) -> f64 {
    -0.5 * PI.ln() + 0.5 * z.iter().map(|x| x * x).sum::<f64>()
}

/// `ln sqrt(e/2)`: how far the mean-based bound sits above the sharp one.
pub fn fock_gap() -> f64 {
    (E / 2.0).sqrt().ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockRow {
    pub z: [f64; 2],
    pub r_star: f64,
    pub bound: f64,
    pub closed_form: f64,
    pub abs_error: f64,
    /// `exp(bound - ln ||f|| - sharp)`
    pub gap_factor: f64,
}

/// The mean-based bound for the Fock weight at `z` and its closed form.
pub fn fock_row(z: [f64; 2], norm: f64, q: &QuadratureSpec) -> Result<FockRow> {
    let rep = bound_thm31(norm, &Weight::AbsSq, 2.0, &z, &Domain::full_space(1), q)?;
    let closed_form = fock_sharp(&z) + fock_gap() + norm.ln();
    Ok(FockRow {
        z,
        r_star: rep.r_star,
        bound: rep.bound,
        closed_form,
        abs_error: (rep.bound - closed_form).abs(),
        gap_factor: (rep.bound - norm.ln() - fock_sharp(&z)).exp(),
    })
}

/// [`fock_row`] with the ball mean in closed form,
/// `B_{|z|^2}(z, r) = |z|^2 + r^2 / 2`.
pub fn fock_row_analytic(z: [f64; 2], norm: f64) -> Result<FockRow> {
    let zz = z[0] * z[0] + z[1] * z[1];
    let rep = bound_thm31_with(norm, 2.0, &z, &Domain::full_space(1), |r| Ok(zz + 0.5 * r * r))?;
    let closed_form = fock_sharp(&z) + fock_gap() + norm.ln();
    Ok(FockRow {
        z,
        r_star: rep.r_star,
        bound: rep.bound,
        closed_form,
        abs_error: (rep.bound - closed_form).abs(),
        gap_factor: (rep.bound - norm.ln() - fock_sharp(&z)).exp(),
    })
}

/// Twelve entire functions of finite Fock norm: polynomials up to degree 6
/// and `exp(a z)` with `|a| <= 1`.
pub fn fock_test_functions() -> Vec<(String, HoloFunction)> {
    let c = Complex64::new;
    vec![
        ("1".into(), HoloFunction::constant(1.0)),
        ("z".into(), HoloFunction::monomial(1)),
        ("z^2".into(), HoloFunction::monomial(2)),
        ("z^3".into(), HoloFunction::monomial(3)),
        ("z^6".into(), HoloFunction::monomial(6)),
        ("1+z".into(), HoloFunction::poly(&[1.0, 1.0])),
        ("1-2z+z^2/2".into(), HoloFunction::poly(&[1.0, -2.0, 0.5])),
        (
            "(0.3+0.4i)z^4-z+2".into(),
            HoloFunction::Poly { coeffs: vec![[2.0, 0.0], [-1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.3, 0.4]] },
        ),
        ("z^5+iz".into(), HoloFunction::Poly { coeffs: vec![[0.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]] }),
        ("exp(z)".into(), HoloFunction::exp_linear(c(1.0, 0.0))),
        ("exp((0.6+0.8i)z)".into(), HoloFunction::exp_linear(c(0.6, 0.8))),
        ("exp(-0.5iz)".into(), HoloFunction::exp_linear(c(0.0, -0.5))),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockValidity {
    pub name: String,
    /// `||f||_w` by quadrature.
    pub norm: f64,
    pub norm_closed_form: f64,
    pub norm_rel_error: f64,
    /// `min over the grid of bound - ln|f|`; nonnegative when the bound holds.
    pub worst_margin: f64,
    pub points: usize,
}

/// `count x count` points on `[-half, half]^2`.
pub fn square_grid(half: f64, count: usize) -> Vec<[f64; 2]> {
    let axis: Vec<f64> = (0..count).map(|i| -half + 2.0 * half * i as f64 / (count - 1).max(1) as f64).collect();
    axis.iter().flat_map(|&y| axis.iter().map(move |&x| [x, y])).collect()
}

/// Checks `ln|f| <= bound` on `grid` for each test function. The bound is
/// computed once per point at unit norm and shifted by `ln ||f||_w`, which is
/// exactly how the norm enters it.
pub fn fock_validity(grid: &[[f64; 2]], bound_q: &QuadratureSpec, norm_q: &QuadratureSpec) -> Result<Vec<FockValidity>> {
    let plane = Domain::full_space(1);
    let base: Vec<f64> = grid
        .par_iter()
        .map(|z| bound_thm31(1.0, &Weight::AbsSq, 2.0, z, &plane, bound_q).map(|r| r.bound))
        .collect::<std::result::Result<_, _>>()?;
    fock_test_functions()
        .into_iter()
        .map(|(name, f)| {
            let norm = geom::weighted_norm(&f, 2.0, &Weight::AbsSq, &plane, norm_q)?;
            let closed = f.fock_norm_sq().expect("closed form known").sqrt();
            let worst_margin = grid.iter().zip(&base).map(|(z, b)| b + norm.ln() - f.ln_abs(z)).fold(f64::INFINITY, f64::min);
            Ok(FockValidity { name, norm, norm_closed_form: closed, norm_rel_error: (norm / closed - 1.0).abs(), worst_margin, points: grid.len() })
        })
        .collect()
}

// ---------------------------------------------------------------- half-plane

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfplaneRow {
    pub im_z: f64,
    /// Mean-based bound with `v = Im z`, `phi = exp`, `N_phi = 1`.
    pub thm41: f64,
    /// Supremum-based bound with the same data.
    pub sup_based: f64,
    /// `thm41 - sup_based`
    pub difference: f64,
    /// `-2 ln Im z - (2 + 2 ln(1/2))` for `Im z >= 2`, `-Im z` below.
    pub predicted: f64,
    pub r_star_thm41: f64,
    pub r_star_sup_based: f64,
}

/// The difference of the two half-plane bounds. The mean-based bound is
/// always minimized at `r -> Im z`; the sup-based one at `r = 2` once
/// `Im z >= 2`, and at `r -> Im z` below, where the sup exceeds the mean by `r`.
pub fn halfplane_predicted(h: f64) -> f64 {
    if h >= 2.0 {
        -2.0 * h.ln() - (2.0 + 2.0 * 0.5f64.ln())
    } else {
        -h
    }
}

pub fn halfplane_row(h: f64, re: f64, q: &QuadratureSpec) -> Result<HalfplaneRow> {
    let si = sup_inverse(&ConvexFunction::exponential(1.0)?)?;
    let z = [re, h];
    let a = bound_thm41(1.0, &si, &Weight::ImPart, &z, &Domain::HalfPlane, q)?;
    let b = bound_sup_based(1.0, &Weight::ImPart, 1.0, &z, &Domain::HalfPlane, q)?;
    let d = compare_bounds(&a, &b);
    Ok(HalfplaneRow {
        im_z: h,
        thm41: a.bound,
        sup_based: b.bound,
        difference: d.bound,
        predicted: halfplane_predicted(h),
        r_star_thm41: a.r_star,
        r_star_sup_based: b.r_star,
    })
}

// ---------------------------------------------------------------- identities

/// Largest `|thm41 - thm31|` over `count` random fixtures with
/// `phi = exp(p t)`, `v = w / p` and `N_phi = ||f||^p`.
pub fn specialization_check(count: usize, seed: u64, q: &QuadratureSpec) -> Result<f64> {
    let mut rng = rng(seed);
    let plane = Domain::full_space(1);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let z = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let p = rng.random_range(1.0..3.0);
        let norm = rng.random_range(0.5..5.0);
        let w = Weight::Combo {
            terms: vec![
                geom::WeightTerm { coef: rng.random_range(0.5..2.0), weight: Weight::AbsSq },
                geom::WeightTerm { coef: rng.random_range(-1.0..1.0), weight: Weight::re_power(1) },
                geom::WeightTerm { coef: rng.random_range(-1.0..1.0), weight: Weight::ImPart },
                geom::WeightTerm { coef: 1.0, weight: Weight::constant(rng.random_range(-1.0..1.0)) },
            ],
        };
        let a = bound_thm31(norm, &w, p, &z, &plane, q)?;
        let si = sup_inverse(&ConvexFunction::exponential(p)?)?;
        let b = bound_thm41(norm.powf(p), &si, &w.clone().scaled(1.0 / p), &z, &plane, q)?;
        worst = worst.max((a.bound - b.bound).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicSummary {
    /// Largest `|B_v(z, r) - v(z)|` over harmonic `v`.
    pub max_mean_value_error: f64,
    /// Smallest `S_v - B_v` for `v = |z|^2`.
    pub min_sphere_excess: f64,
    pub fixtures: usize,
}

/// Mean-value identities at `count` random `(z, r)` for `Im z`, `Re z^2`,
/// `Re z^3`, and the sphere/ball ordering for `|z|^2`.
pub fn harmonic_check(count: usize, seed: u64, q: &QuadratureSpec) -> Result<HarmonicSummary> {
    let mut rng = rng(seed);
    let harmonic = [Weight::ImPart, Weight::re_power(2), Weight::re_power(3)];
    let mut s = HarmonicSummary { max_mean_value_error: 0.0, min_sphere_excess: f64::INFINITY, fixtures: count };
    for _ in 0..count {
        let z = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let r = rng.random_range(0.1..2.0);
        for v in &harmonic {
            let err = (geom::ball_mean(v, &z, r, q)? - v.eval(&z)).abs();
            s.max_mean_value_error = s.max_mean_value_error.max(err);
        }
        let excess = geom::sphere_mean(&Weight::AbsSq, &z, r, q)? - geom::ball_mean(&Weight::AbsSq, &z, r, q)?;
        s.min_sphere_excess = s.min_sphere_excess.min(excess);
    }
    Ok(s)
}

// ---------------------------------------------------------------- d-bar

/// Three right-hand sides of bump type: the plain bump, a bump times a
/// polynomial in `z` and `conj z`, and the d-bar of a polynomial times a bump.
pub fn bump_family() -> Vec<(String, Source)> {
    vec![
        ("plain bump".into(), Source::plain_bump(1.0)),
        (
            "bump * (z + i conj z / 2)".into(),
            Source::BumpPoly {
                radius: 1.5,
                terms: vec![ZTerm { coef: [1.0, 0.0], z: 1, zbar: 0 }, ZTerm { coef: [0.0, 0.5], z: 0, zbar: 1 }],
            },
        ),
        ("dbar((1 + z/2) bump)".into(), Source::DbarOfBump { radius: 1.0, coeffs: vec![[1.0, 0.0], [0.5, 0.0]] }),
    ]
}

/// Random admissible `(z, r)`: `z` uniform in the disc of radius
/// `z_radius`, `r` uniform on `[r_min, r_max]`.
pub fn random_dbar_points(spec: &RandomPoints, seed: u64) -> Vec<([f64; 2], f64)> {
    let mut rng = rng(seed);
    (0..spec.count)
        .map(|_| {
            let rho = spec.z_radius * rng.random::<f64>().sqrt();
            let theta = rng.random_range(0.0..2.0 * PI);
            let r = if spec.r_max > spec.r_min { rng.random_range(spec.r_min..spec.r_max) } else { spec.r_min };
            ([rho * theta.cos(), rho * theta.sin()], r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbarChainSummary {
    pub name: String,
    pub points: usize,
    pub min_slack: f64,
    /// Max relative d-bar residual of the Cauchy solution on the support grid.
    pub residual: f64,
    pub premise_holds: bool,
    /// Range of the constant each point needed.
    pub const_a_min: f64,
    pub const_a_max: f64,
}

/// Runs the chain for one right-hand side at the given points.
pub fn dbar_chain(name: &str, data: DbarData, points: &[([f64; 2], f64)], quad: DbarQuadrature) -> Result<(DbarChainSummary, Vec<DbarCheckReport>)> {
    let ctx = DbarContext::new(data, quad)?;
    let reports: Vec<DbarCheckReport> = check_dbar_points(&ctx, points).into_iter().collect::<std::result::Result<_, _>>()?;
    let min_slack = reports.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    let (lo, hi) = reports.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.const_a_used), hi.max(r.const_a_used)));
    let summary = DbarChainSummary {
        name: name.to_string(),
        points: reports.len(),
        min_slack,
        residual: dbar_residual(&ctx.solver),
        premise_holds: ctx.premise_holds,
        const_a_min: lo,
        const_a_max: hi,
    };
    Ok((summary, reports))
}

// ---------------------------------------------------------------- verify-all

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckRow {
    /// Passes when `value <= tolerance`.
    fn at_most(check: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { check: check.into(), passed: value <= tolerance, value, tolerance, detail: detail.into() }
    }

    fn failed(check: &str, err: &crate::error::Error) -> Self {
        Self { check: check.into(), passed: false, value: f64::NAN, tolerance: f64::NAN, detail: err.to_string() }
    }
}

fn run_check(check: &str, f: impl FnOnce() -> Result<CheckRow>) -> CheckRow {
    f().unwrap_or_else(|e| CheckRow::failed(check, &e))
}

/// A reduced-size pass over every property; each check yields one row.
pub fn verify_all(seed: u64) -> Vec<CheckRow> {
    let polar = QuadratureSpec::DEFAULT_POLAR;
    let small = QuadratureSpec::PolarGauss { radial: 16, angular: 32 };
    vec![
        run_check("fock_r_star", || {
            let r = fock_row([0.0, 0.0], 1.0, &polar)?;
            Ok(CheckRow::at_most("fock_r_star", (r.r_star - 2f64.sqrt()).abs(), 1e-8, format!("r_star = {}", r.r_star)))
        }),
        run_check("fock_gap_factor", || {
            let r = fock_row([0.0, 0.0], 1.0, &polar)?;
            let err = (r.gap_factor - (E / 2.0).sqrt()).abs();
            Ok(CheckRow::at_most("fock_gap_factor", err, 1e-6, format!("gap_factor = {}", r.gap_factor)))
        }),
        run_check("fock_bound_shape", || {
            let worst = square_grid(1.4, 5)
                .into_iter()
                .map(|z| fock_row(z, 1.0, &small).map(|r| r.abs_error))
                .try_fold(0.0f64, |m, e| e.map(|e| m.max(e)))?;
            Ok(CheckRow::at_most("fock_bound_shape", worst, 1e-6, "max |bound - closed form| on 25 points"))
        }),
        run_check("fock_validity", || {
            let rows = fock_validity(&square_grid(2.0, 5), &small, &polar)?;
            let margin = rows.iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min);
            Ok(CheckRow { check: "fock_validity".into(), passed: margin >= -1e-6, value: margin, tolerance: -1e-6, detail: "min bound - ln|f| over 12 functions".into() })
        }),
        run_check("fock_norms", || {
            let rows = fock_validity(&[[0.0, 0.0]], &small, &polar)?;
            let worst = rows.iter().map(|r| r.norm_rel_error).fold(0.0, f64::max);
            Ok(CheckRow::at_most("fock_norms", worst, 1e-6, "max relative error of ||f||_w"))
        }),
        run_check("halfplane_difference", || {
            let mut worst: f64 = 0.0;
            for h in [2.0, 5.0, 10.0, 100.0] {
                let r = halfplane_row(h, 0.0, &small)?;
                worst = worst.max((r.difference - r.predicted).abs());
            }
            Ok(CheckRow::at_most("halfplane_difference", worst, 1e-9, "difference vs -2 ln h - (2 + 2 ln 1/2)"))
        }),
        run_check("jensen_property", || {
            let s = jensen_property_run(1000, 8, 6, seed)?;
            let bad = s.violations + s.equality_violations + s.mean_bound_violations;
            Ok(CheckRow {
                check: "jensen_property".into(),
                passed: bad == 0,
                value: bad as f64,
                tolerance: 0.0,
                detail: format!("{} trials, worst relative slack {:e}", s.trials, s.worst_slack),
            })
        }),
        run_check("sup_inverse_suite", || {
            let rows = sup_inverse_suite(20, 1000, seed)?;
            let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
            Ok(CheckRow {
                check: "sup_inverse_suite".into(),
                passed: failed.is_empty(),
                value: failed.len() as f64,
                tolerance: 0.0,
                detail: if failed.is_empty() { format!("{} functions", rows.len()) } else { failed.join("; ") },
            })
        }),
        run_check("specialization", || {
            let d = specialization_check(10, seed, &small)?;
            Ok(CheckRow::at_most("specialization", d, 1e-12, "max |thm41 - thm31| with phi = exp(pt), v = w/p"))
        }),
        run_check("harmonic_mean_value", || {
            let h = harmonic_check(20, seed, &small)?;
            Ok(CheckRow::at_most("harmonic_mean_value", h.max_mean_value_error, 1e-8, "max |B_v - v(z)|"))
        }),
        run_check("sphere_vs_ball", || {
            let h = harmonic_check(20, seed, &small)?;
            Ok(CheckRow { check: "sphere_vs_ball".into(), passed: h.min_sphere_excess >= -1e-8, value: h.min_sphere_excess, tolerance: -1e-8, detail: "min S_v - B_v for v = |z|^2".into() })
        }),
        run_check("dbar_chain", || {
            let points = random_dbar_points(&RandomPoints { count: 10, ..RandomPoints::default() }, seed);
            let data = DbarData { g: Source::plain_bump(1.0), v: Weight::constant(0.0), a: 2.0 };
            let (s, _) = dbar_chain("plain bump", data, &points, DbarQuadrature::default())?;
            Ok(CheckRow { check: "dbar_chain".into(), passed: s.min_slack >= -1e-6, value: s.min_slack, tolerance: -1e-6, detail: format!("min slack over {} points", s.points) })
        }),
        run_check("dbar_residual", || {
            let solver = crate::dbar::CauchySolver::new(&Source::plain_bump(1.0), &DbarQuadrature::default().cauchy)?;
            Ok(CheckRow::at_most("dbar_residual", dbar_residual(&solver), 1e-3, "max relative d-bar residual on the support"))
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_cases() {
        use ConditionCase::*;
        assert_eq!(expected_pwl_case(&[(0.0, 1.0), (1.0, 1.0)]), Constant);
        assert_eq!(expected_pwl_case(&[(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]), StrictlyIncreasing);
        assert_eq!(expected_pwl_case(&[(-1.0, 1.0), (0.0, 0.0), (3.0, 3.0)]), BoundedBelowWithTmax);
        assert_eq!(expected_pwl_case(&[(-3.0, 3.0), (0.0, 0.0), (1.0, 1.0)]), Fails);
        assert_eq!(expected_pwl_case(&[(0.0, 1.0), (1.0, 0.0), (2.0, 0.0)]), Fails);
        assert_eq!(expected_pwl_case(&[(0.0, 0.0), (1.0, 0.0), (2.0, 1.0)]), BoundedBelowWithTmax);
    }

    #[test]
    fn small_jensen_run() {
        let s = jensen_property_run(300, 8, 6, 7).unwrap();
        assert_eq!(s.violations, 0);
        assert_eq!(s.equality_violations, 0);
        assert_eq!(s.mean_bound_violations, 0);
        assert!(s.mean_bound_trials > 0);
        assert_eq!(s, jensen_property_run(300, 8, 6, 7).unwrap());
    }

    #[test]
    fn suite_passes() {
        let rows = sup_inverse_suite(20, 200, 3).unwrap();
        for r in &rows {
            assert!(r.passed, "{r:?}");
        }
        assert!(rows.iter().any(|r| r.case == ConditionCase::Fails), "random draws should include failures");
    }

    #[test]
    fn halfplane_rows() {
        let q = QuadratureSpec::PolarGauss { radial: 8, angular: 16 };
        let r = halfplane_row(10.0, 0.0, &q).unwrap();
        assert!((r.difference - r.predicted).abs() < 1e-9);
        let r = halfplane_row(1.0, 0.0, &q).unwrap();
        assert!((r.difference + 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn dbar_points_are_admissible() {
        let pts = random_dbar_points(&RandomPoints::default(), 1);
        assert_eq!(pts.len(), 20);
        assert!(pts.iter().all(|(z, r)| z[0].hypot(z[1]) <= 3.0 && *r >= 0.05 && *r < 0.95));
    }
}
