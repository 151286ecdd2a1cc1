//! Pointwise bounds for `ln|f(z)|` from integral constraints, with the
//! infimum over the radius.
//!
//! All three bounds share the decomposition
//! `bound = mean_term + radius_penalty + norm_term + const_term`
//! evaluated at the minimizing radius `r_star`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexError, SupInverse, SupInverseKind};
use crate::ext::ExtReal;
use crate::geom::{self, ball_mean, GeomError, Domain, Weight};
use crate::minimize::{self, MinimizeError, GRID_LOW};
use crate::quadrature::QuadratureSpec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundsError {
    #[error("point {0:?} is not in the domain")]
    OutsideDomain(Vec<f64>),
    #[error("no radius puts the sup-inverse argument inside the image {0}")]
    EmptyFeasibleSet(String),
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
}

fn invalid(field: &str, message: impl Into<String>) -> BoundsError {
    BoundsError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Mean of the weight over the ball, explicit norm.
    Thm31,
    /// Mean of `v` plus the sup-inverse of the scaled `N_phi`.
    Thm41,
    /// Supremum of the weight over the ball.
    SupBased,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Thm31 => "thm31",
            Method::Thm41 => "thm41",
            Method::SupBased => "sup_based",
        })
    }
}

/// An evaluated bound and its decomposition at `r_star`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub z: Vec<f64>,
    pub r_star: f64,
    pub bound: f64,
    pub mean_term: f64,
    pub radius_penalty: f64,
    pub norm_term: f64,
    pub const_term: f64,
    pub method: Method,
    /// Radii for which the sup-inverse argument lies in the image.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasible_window: Option<[f64; 2]>,
}

impl BoundReport {
    fn new(z: &[f64], r_star: f64, terms: [f64; 4], method: Method) -> Self {
        let [mean_term, radius_penalty, norm_term, const_term] = terms;
        Self {
            z: z.to_vec(),
            r_star,
            bound: mean_term + radius_penalty + norm_term + const_term,
            mean_term,
            radius_penalty,
            norm_term,
            const_term,
            method,
            feasible_window: None,
        }
    }

    pub fn terms_sum(&self) -> f64 {
        self.mean_term + self.radius_penalty + self.norm_term + self.const_term
    }
}

/// `ln(n! / pi^n)`
pub fn ln_dimension_constant(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum::<f64>() - n as f64 * PI.ln()
}

fn radius_limit(z: &[f64], dom: &Domain) -> Result<f64, BoundsError> {
    dom.validate()?;
    if z.len() != 2 * dom.n() || z.iter().any(|x| !x.is_finite()) {
        return Err(invalid("z", format!("need {} finite real coordinates", 2 * dom.n())));
    }
    if !dom.contains(z) {
        return Err(BoundsError::OutsideDomain(z.to_vec()));
    }
    Ok(dom.dist_to_complement(z))
}

fn check_norm(norm: f64) -> Result<(), BoundsError> {
    if !(norm.is_finite() && norm >= 0.0) {
        return Err(invalid("norm", format!("must be finite and >= 0, got {norm}")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<(), BoundsError> {
    if !(p.is_finite() && p > 0.0) {
        return Err(invalid("p", format!("must be finite and > 0, got {p}")));
    }
    Ok(())
}

/// Runs the minimization, remembering the first quadrature error so it is
/// reported rather than silently treated as an infeasible radius.
fn minimize_with(
    mut objective: impl FnMut(f64) -> Result<f64, GeomError>,
    lo: f64,
    hi: f64,
) -> Result<minimize::Minimum, BoundsError> {
    let mut failure = None;
    let res = minimize::minimize_on(
        |r| match objective(r) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
    );
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(res?)
}

fn default_window(r_max: f64) -> (f64, f64) {
    if r_max.is_infinite() {
        (GRID_LOW, f64::INFINITY)
    } else {
        (GRID_LOW * r_max, r_max)
    }
}

/// `ln|f(z)| <= (1/p) inf_r (B_w(z, r) + 2n ln(1/r)) + ln ||f||_w + (1/p) ln(n!/pi^n)`.
pub fn bound_thm31(norm_w: f64, w: &Weight, p: f64, z: &[f64], dom: &Domain, q: &QuadratureSpec) -> Result<BoundReport, BoundsError> {
    check_norm(norm_w)?;
    check_p(p)?;
    radius_limit(z, dom)?;
    w.validate(dom.n())?;
    bound_thm31_with(norm_w, p, z, dom, |r| ball_mean(w, z, r, q))
}

/// [`bound_thm31`] with the ball mean `r -> B_w(z, r)` supplied by the
/// caller, e.g. in closed form.
pub fn bound_thm31_with(
    norm_w: f64,
    p: f64,
    z: &[f64],
    dom: &Domain,
    mean: impl Fn(f64) -> Result<f64, GeomError>,
) -> Result<BoundReport, BoundsError> {
    check_norm(norm_w)?;
    check_p(p)?;
    let r_max = radius_limit(z, dom)?;
    let n = dom.n();
    let penalty = |r: f64| 2.0 * n as f64 / p * (1.0 / r).ln();
    let (lo, hi) = default_window(r_max);
    let m = minimize_with(|r| Ok(mean(r)? / p + penalty(r)), lo, hi)?;
    let r = m.r_star;
    let terms = [mean(r)? / p, penalty(r), norm_w.ln(), ln_dimension_constant(n) / p];
    Ok(BoundReport::new(z, r, terms, Method::Thm31))
}

/// Radii `r` for which `n! N / (pi^n r^(2n))` lies in the closure of `image`,
/// intersected with `(0, r_max)`. `None` if empty.
fn feasible_window(k: f64, n: usize, image: &crate::ext::Interval, r_max: f64) -> Option<(f64, f64)> {
    let e = 1.0 / (2.0 * n as f64);
    let lo_y = image.lo.to_f64();
    let hi_y = image.hi.to_f64();
    let (lo, hi) = if k == 0.0 {
        if image.contains(ExtReal::ZERO) {
            (0.0, f64::INFINITY)
        } else {
            return None;
        }
    } else if k > 0.0 {
        // arg = k / r^(2n) is decreasing from +inf to 0
        let lo = if hi_y <= 0.0 { return None } else if hi_y.is_infinite() { 0.0 } else { (k / hi_y).powf(e) };
        let hi = if lo_y <= 0.0 { f64::INFINITY } else { (k / lo_y).powf(e) };
        (lo, hi)
    } else {
        // arg is negative, increasing from -inf to 0
        let lo = if lo_y >= 0.0 { return None } else if lo_y.is_infinite() { 0.0 } else { (-k / -lo_y).powf(e) };
        let hi = if hi_y >= 0.0 { f64::INFINITY } else { (-k / -hi_y).powf(e) };
        (lo, hi)
    };
    let hi = hi.min(r_max);
    (lo < hi).then_some((lo, hi))
}

/// `ln|f(z)| <= inf_r (B_v(z, r) + si(n! N_phi / (pi^n r^(2n))))`.
///
/// Radii whose argument falls outside the image of `phi` are excluded. For a
/// logarithmic sup-inverse `ln(y)/p` the sup-inverse term splits exactly as in
/// [`bound_thm31`]; otherwise the whole sup-inverse term is reported as the
/// radius penalty and the norm and constant terms are zero.
pub fn bound_thm41(n_phi_value: f64, si: &SupInverse, v: &Weight, z: &[f64], dom: &Domain, q: &QuadratureSpec) -> Result<BoundReport, BoundsError> {
    if !n_phi_value.is_finite() {
        return Err(invalid("n_phi", format!("must be finite, got {n_phi_value}")));
    }
    let r_max = radius_limit(z, dom)?;
    let n = dom.n();
    v.validate(n)?;
    let nf = n as f64;
    let k = (1..=n).map(|j| j as f64).product::<f64>() / PI.powi(n as i32) * n_phi_value;
    let Some((w_lo, w_hi)) = feasible_window(k, n, si.domain(), r_max) else {
        return Err(BoundsError::EmptyFeasibleSet(si.domain().to_string()));
    };
    let arg = |r: f64| k / r.powi(2 * n as i32);
    let mean = |r: f64| ball_mean(v, z, r, q);
    let (lo, hi) = if w_lo > 0.0 {
        (w_lo * (1.0 + 1e-12), w_hi)
    } else {
        default_window(w_hi)
    };
    if !(hi > lo) {
        return Err(BoundsError::EmptyFeasibleSet(si.domain().to_string()));
    }
    let mut report = match si.kind() {
        SupInverseKind::Log { p } if n_phi_value > 0.0 => {
            let penalty = |r: f64| 2.0 * nf / p * (1.0 / r).ln();
            let m = minimize_with(|r| Ok(mean(r)? + penalty(r)), lo, hi)?;
            let r = m.r_star;
            let terms = [mean(r)?, penalty(r), n_phi_value.ln() / p, ln_dimension_constant(n) / p];
            BoundReport::new(z, r, terms, Method::Thm41)
        }
        _ => {
            let si_term = |r: f64| -> f64 {
                let y = arg(r);
                if si.domain().contains_f64(y) {
                    si.eval_f64(y).unwrap_or(f64::INFINITY)
                } else {
                    f64::INFINITY
                }
            };
            let m = minimize_with(|r| Ok(mean(r)? + si_term(r)), lo, hi)?;
            let r = m.r_star;
            let terms = [mean(r)?, si_term(r), 0.0, 0.0];
            BoundReport::new(z, r, terms, Method::Thm41)
        }
    };
    report.feasible_window = Some([w_lo, w_hi]);
    Ok(report)
}

/// `ln|f(z)| <= (1/p) inf_r (sup_{B(z,r)} w + 2n ln(1/r)) + ln ||f||_w + (1/p) ln(n!/pi^n)`,
/// the supremum taken over the quadrature and boundary nodes.
pub fn bound_sup_based(norm_w: f64, w: &Weight, p: f64, z: &[f64], dom: &Domain, q: &QuadratureSpec) -> Result<BoundReport, BoundsError> {
    check_norm(norm_w)?;
    check_p(p)?;
    let r_max = radius_limit(z, dom)?;
    let n = dom.n();
    w.validate(n)?;
    let sup = |r: f64| geom::ball_sup_fn(|x| w.eval(x), z, r, q);
    let penalty = |r: f64| 2.0 * n as f64 / p * (1.0 / r).ln();
    let (lo, hi) = default_window(r_max);
    let m = minimize_with(|r| Ok(sup(r)? / p + penalty(r)), lo, hi)?;
    let r = m.r_star;
    let terms = [sup(r)? / p, penalty(r), norm_w.ln(), ln_dimension_constant(n) / p];
    Ok(BoundReport::new(z, r, terms, Method::SupBased))
}

/// Term-by-term difference `a - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundComparison {
    pub bound: f64,
    pub mean_term: f64,
    pub radius_penalty: f64,
    pub norm_term: f64,
    pub const_term: f64,
    pub r_star_a: f64,
    pub r_star_b: f64,
    pub same_point: bool,
}

pub fn compare_bounds(a: &BoundReport, b: &BoundReport) -> BoundComparison {
    BoundComparison {
        bound: a.bound - b.bound,
        mean_term: a.mean_term - b.mean_term,
        radius_penalty: a.radius_penalty - b.radius_penalty,
        norm_term: a.norm_term - b.norm_term,
        const_term: a.const_term - b.const_term,
        r_star_a: a.r_star,
        r_star_b: b.r_star,
        same_point: a.z == b.z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{sup_inverse, ConvexFunction};

    const POLAR: QuadratureSpec = QuadratureSpec::DEFAULT_POLAR;
    const SMALL: QuadratureSpec = QuadratureSpec::PolarGauss { radial: 8, angular: 16 };

    fn fock_closed_form(z: &[f64]) -> f64 {
        (1.0 / PI.sqrt()).ln() + (z[0] * z[0] + z[1] * z[1]) / 2.0 + (std::f64::consts::E / 2.0).sqrt().ln()
    }

    #[test]
    fn fock_at_origin() {
        let plane = Domain::full_space(1);
        let rep = bound_thm31(1.0, &Weight::AbsSq, 2.0, &[0.0, 0.0], &plane, &POLAR).unwrap();
        assert!((rep.r_star - 2f64.sqrt()).abs() < 1e-8);
        assert!((rep.bound - fock_closed_form(&[0.0, 0.0])).abs() < 1e-9);
        assert!((rep.bound - rep.terms_sum()).abs() <= 1e-12);
        let gap = rep.bound.exp() * PI.sqrt();
        assert!((gap - (std::f64::consts::E / 2.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn fock_translates() {
        let plane = Domain::full_space(1);
        for z in [[1.0, 0.5], [-1.5, 1.2], [0.0, -2.0]] {
            let rep = bound_thm31(1.0, &Weight::AbsSq, 2.0, &z, &plane, &SMALL).unwrap();
            assert!((rep.bound - fock_closed_form(&z)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_norm_gives_minus_infinity() {
        let rep = bound_thm31(0.0, &Weight::AbsSq, 2.0, &[0.0, 0.0], &Domain::full_space(1), &SMALL).unwrap();
        assert_eq!(rep.bound, f64::NEG_INFINITY);
    }

    #[test]
    fn outside_domain() {
        let err = bound_thm31(1.0, &Weight::ImPart, 1.0, &[0.0, -1.0], &Domain::HalfPlane, &SMALL).unwrap_err();
        assert!(matches!(err, BoundsError::OutsideDomain(_)));
    }

    #[test]
    fn thm41_specializes_to_thm31() {
        let plane = Domain::full_space(1);
        let z = [0.4, -0.3];
        let p = 2.0;
        let norm = PI.sqrt();
        let a = bound_thm31(norm, &Weight::AbsSq, p, &z, &plane, &SMALL).unwrap();
        let si = sup_inverse(&ConvexFunction::exponential(p).unwrap()).unwrap();
        let b = bound_thm41(norm.powf(p), &si, &Weight::AbsSq.scaled(1.0 / p), &z, &plane, &SMALL).unwrap();
        assert!((a.bound - b.bound).abs() <= 1e-12, "{} vs {}", a.bound, b.bound);
    }

    #[test]
    fn thm41_zero_argument() {
        let plane = Domain::full_space(1);
        let si = sup_inverse(&ConvexFunction::power(2.0).unwrap()).unwrap();
        let rep = bound_thm41(0.0, &si, &Weight::AbsSq, &[1.0, 0.0], &plane, &SMALL).unwrap();
        // inf_r (1 + r^2 / 2) approached at tiny r
        assert!((rep.bound - 1.0).abs() < 1e-9);
        assert_eq!(rep.radius_penalty, 0.0);
    }

    #[test]
    fn thm41_empty_feasible_set() {
        // exponential has image (0, inf); N = 0 never reaches it
        let si = sup_inverse(&ConvexFunction::exponential(1.0).unwrap()).unwrap();
        let err = bound_thm41(0.0, &si, &Weight::AbsSq, &[0.0, 0.0], &Domain::full_space(1), &SMALL).unwrap_err();
        assert!(matches!(err, BoundsError::EmptyFeasibleSet(_)));
    }

    #[test]
    fn thm41_window_restricts_radius() {
        // image [0, 1]: need 1/(pi r^2) <= 1, i.e. r >= 1/sqrt(pi)
        let phi = ConvexFunction::piecewise_linear(vec![(0.0, 0.0), (1.0, 1.0)], &[]).unwrap();
        let si = sup_inverse(&phi).unwrap();
        let rep = bound_thm41(1.0, &si, &Weight::constant(0.0), &[0.0, 0.0], &Domain::full_space(1), &SMALL).unwrap();
        let [lo, _] = rep.feasible_window.unwrap();
        assert!((lo - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!(rep.r_star >= lo);
    }

    #[test]
    fn half_plane_example() {
        let si = sup_inverse(&ConvexFunction::exponential(1.0).unwrap()).unwrap();
        for h in [0.5, 2.0, 10.0] {
            let z = [0.3, h];
            let a = bound_thm41(1.0, &si, &Weight::ImPart, &z, &Domain::HalfPlane, &POLAR).unwrap();
            let want = h + 2.0 * (1.0 / h).ln() + (1.0 / PI).ln();
            assert!((a.bound - want).abs() < 1e-9, "h={h}: {} vs {want}", a.bound);
            assert!((a.r_star - h).abs() < 1e-9 * h);
            let b = bound_sup_based(1.0, &Weight::ImPart, 1.0, &z, &Domain::HalfPlane, &POLAR).unwrap();
            assert!(a.bound <= b.bound + 1e-9);
        }
    }

    #[test]
    fn sup_based_penalty() {
        for h in [2.0, 5.0] {
            let b = bound_sup_based(1.0, &Weight::ImPart, 1.0, &[0.0, h], &Domain::HalfPlane, &POLAR).unwrap();
            let part = b.mean_term + b.radius_penalty - h;
            assert!((part - (2.0 + 2.0 * 0.5f64.ln())).abs() < 1e-9);
        }
        let h = 1.0;
        let b = bound_sup_based(1.0, &Weight::ImPart, 1.0, &[0.0, h], &Domain::HalfPlane, &POLAR).unwrap();
        // r -> h: h + h + 2 ln(1/h)
        assert!((b.mean_term + b.radius_penalty - (2.0 * h + 2.0 * (1.0 / h).ln())).abs() < 1e-9);
    }

    #[test]
    fn half_plane_difference() {
        // the mean-based bound undercuts the sup-based one by 2 ln h + 2 + 2 ln(1/2)
        let si = sup_inverse(&ConvexFunction::exponential(1.0).unwrap()).unwrap();
        for h in [2.0, 5.0, 10.0, 100.0] {
            let z = [0.0, h];
            let a = bound_thm41(1.0, &si, &Weight::ImPart, &z, &Domain::HalfPlane, &POLAR).unwrap();
            let b = bound_sup_based(1.0, &Weight::ImPart, 1.0, &z, &Domain::HalfPlane, &POLAR).unwrap();
            let d = compare_bounds(&a, &b);
            let want = -2.0 * h.ln() - (2.0 + 2.0 * 0.5f64.ln());
            assert!((d.bound - want).abs() < 1e-9, "h={h}: {} vs {want}", d.bound);
            assert!(d.same_point);
        }
    }

    #[test]
    fn constant_weight_sup_equals_mean() {
        let w = Weight::constant(0.7);
        let a = bound_thm31(2.0, &w, 1.0, &[0.0, 0.0], &Domain::Ball { center: vec![0.0, 0.0], radius: 1.0 }, &SMALL).unwrap();
        let b = bound_sup_based(2.0, &w, 1.0, &[0.0, 0.0], &Domain::Ball { center: vec![0.0, 0.0], radius: 1.0 }, &SMALL).unwrap();
        assert!((a.bound - b.bound).abs() < 1e-12);
    }

    #[test]
    fn compare_identical() {
        let rep = bound_thm31(1.0, &Weight::AbsSq, 2.0, &[0.0, 0.0], &Domain::full_space(1), &SMALL).unwrap();
        let d = compare_bounds(&rep, &rep);
        assert_eq!(d.bound, 0.0);
        assert_eq!(d.mean_term, 0.0);
    }
}
