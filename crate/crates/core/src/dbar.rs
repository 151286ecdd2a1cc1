//! Averaged growth bounds for solutions of `dbar f = g` in the plane.
//!
//! The solution is produced by the solid Cauchy transform
//! `f(z) = -(1/pi) int g(zeta) / (zeta - z) dlambda(zeta)`, evaluated in polar
//! coordinates centred at `z` (which cancels the `1/|zeta - z|` singularity)
//! and, far from the support, by its multipole expansion.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{self, Coef, Domain, GeomError, Weight, LN_ABS_FLOOR};
use crate::quadrature::{self, Neumaier, QuadratureError, QuadratureSpec};

/// Multipole terms used beyond twice the support radius; the truncation
/// error there is below `2^-48`.
const MULTIPOLE_TERMS: usize = 48;
/// Finite-difference step for the residual check.
pub const FD_STEP: f64 = 1e-4;
/// Points per axis of the residual grid.
pub const FD_GRID: usize = 41;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DbarError {
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("radius {r} violates 0 < r < min(1, dist) = {limit}")]
    RadiusViolation { r: f64, limit: f64 },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

fn invalid(field: &str, message: impl Into<String>) -> DbarError {
    DbarError::Invalid { field: field.into(), message: message.into() }
}

/// `coef * z^z * conj(z)^zbar`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZTerm {
    pub coef: Coef,
    #[serde(default)]
    pub z: u32,
    #[serde(default)]
    pub zbar: u32,
}

/// Smooth compactly supported right-hand sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Source {
    /// `p(z, conj z) * exp(1 / (|z/R|^2 - 1))` on `|z| < R`, zero outside.
    BumpPoly { radius: f64, terms: Vec<ZTerm> },
    /// `dbar(q * chi)` with `chi` the bump of radius `R` and `q` a polynomial
    /// in `z`; the compactly supported solution is `q * chi`.
    DbarOfBump { radius: f64, coeffs: Vec<Coef> },
    Sum { parts: Vec<Source> },
}

/// `exp(1 / (|z/R|^2 - 1))` inside the disc, `0` outside.
pub fn bump(z: Complex64, radius: f64) -> f64 {
    let s = z.norm_sqr() / (radius * radius);
    if s >= 1.0 {
        0.0
    } else {
        (1.0 / (s - 1.0)).exp()
    }
}

/// `dbar` of [`bump`]: `-chi z / (R^2 (s - 1)^2)` with `s = |z/R|^2`.
pub fn dbar_bump(z: Complex64, radius: f64) -> Complex64 {
    let r2 = radius * radius;
    let s = z.norm_sqr() / r2;
    if s >= 1.0 {
        return Complex64::new(0.0, 0.0);
    }
    let chi = (1.0 / (s - 1.0)).exp();
    -z * (chi / (r2 * (s - 1.0) * (s - 1.0)))
}

fn horner(coeffs: &[Coef], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + Complex64::new(c[0], c[1]))
}

impl Source {
    pub fn zero() -> Self {
        Source::BumpPoly { radius: 1.0, terms: vec![] }
    }

    /// The plain bump of radius `r` and height `e^-1` at the origin.
    pub fn plain_bump(radius: f64) -> Self {
        Source::BumpPoly { radius, terms: vec![ZTerm { coef: [1.0, 0.0], z: 0, zbar: 0 }] }
    }

    pub fn validate(&self) -> Result<(), DbarError> {
        let fin = |c: &Coef| c[0].is_finite() && c[1].is_finite();
        match self {
            Source::BumpPoly { radius, terms } => {
                check_radius(*radius)?;
                if !terms.iter().all(|t| fin(&t.coef)) {
                    return Err(invalid("g.terms", "coefficients must be finite"));
                }
            }
            Source::DbarOfBump { radius, coeffs } => {
                check_radius(*radius)?;
                if !coeffs.iter().all(fin) {
                    return Err(invalid("g.coeffs", "coefficients must be finite"));
                }
            }
            Source::Sum { parts } => {
                if parts.is_empty() {
                    return Err(invalid("g.parts", "need at least one part"));
                }
                parts.iter().try_for_each(Source::validate)?;
            }
        }
        Ok(())
    }

    /// `g` vanishes outside `|z| >= support_radius`.
    pub fn support_radius(&self) -> f64 {
        match self {
            Source::BumpPoly { radius, .. } | Source::DbarOfBump { radius, .. } => *radius,
            Source::Sum { parts } => parts.iter().map(Source::support_radius).fold(0.0, f64::max),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Source::BumpPoly { radius, terms } => {
                let b = bump(z, *radius);
                if b == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let zc = z.conj();
                let p: Complex64 = terms.iter().map(|t| Complex64::new(t.coef[0], t.coef[1]) * z.powu(t.z) * zc.powu(t.zbar)).sum();
                p * b
            }
            Source::DbarOfBump { radius, coeffs } => horner(coeffs, z) * dbar_bump(z, *radius),
            Source::Sum { parts } => parts.iter().map(|g| g.eval(z)).sum(),
        }
    }

    /// The compactly supported solution, where known in closed form.
    pub fn exact_solution(&self, z: Complex64) -> Option<Complex64> {
        match self {
            Source::DbarOfBump { radius, coeffs } => Some(horner(coeffs, z) * bump(z, *radius)),
            Source::Sum { parts } => parts.iter().map(|g| g.exact_solution(z)).sum(),
            Source::BumpPoly { terms, .. } if terms.is_empty() => Some(Complex64::new(0.0, 0.0)),
            Source::BumpPoly { .. } => None,
        }
    }

    pub fn scaled(&self, c: Complex64) -> Source {
        let mul = |k: &Coef| {
            let v = Complex64::new(k[0], k[1]) * c;
            [v.re, v.im]
        };
        match self {
            Source::BumpPoly { radius, terms } => Source::BumpPoly {
                radius: *radius,
                terms: terms.iter().map(|t| ZTerm { coef: mul(&t.coef), ..t.clone() }).collect(),
            },
            Source::DbarOfBump { radius, coeffs } => Source::DbarOfBump { radius: *radius, coeffs: coeffs.iter().map(mul).collect() },
            Source::Sum { parts } => Source::Sum { parts: parts.iter().map(|g| g.scaled(c)).collect() },
        }
    }
}

fn check_radius(r: f64) -> Result<(), DbarError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid("g.radius", format!("must be finite and > 0, got {r}")));
    }
    Ok(())
}

fn polar_orders(q: &QuadratureSpec) -> Result<(usize, usize), DbarError> {
    q.validate()?;
    match *q {
        QuadratureSpec::PolarGauss { radial, angular } => Ok((radial, angular)),
        QuadratureSpec::Mc { .. } => Err(QuadratureError::Unsupported { rule: "mc", dim: 2 }.into()),
    }
}

/// `-(1/pi) int g(zeta) / (zeta - z) dlambda(zeta)` by direct quadrature.
///
/// Inside the support the rule is polar around `z`: Gauss-Legendre along the
/// chord of each ray through the support disc, trapezoid in the angle.
pub fn cauchy_solve(g: &Source, z: Complex64, q: &QuadratureSpec) -> Result<Complex64, DbarError> {
    g.validate()?;
    let (radial, angular) = polar_orders(q)?;
    Ok(cauchy_direct(g, z, radial, angular))
}

fn cauchy_direct(g: &Source, z: Complex64, radial: usize, angular: usize) -> Complex64 {
    let big_r = g.support_radius();
    if z.norm() >= big_r {
        return cauchy_exterior(g, z, big_r, radial, angular);
    }
    let dtheta = 2.0 * PI / angular as f64;
    let unit = quadrature::gauss_legendre(0.0, 1.0, radial);
    let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
    let zz = z.norm_sqr();
    for k in 0..angular {
        let u = Complex64::from_polar(1.0, k as f64 * dtheta);
        // ray z + rho u meets |zeta| = R where rho^2 + 2 b rho + |z|^2 - R^2 = 0
        let b = (z.conj() * u).re;
        let disc = b * b - zz + big_r * big_r;
        if disc <= 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        let (r1, r2) = ((-b - sq).max(0.0), -b + sq);
        if r2 <= 0.0 {
            continue;
        }
        let len = r2 - r1;
        let mut ray = Complex64::new(0.0, 0.0);
        for &(t, w) in &unit {
            let rho = r1 + len * t;
            ray += g.eval(z + u * rho) * (w * len);
        }
        // g(zeta) / (zeta - z) dlambda = g e^{-i theta} drho dtheta
        let term = ray * u.conj() * dtheta;
        re.add(term.re);
        im.add(term.im);
    }
    Complex64::new(re.total(), im.total()) * (-1.0 / PI)
}

/// For `z` outside the support the kernel is smooth on it, so a polar rule
/// centred at the origin avoids the tangent rays of one centred at `z`.
fn cauchy_exterior(g: &Source, z: Complex64, big_r: f64, radial: usize, angular: usize) -> Complex64 {
    let dtheta = 2.0 * PI / angular as f64;
    let radii = quadrature::gauss_legendre(0.0, big_r, radial);
    let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
    for k in 0..angular {
        let u = Complex64::from_polar(1.0, k as f64 * dtheta);
        for &(t, w) in &radii {
            let zeta = u * t;
            let term = g.eval(zeta) / (zeta - z) * (w * t * dtheta);
            re.add(term.re);
            im.add(term.im);
        }
    }
    Complex64::new(re.total(), im.total()) * (-1.0 / PI)
}

/// Cauchy transform with precomputed multipole moments for fast evaluation
/// away from the support.
#[derive(Debug, Clone)]
pub struct CauchySolver {
    g: Source,
    radial: usize,
    angular: usize,
    /// `m_k = (1/pi) int g zeta^k`, so that `f(z) = sum m_k z^{-k-1}` for `|z| > R`.
    moments: Vec<Complex64>,
}

impl CauchySolver {
    pub fn new(g: &Source, q: &QuadratureSpec) -> Result<Self, DbarError> {
        g.validate()?;
        let (radial, angular) = polar_orders(q)?;
        let big_r = g.support_radius();
        let mq = QuadratureSpec::PolarGauss { radial: radial.max(64), angular: angular.max(2 * MULTIPOLE_TERMS + 32) };
        let nodes = quadrature::ball_nodes(&[0.0, 0.0], 0.0, big_r, &mq)?;
        let mut acc = vec![(Neumaier::default(), Neumaier::default()); MULTIPOLE_TERMS];
        for (p, w) in nodes.iter() {
            let zeta = Complex64::new(p[0], p[1]);
            let mut v = g.eval(zeta) * w;
            for a in acc.iter_mut() {
                a.0.add(v.re);
                a.1.add(v.im);
                v *= zeta;
            }
        }
        let moments = acc.iter().map(|(re, im)| Complex64::new(re.total(), im.total()) / PI).collect();
        Ok(Self { g: g.clone(), radial, angular, moments })
    }

    pub fn source(&self) -> &Source {
        &self.g
    }

    pub fn moments(&self) -> &[Complex64] {
        &self.moments
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        if z.norm() >= 2.0 * self.g.support_radius() {
            let inv = 1.0 / z;
            let mut pow = inv;
            let mut s = Complex64::new(0.0, 0.0);
            for m in &self.moments {
                s += m * pow;
                pow *= inv;
            }
            s
        } else {
            cauchy_direct(&self.g, z, self.radial, self.angular)
        }
    }

    pub fn eval_real(&self, p: &[f64]) -> Complex64 {
        self.eval(Complex64::new(p[0], p[1]))
    }
}

/// Maximum of `|dbar f - g| / max|g|` on a `FD_GRID x FD_GRID` grid over the
/// support square, with `dbar` by central differences of step `FD_STEP`.
pub fn dbar_residual(solver: &CauchySolver) -> f64 {
    let big_r = solver.g.support_radius();
    let pts: Vec<Complex64> = (0..FD_GRID * FD_GRID)
        .map(|k| {
            let (i, j) = (k % FD_GRID, k / FD_GRID);
            let t = |i: usize| -big_r + 2.0 * big_r * i as f64 / (FD_GRID - 1) as f64;
            Complex64::new(t(i), t(j))
        })
        .collect();
    let h = FD_STEP;
    let errs: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&z| {
            let dx = (solver.eval(z + h) - solver.eval(z - h)) / (2.0 * h);
            let dy = (solver.eval(z + Complex64::new(0.0, h)) - solver.eval(z - Complex64::new(0.0, h))) / (2.0 * h);
            let dbar = (dx + Complex64::i() * dy) * 0.5;
            let g = solver.g.eval(z);
            ((dbar - g).norm(), g.norm())
        })
        .collect();
    let max_err = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let max_g = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    if max_g == 0.0 {
        max_err
    } else {
        max_err / max_g
    }
}

/// Data of the d-bar problem: the right-hand side, the weight `v` and `a > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbarData {
    pub g: Source,
    pub v: Weight,
    pub a: f64,
}

impl DbarData {
    pub fn validate(&self) -> Result<(), DbarError> {
        self.g.validate()?;
        self.v.validate(1)?;
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(invalid("a", format!("must be finite and > 0, got {}", self.a)));
        }
        Ok(())
    }
}

/// `J(g, v) = int |g|^2 e^{-v} (1 + |z|^2)^(2 - a) dlambda` over the support.
pub fn j_functional(d: &DbarData, q: &QuadratureSpec) -> Result<f64, DbarError> {
    d.validate()?;
    let dom = Domain::Ball { center: vec![0.0, 0.0], radius: d.g.support_radius() };
    Ok(geom::integrate_domain(&dom, q, |p| {
        let z = Complex64::new(p[0], p[1]);
        d.g.eval(z).norm_sqr() * (-d.v.eval(p)).exp() * (1.0 + z.norm_sqr()).powf(2.0 - d.a)
    })?)
}

/// `int_C |f|^2 e^{-v} (1 + |z|^2)^(-a) dlambda` for the Cauchy solution.
pub fn weighted_solution_norm_sq(d: &DbarData, solver: &CauchySolver, q: &QuadratureSpec) -> Result<f64, DbarError> {
    d.validate()?;
    Ok(geom::integrate_domain(&Domain::full_space(1), q, |p| {
        solver.eval_real(p).norm_sqr() * (-d.v.eval(p)).exp() * (1.0 + p[0] * p[0] + p[1] * p[1]).powf(-d.a)
    })?)
}

/// Quadrature orders for the d-bar check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbarQuadrature {
    /// Polar rule around each point for the Cauchy transform.
    pub cauchy: QuadratureSpec,
    /// Rule for means over `B(z, r)`.
    pub ball: QuadratureSpec,
    /// Rule for `J` and the weighted norm of the solution.
    pub norm: QuadratureSpec,
}

impl Default for DbarQuadrature {
    fn default() -> Self {
        Self {
            cauchy: QuadratureSpec::PolarGauss { radial: 64, angular: 256 },
            ball: QuadratureSpec::PolarGauss { radial: 16, angular: 32 },
            norm: QuadratureSpec::PolarGauss { radial: 32, angular: 64 },
        }
    }
}

/// Quantities that do not depend on `(z, r)`.
#[derive(Debug, Clone)]
pub struct DbarContext {
    pub data: DbarData,
    pub solver: CauchySolver,
    pub quadrature: DbarQuadrature,
    pub j: f64,
    /// `int |f|^2 e^{-v} (1 + |z|^2)^(-a)`
    pub weighted_norm_sq: f64,
    /// Whether the weighted estimate `weighted_norm_sq <= J / a` holds.
    pub premise_holds: bool,
}

impl DbarContext {
    pub fn new(data: DbarData, quadrature: DbarQuadrature) -> Result<Self, DbarError> {
        data.validate()?;
        let solver = CauchySolver::new(&data.g, &quadrature.cauchy)?;
        let j = j_functional(&data, &quadrature.norm)?;
        let weighted_norm_sq = weighted_solution_norm_sq(&data, &solver, &quadrature.norm)?;
        let premise_holds = weighted_norm_sq <= j / data.a;
        Ok(Self { data, solver, quadrature, j, weighted_norm_sq, premise_holds })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbarCheckReport {
    pub z: [f64; 2],
    pub r: f64,
    /// `B_{ln|f|}(z, r)`
    pub lhs: f64,
    /// `(1/2)(B_v + a B_{ln(1+|.|^2)} + ln(1/lambda(B)) + ln M)` with
    /// `M = J/a` when the weighted estimate holds and the measured norm otherwise.
    pub rhs: f64,
    pub slack: f64,
    /// `a B_{ln(1+|.|^2)}(z, r) - 2a ln(1 + |z|)`: the constant this point needs.
    pub const_a_used: f64,
    pub premise_holds: bool,
    /// The first step of the chain, with the measured weighted norm.
    pub rhs_measured: f64,
    pub mean_v: f64,
    pub mean_log_weight: f64,
    pub j: f64,
    pub weighted_norm_sq: f64,
    /// `f` vanishes identically or `J = 0`.
    pub degenerate: bool,
}

/// Checks the averaged bound for `ln|f|` at `(z, r)`, `0 < r < 1`.
pub fn check_dbar_bound(ctx: &DbarContext, z: [f64; 2], r: f64) -> Result<DbarCheckReport, DbarError> {
    if !(z[0].is_finite() && z[1].is_finite()) {
        return Err(invalid("z", "must be finite"));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(DbarError::RadiusViolation { r, limit: 1.0 });
    }
    let d = &ctx.data;
    let q = &ctx.quadrature.ball;
    let lhs = geom::ball_mean_fn(|p| ctx.solver.eval_real(p).norm().ln().max(LN_ABS_FLOOR), &z, r, q)?;
    let mean_v = geom::ball_mean(&d.v, &z, r, q)?;
    let mean_log_weight = geom::ball_mean(&Weight::LogOnePlusAbsSq, &z, r, q)?;
    let ln_inv_volume = -(geom::ball_volume(1, r)).ln();
    let m = if ctx.premise_holds { ctx.j / d.a } else { ctx.weighted_norm_sq };
    let common = mean_v + d.a * mean_log_weight + ln_inv_volume;
    let rhs = 0.5 * (common + m.ln());
    let rhs_measured = 0.5 * (common + ctx.weighted_norm_sq.ln());
    let zabs = z[0].hypot(z[1]);
    Ok(DbarCheckReport {
        z,
        r,
        lhs,
        rhs,
        slack: rhs - lhs,
        const_a_used: d.a * mean_log_weight - 2.0 * d.a * zabs.ln_1p(),
        premise_holds: ctx.premise_holds,
        rhs_measured,
        mean_v,
        mean_log_weight,
        j: ctx.j,
        weighted_norm_sq: ctx.weighted_norm_sq,
        degenerate: ctx.j == 0.0 || ctx.weighted_norm_sq == 0.0,
    })
}

/// Checks many points in parallel; results keep the input order.
pub fn check_dbar_points(ctx: &DbarContext, points: &[([f64; 2], f64)]) -> Vec<Result<DbarCheckReport, DbarError>> {
    points.par_iter().map(|&(z, r)| check_dbar_bound(ctx, z, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: QuadratureSpec = QuadratureSpec::PolarGauss { radial: 64, angular: 96 };

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_source() {
        assert_eq!(cauchy_solve(&Source::zero(), c(0.3, 0.1), &Q).unwrap(), c(0.0, 0.0));
        let d = DbarData { g: Source::zero(), v: Weight::constant(0.0), a: 2.0 };
        assert_eq!(j_functional(&d, &Q).unwrap(), 0.0);
    }

    #[test]
    fn recovers_compactly_supported_solution() {
        let g = Source::DbarOfBump { radius: 1.0, coeffs: vec![[1.0, 0.0], [0.0, 0.5]] };
        for z in [c(0.0, 0.0), c(0.3, -0.4), c(0.9, 0.1), c(1.5, 0.0), c(-0.2, 0.95)] {
            let f = cauchy_solve(&g, z, &Q).unwrap();
            let exact = g.exact_solution(z).unwrap();
            assert!((f - exact).norm() < 1e-6, "z={z}: {f} vs {exact}");
        }
    }

    #[test]
    fn multipole_matches_direct() {
        let g = Source::BumpPoly { radius: 1.0, terms: vec![ZTerm { coef: [1.0, 0.0], z: 0, zbar: 0 }, ZTerm { coef: [0.3, 0.2], z: 1, zbar: 2 }] };
        let solver = CauchySolver::new(&g, &Q).unwrap();
        for z in [c(2.0, 0.0), c(-1.5, 1.5), c(0.0, 3.0)] {
            let far = solver.eval(z);
            let direct = cauchy_solve(&g, z, &Q).unwrap();
            assert!((far - direct).norm() < 1e-9 * direct.norm().max(1e-3), "{far} vs {direct}");
        }
    }

    #[test]
    fn linearity() {
        let g1 = Source::plain_bump(1.0);
        // equal radii, so both parts are sampled on the same nodes
        let g2 = Source::DbarOfBump { radius: 1.0, coeffs: vec![[0.0, 1.0]] };
        let sum = Source::Sum { parts: vec![g1.clone(), g2.clone()] };
        let z = c(0.2, 0.7);
        let a = cauchy_solve(&sum, z, &Q).unwrap();
        let b = cauchy_solve(&g1, z, &Q).unwrap() + cauchy_solve(&g2, z, &Q).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn j_scales_quadratically() {
        let d = DbarData { g: Source::plain_bump(1.0), v: Weight::constant(0.0), a: 2.0 };
        let j = j_functional(&d, &Q).unwrap();
        // with a = 2 and v = 0, J is the plain L^2 norm of the bump
        let direct = geom::integrate_domain(&Domain::Ball { center: vec![0.0, 0.0], radius: 1.0 }, &Q, |p| bump(c(p[0], p[1]), 1.0).powi(2)).unwrap();
        assert!((j - direct).abs() < 1e-15);
        let d3 = DbarData { g: d.g.scaled(c(0.0, 3.0)), ..d.clone() };
        assert!((j_functional(&d3, &Q).unwrap() / j - 9.0).abs() < 1e-12);
    }

    #[test]
    fn residual_is_small() {
        let solver = CauchySolver::new(&Source::plain_bump(1.0), &Q).unwrap();
        let res = dbar_residual(&solver);
        assert!(res < 1e-3, "{res}");
    }

    #[test]
    fn bound_outside_support() {
        let data = DbarData { g: Source::plain_bump(1.0), v: Weight::constant(0.0), a: 2.0 };
        let ctx = DbarContext::new(data, DbarQuadrature::default()).unwrap();
        let rep = check_dbar_bound(&ctx, [3.0, 0.0], 0.5).unwrap();
        assert!(rep.slack >= 0.0, "{rep:?}");
        assert!(rep.rhs_measured >= rep.lhs);
    }

    #[test]
    fn radius_violation() {
        let data = DbarData { g: Source::plain_bump(1.0), v: Weight::constant(0.0), a: 2.0 };
        let ctx = DbarContext::new(data, DbarQuadrature::default()).unwrap();
        assert!(matches!(check_dbar_bound(&ctx, [0.0, 0.0], 1.0), Err(DbarError::RadiusViolation { .. })));
    }

    #[test]
    fn degenerate_zero_data() {
        let data = DbarData { g: Source::zero(), v: Weight::constant(0.0), a: 2.0 };
        let ctx = DbarContext::new(data, DbarQuadrature::default()).unwrap();
        let rep = check_dbar_bound(&ctx, [0.5, 0.0], 0.5).unwrap();
        assert!(rep.degenerate);
        assert_eq!(rep.lhs, LN_ABS_FLOOR);
        assert_eq!(rep.rhs, f64::NEG_INFINITY);
    }
}
