//! Domains in `C^n`, weights, holomorphic test functions, ball and sphere
//! means, and the integral norms `||f||_w` and `N_phi(f; v)`.
//!
//! Points of `C^n` are passed as real coordinates `[x1, y1, ..., xn, yn]`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convex::{ConvexError, ConvexFunction, Rule};
use crate::quadrature::{self, Neumaier, Nodes, QuadratureError, QuadratureSpec};

/// Values of `ln|f|` below this are clamped before a convex function is applied.
pub const LN_ABS_FLOOR: f64 = -1e9;
/// Relative size of the last shell at which a truncated integral is accepted.
pub const SHELL_TOL: f64 = 1e-10;
/// Truncation radius beyond which an unbounded integral is declared divergent.
pub const MAX_TRUNCATION_RADIUS: f64 = 1e3;
const MIN_SHELLS: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("point {point:?} is not in the domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("integral diverges (truncation radius {radius})")]
    Divergent { radius: f64 },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("ln|f| - v = {value} at {point:?} lies outside the domain of phi")]
    DomainViolation { point: Vec<f64>, value: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
}

pub(crate) fn invalid(field: &str, message: impl Into<String>) -> GeomError {
    GeomError::Invalid { field: field.into(), message: message.into() }
}

/// Complex coordinates of a real point `[x1, y1, ...]`.
pub fn to_complex(p: &[f64]) -> Vec<Complex64> {
    p.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

pub fn from_complex(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn norm2(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum()
}

/// `pi^n r^(2n) / n!`, the volume of `B(z, r)` in `C^n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    let mut v = 1.0;
    for k in 1..=n {
        v *= PI * r * r / k as f64;
    }
    v
}

/// `sigma_{2n-1}`: area of the unit sphere in `C^n = R^(2n)`, `2 pi^n / (n-1)!`.
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * n as f64 * ball_volume(n, 1.0)
}

/// An open subset of `C^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Domain {
    FullSpace { n: usize },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{Im z > 0}` in `C`.
    HalfPlane,
    Polydisc { center: Vec<f64>, radii: Vec<f64> },
}

impl Domain {
    pub fn full_space(n: usize) -> Self {
        Domain::FullSpace { n }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        match self {
            Domain::FullSpace { n } => {
                if *n == 0 {
                    return Err(invalid("domain.n", "dimension must be >= 1"));
                }
            }
            Domain::Ball { center, radius } => {
                check_center(center, "domain.center")?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(invalid("domain.radius", format!("must be finite and > 0, got {radius}")));
                }
            }
            Domain::HalfPlane => {}
            Domain::Polydisc { center, radii } => {
                check_center(center, "domain.center")?;
                if radii.len() * 2 != center.len() {
                    return Err(invalid("domain.radii", "need one radius per complex coordinate"));
                }
                if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
                    return Err(invalid("domain.radii", format!("must be finite and > 0, got {r}")));
                }
            }
        }
        Ok(())
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        match self {
            Domain::FullSpace { n } => *n,
            Domain::Ball { center, .. } | Domain::Polydisc { center, .. } => center.len() / 2,
            Domain::HalfPlane => 1,
        }
    }

    /// `dist(z, C^n \ O)`, zero outside the domain and `+inf` for `C^n`.
    pub fn dist_to_complement(&self, p: &[f64]) -> f64 {
        match self {
            Domain::FullSpace { .. } => f64::INFINITY,
            Domain::Ball { center, radius } => {
                let d: f64 = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                (radius - d.sqrt()).max(0.0)
            }
            Domain::HalfPlane => p[1].max(0.0),
            Domain::Polydisc { center, radii } => radii
                .iter()
                .enumerate()
                .map(|(j, r)| (r - (p[2 * j] - center[2 * j]).hypot(p[2 * j + 1] - center[2 * j + 1])).max(0.0))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == 2 * self.n() && self.dist_to_complement(p) > 0.0
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Domain::Ball { .. } | Domain::Polydisc { .. })
    }
}

fn check_center(c: &[f64], field: &str) -> Result<(), GeomError> {
    if c.is_empty() || c.len() % 2 != 0 {
        return Err(invalid(field, "needs 2n real coordinates"));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(invalid(field, "coordinates must be finite"));
    }
    Ok(())
}

/// Monomial `coef * prod p_k^exps[k]` in the real coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMonomial {
    pub coef: f64,
    pub exps: Vec<u32>,
}

/// A user-supplied weight. Not serializable.
#[derive(Clone)]
pub struct CustomWeight(pub Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>);

impl fmt::Debug for CustomWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomWeight(..)")
    }
}

impl PartialEq for CustomWeight {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTerm {
    pub coef: f64,
    pub weight: Weight,
}

/// A weight function on `C^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Weight {
    /// `|z|^2`
    AbsSq,
    /// `Im z` (n = 1)
    ImPart,
    Constant { c: f64 },
    /// Real polynomial in `x1, y1, ..., xn, yn`.
    Poly { terms: Vec<RealMonomial> },
    /// `ln(1 + |z|^2)`
    LogOnePlusAbsSq,
    /// Samples on a regular grid over `[lo0, hi0] x [lo1, hi1]` (n = 1),
    /// bilinearly interpolated; `values[iy * nx + ix]`. NaN outside the grid.
    Grid { lo: [f64; 2], hi: [f64; 2], nx: usize, ny: usize, values: Vec<f64> },
    /// `sum coef_k * w_k`
    Combo { terms: Vec<WeightTerm> },
    #[serde(skip)]
    Custom(CustomWeight),
}

impl Weight {
    pub fn constant(c: f64) -> Self {
        Weight::Constant { c }
    }

    pub fn custom(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Weight::Custom(CustomWeight(Arc::new(f)))
    }

    /// `c * self`
    pub fn scaled(self, c: f64) -> Self {
        Weight::Combo { terms: vec![WeightTerm { coef: c, weight: self }] }
    }

    /// `a * self + b * other`
    pub fn combine(self, a: f64, other: Weight, b: f64) -> Self {
        Weight::Combo { terms: vec![WeightTerm { coef: a, weight: self }, WeightTerm { coef: b, weight: other }] }
    }

    /// `Re z^k` for `n = 1`, as a real polynomial.
    pub fn re_power(k: u32) -> Self {
        let mut terms = Vec::new();
        // Re (x + iy)^k = sum_{j even} C(k, j) x^(k-j) (iy)^j
        let mut binom = 1.0;
        for j in 0..=k {
            if j % 2 == 0 {
                let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
                terms.push(RealMonomial { coef: sign * binom, exps: vec![k - j, j] });
            }
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        Weight::Poly { terms }
    }

    pub fn validate(&self, n: usize) -> Result<(), GeomError> {
        match self {
            Weight::ImPart if n != 1 => Err(invalid("weight", "im-part needs n = 1")),
            Weight::Constant { c } if !c.is_finite() => Err(invalid("weight.c", "must be finite")),
            Weight::Poly { terms } => {
                for t in terms {
                    if t.exps.len() != 2 * n || !t.coef.is_finite() {
                        return Err(invalid("weight.terms", format!("each term needs a finite coef and {} exponents", 2 * n)));
                    }
                }
                Ok(())
            }
            Weight::Grid { lo, hi, nx, ny, values } => {
                if n != 1 {
                    return Err(invalid("weight", "grid weights need n = 1"));
                }
                if *nx < 2 || *ny < 2 || values.len() != nx * ny {
                    return Err(invalid("weight.values", "need nx, ny >= 2 and nx * ny values"));
                }
                if !(lo[0] < hi[0] && lo[1] < hi[1]) || values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("weight.grid", "need lo < hi and finite values"));
                }
                Ok(())
            }
            Weight::Combo { terms } => {
                for t in terms {
                    if !t.coef.is_finite() {
                        return Err(invalid("weight.terms", "coefficients must be finite"));
                    }
                    t.weight.validate(n)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            Weight::AbsSq => norm2(p),
            Weight::ImPart => p[1],
            Weight::Constant { c } => *c,
            Weight::Poly { terms } => terms
                .iter()
                .map(|t| t.coef * t.exps.iter().zip(p).map(|(&e, x)| x.powi(e as i32)).product::<f64>())
                .sum(),
            Weight::LogOnePlusAbsSq => norm2(p).ln_1p(),
            Weight::Grid { lo, hi, nx, ny, values } => bilinear(p, lo, hi, *nx, *ny, values),
            Weight::Combo { terms } => terms.iter().map(|t| t.coef * t.weight.eval(p)).sum(),
            Weight::Custom(f) => (f.0)(p),
        }
    }
}

fn bilinear(p: &[f64], lo: &[f64; 2], hi: &[f64; 2], nx: usize, ny: usize, values: &[f64]) -> f64 {
    let (x, y) = (p[0], p[1]);
    if !(lo[0] <= x && x <= hi[0] && lo[1] <= y && y <= hi[1]) {
        return f64::NAN;
    }
    let fx = (x - lo[0]) / (hi[0] - lo[0]) * (nx - 1) as f64;
    let fy = (y - lo[1]) / (hi[1] - lo[1]) * (ny - 1) as f64;
    let ix = (fx.floor() as usize).min(nx - 2);
    let iy = (fy.floor() as usize).min(ny - 2);
    let (tx, ty) = (fx - ix as f64, fy - iy as f64);
    let at = |i: usize, j: usize| values[j * nx + i];
    (1.0 - ty) * ((1.0 - tx) * at(ix, iy) + tx * at(ix + 1, iy)) + ty * ((1.0 - tx) * at(ix, iy + 1) + tx * at(ix + 1, iy + 1))
}

/// Complex coefficient as `[re, im]`.
pub type Coef = [f64; 2];

fn c64(c: &Coef) -> Complex64 {
    Complex64::new(c[0], c[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMonomial {
    pub coef: Coef,
    pub exps: Vec<u32>,
}

/// A holomorphic function given in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum HoloFunction {
    /// `sum c_k z^k` (n = 1), ascending coefficients.
    Poly { coeffs: Vec<Coef> },
    /// `exp(q(z))` with `q = sum c_k z^k` (n = 1).
    ExpPoly { coeffs: Vec<Coef> },
    /// `sum c_alpha z^alpha` on `C^n`.
    MultiPoly { n: usize, terms: Vec<ComplexMonomial> },
}

fn horner(coeffs: &[Coef], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c64(c))
}

impl HoloFunction {
    pub fn poly(coeffs: &[f64]) -> Self {
        HoloFunction::Poly { coeffs: coeffs.iter().map(|&c| [c, 0.0]).collect() }
    }

    pub fn constant(c: f64) -> Self {
        Self::poly(&[c])
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![[0.0, 0.0]; k + 1];
        coeffs[k] = [1.0, 0.0];
        HoloFunction::Poly { coeffs }
    }

    /// `exp(a z)`
    pub fn exp_linear(a: Complex64) -> Self {
        HoloFunction::ExpPoly { coeffs: vec![[0.0, 0.0], [a.re, a.im]] }
    }

    pub fn n(&self) -> usize {
        match self {
            HoloFunction::MultiPoly { n, .. } => *n,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        let finite = |c: &Coef| c[0].is_finite() && c[1].is_finite();
        match self {
            HoloFunction::Poly { coeffs } | HoloFunction::ExpPoly { coeffs } => {
                if coeffs.is_empty() || !coeffs.iter().all(finite) {
                    return Err(invalid("function.coeffs", "need at least one finite coefficient"));
                }
            }
            HoloFunction::MultiPoly { n, terms } => {
                if *n == 0 {
                    return Err(invalid("function.n", "dimension must be >= 1"));
                }
                if terms.iter().any(|t| t.exps.len() != *n || !finite(&t.coef)) {
                    return Err(invalid("function.terms", format!("each term needs a finite coef and {n} exponents")));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        match self {
            HoloFunction::Poly { coeffs } => horner(coeffs, z[0]),
            HoloFunction::ExpPoly { coeffs } => horner(coeffs, z[0]).exp(),
            HoloFunction::MultiPoly { terms, .. } => terms
                .iter()
                .map(|t| c64(&t.coef) * t.exps.iter().zip(z).map(|(&e, zj)| zj.powu(e)).product::<Complex64>())
                .sum(),
        }
    }

    pub fn eval_real(&self, p: &[f64]) -> Complex64 {
        self.eval(&to_complex(p))
    }

    /// `ln|f|`, `-inf` at zeros. Exact for `exp(q)` without overflow.
    pub fn ln_abs(&self, p: &[f64]) -> f64 {
        match self {
            HoloFunction::ExpPoly { coeffs } => horner(coeffs, Complex64::new(p[0], p[1])).re,
            _ => self.eval_real(p).norm().ln(),
        }
    }

    /// `||f||_w^2` against the Fock weight `|z|^2` on `C^n`, where known in
    /// closed form: `pi^n sum |c_alpha|^2 alpha!` for polynomials and
    /// `pi |e^b|^2 e^{|a|^2}` for `exp(b + a z)`.
    pub fn fock_norm_sq(&self) -> Option<f64> {
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        match self {
            HoloFunction::Poly { coeffs } => {
                Some(PI * coeffs.iter().enumerate().map(|(k, c)| c64(c).norm_sqr() * fact(k as u32)).sum::<f64>())
            }
            HoloFunction::ExpPoly { coeffs } if coeffs.len() <= 2 => {
                let b = c64(&coeffs[0]);
                let a = coeffs.get(1).map(c64).unwrap_or_default();
                Some(PI * (2.0 * b.re).exp() * a.norm_sqr().exp())
            }
            HoloFunction::MultiPoly { n, terms } => {
                // distinct multi-indices are orthogonal; merge repeated ones first
                let mut merged: Vec<(Vec<u32>, Complex64)> = Vec::new();
                for t in terms {
                    match merged.iter_mut().find(|(e, _)| *e == t.exps) {
                        Some((_, c)) => *c += c64(&t.coef),
                        None => merged.push((t.exps.clone(), c64(&t.coef))),
                    }
                }
                let s: f64 = merged.iter().map(|(e, c)| c.norm_sqr() * e.iter().map(|&k| fact(k)).product::<f64>()).sum();
                Some(PI.powi(*n as i32) * s)
            }
            _ => None,
        }
    }
}

/// Mean over `B(z, r)` of an arbitrary function, normalized by the exact
/// volume. Node values must be finite.
pub fn ball_mean_fn(f: impl Fn(&[f64]) -> f64 + Sync, z: &[f64], r: f64, q: &QuadratureSpec) -> Result<f64, GeomError> {
    check_ball_args(z, r)?;
    let nodes = quadrature::ball_nodes(z, 0.0, r, q)?;
    let total = sum_finite(&nodes, &f)?;
    Ok(total / ball_volume(z.len() / 2, r))
}

/// `B_w(z, r)`, the mean of `w` over the ball `B(z, r)`.
pub fn ball_mean(w: &Weight, z: &[f64], r: f64, q: &QuadratureSpec) -> Result<f64, GeomError> {
    w.validate(z.len() / 2)?;
    ball_mean_fn(|p| w.eval(p), z, r, q)
}

/// Normalized average of `f` over the sphere `|z' - z| = r`.
pub fn sphere_mean_fn(f: impl Fn(&[f64]) -> f64 + Sync, z: &[f64], r: f64, q: &QuadratureSpec) -> Result<f64, GeomError> {
    check_ball_args(z, r)?;
    let nodes = quadrature::sphere_nodes(z, r, q)?;
    sum_finite(&nodes, &f)
}

/// `S_v(z, r)`: the normalized spherical average of `v`.
pub fn sphere_mean(v: &Weight, z: &[f64], r: f64, q: &QuadratureSpec) -> Result<f64, GeomError> {
    v.validate(z.len() / 2)?;
    sphere_mean_fn(|p| v.eval(p), z, r, q)
}

/// The sphere-mean prefactor `(n-1)! / (2 pi^n max{1, 2(n-1)} r^(2n-1))`
/// in front of `int_{|z'|=1} v(z + r z') dsigma(z')`, taken literally.
///
/// Multiplied by the unit-sphere area it is not `1` (for `n = 1` it is
/// `1/r`), so it does not produce an average; [`sphere_mean`] uses
/// `1 / sigma_{2n-1}` instead and this is kept for comparison.
pub fn literal_sphere_constant(n: usize, r: f64) -> f64 {
    let fact: f64 = (1..n).map(|k| k as f64).product();
    let m = (2.0 * (n as f64 - 1.0)).max(1.0);
    fact / (2.0 * PI.powi(n as i32) * m * r.powi(2 * n as i32 - 1))
}

/// The sphere mean computed with [`literal_sphere_constant`].
pub fn sphere_mean_literal(v: &Weight, z: &[f64], r: f64, q: &QuadratureSpec) -> Result<f64, GeomError> {
    let n = z.len() / 2;
    Ok(literal_sphere_constant(n, r) * unit_sphere_area(n) * sphere_mean(v, z, r, q)?)
}

fn check_ball_args(z: &[f64], r: f64) -> Result<(), GeomError> {
    check_center(z, "z")?;
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid("r", format!("radius must be finite and > 0, got {r}")));
    }
    Ok(())
}

fn sum_finite(nodes: &Nodes, f: &(impl Fn(&[f64]) -> f64 + Sync)) -> Result<f64, GeomError> {
    let values = nodes.par_values(f);
    let mut acc = Neumaier::default();
    for (i, (v, w)) in values.iter().zip(&nodes.weights).enumerate() {
        if !v.is_finite() {
            return Err(GeomError::QuadratureFailure(format!("value {v} at node {:?}", nodes.point(i))));
        }
        acc.add(w * v);
    }
    Ok(acc.total())
}

/// Largest value of `f` over the quadrature nodes of `B(z, r)` and its
/// boundary sphere.
pub fn ball_sup_fn(f: impl Fn(&[f64]) -> f64 + Sync, z: &[f64], r: f64, q: &QuadratureSpec) -> Result<f64, GeomError> {
    check_ball_args(z, r)?;
    let mut nodes = quadrature::ball_nodes(z, 0.0, r, q)?;
    nodes.append(quadrature::sphere_nodes(z, r, q)?);
    let values = nodes.par_values(&f);
    let mut best = f64::NEG_INFINITY;
    for v in values {
        if v.is_nan() {
            return Err(GeomError::QuadratureFailure("NaN in sup".into()));
        }
        best = best.max(v);
    }
    Ok(best)
}

/// Sum over nodes of a nonnegative integrand; `+inf` and overflow mean
/// divergence.
fn sum_nonneg(nodes: &Nodes, f: &(impl Fn(&[f64]) -> f64 + Sync), radius: f64) -> Result<f64, GeomError> {
    let values = nodes.par_values(f);
    let mut acc = Neumaier::default();
    for (i, (v, w)) in values.iter().zip(&nodes.weights).enumerate() {
        if v.is_nan() {
            return Err(GeomError::QuadratureFailure(format!("NaN at node {:?}", nodes.point(i))));
        }
        if v.is_infinite() {
            return Err(GeomError::Divergent { radius });
        }
        acc.add(w * v);
    }
    let total = acc.total();
    if !total.is_finite() {
        return Err(GeomError::Divergent { radius });
    }
    Ok(total)
}

/// Nodes for the disc `D(c, r)` or annulus in one complex coordinate.
fn disc_nodes(c: &[f64], r_in: f64, r: f64, q: &QuadratureSpec) -> Result<Nodes, GeomError> {
    Ok(quadrature::ball_nodes(c, r_in, r, q)?)
}

/// Nodes on `{r_in < |z| < r, Im z > 0}`.
fn half_annulus_nodes(r_in: f64, r: f64, q: &QuadratureSpec) -> Result<Nodes, GeomError> {
    match *q {
        QuadratureSpec::PolarGauss { radial, angular } => {
            let mut nodes = Nodes::empty(2);
            let thetas = quadrature::gauss_legendre(0.0, PI, angular);
            for (t, w) in quadrature::gauss_legendre(r_in, r, radial) {
                for &(th, wt) in &thetas {
                    let (s, c) = th.sin_cos();
                    nodes.push(&[t * c, t * s], w * wt * t);
                }
            }
            Ok(nodes)
        }
        QuadratureSpec::Mc { .. } => {
            // reflect the full annulus into the upper half and halve the weights
            let mut nodes = quadrature::ball_nodes(&[0.0, 0.0], r_in, r, q)?;
            for i in 0..nodes.len() {
                nodes.points[2 * i + 1] = nodes.points[2 * i + 1].abs();
                nodes.weights[i] *= 0.5;
            }
            Ok(nodes)
        }
    }
}

/// Tensor product (polar rules) or index-wise product (Monte Carlo) of
/// per-coordinate node sets.
fn product_nodes(parts: &[Nodes], mc: bool) -> Result<Nodes, GeomError> {
    let dim: usize = parts.iter().map(|p| p.dim).sum();
    let mut out = Nodes::empty(dim);
    if mc {
        let len = parts[0].len();
        let mut p = Vec::with_capacity(dim);
        for i in 0..len {
            p.clear();
            let mut w = 1.0;
            for part in parts {
                p.extend_from_slice(part.point(i));
                // each part carries vol_j / len; the product needs prod vol_j / len
                w *= part.weights[i] * len as f64;
            }
            out.push(&p, w / len as f64);
        }
        return Ok(out);
    }
    let count = parts.iter().try_fold(1usize, |acc, p| acc.checked_mul(p.len()));
    match count {
        Some(c) if c <= quadrature::MAX_NODES => {}
        _ => return Err(GeomError::Quadrature(QuadratureError::InvalidSpec("tensor rule too large; lower the order".into()))),
    }
    let mut idx = vec![0usize; parts.len()];
    let mut p = vec![0.0; dim];
    'outer: loop {
        let mut w = 1.0;
        let mut off = 0;
        for (k, part) in parts.iter().enumerate() {
            p[off..off + part.dim].copy_from_slice(part.point(idx[k]));
            off += part.dim;
            w *= part.weights[idx[k]];
        }
        out.push(&p, w);
        for k in (0..parts.len()).rev() {
            idx[k] += 1;
            if idx[k] < parts[k].len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    Ok(out)
}

fn seeded(q: &QuadratureSpec, salt: u64) -> QuadratureSpec {
    match *q {
        QuadratureSpec::Mc { n, seed } => QuadratureSpec::Mc { n, seed: seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9)) },
        other => other,
    }
}

fn polydisc_nodes(center: &[f64], r_in: &[f64], r: &[f64], q: &QuadratureSpec, salt: u64) -> Result<Nodes, GeomError> {
    let parts = (0..r.len())
        .map(|j| disc_nodes(&center[2 * j..2 * j + 2], r_in[j], r[j], &seeded(q, salt + j as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    product_nodes(&parts, q.is_mc())
}

/// Outer radii of the truncation shells: 1, 2, 4, ..., 1024.
fn shell_radii() -> impl Iterator<Item = (f64, f64)> {
    (0..11).map(|k| if k == 0 { (0.0, 1.0) } else { ((1u64 << (k - 1)) as f64, (1u64 << k) as f64) })
}

/// Nodes of truncation shell `{r_in < |z| < r}` (or the polydisc analogue) of `dom`.
fn shell_nodes(dom: &Domain, r_in: f64, r: f64, q: &QuadratureSpec, k: u64) -> Result<Nodes, GeomError> {
    let q = seeded(q, 1000 + k);
    match dom {
        Domain::HalfPlane => half_annulus_nodes(r_in, r, &q),
        Domain::FullSpace { n } if *n == 1 || q.is_mc() => Ok(quadrature::ball_nodes(&vec![0.0; 2 * n], r_in, r, &q)?),
        Domain::FullSpace { n } => {
            // polydisc shell D(r)^n \ D(r_in)^n: every coordinate is either in
            // the inner disc or the annulus, not all in the inner disc
            let n = *n;
            let zero = [0.0, 0.0];
            let inner = disc_nodes(&zero, 0.0, r_in, &q)?;
            let ring = disc_nodes(&zero, r_in, r, &q)?;
            let mut out = Nodes::empty(2 * n);
            for mask in 1u32..(1 << n) {
                if r_in == 0.0 && mask != (1 << n) - 1 {
                    continue;
                }
                let parts: Vec<Nodes> = (0..n).map(|j| if mask >> j & 1 == 1 { ring.clone() } else { inner.clone() }).collect();
                out.append(product_nodes(&parts, false)?);
            }
            Ok(out)
        }
        _ => unreachable!("bounded domains are not truncated"),
    }
}

/// `int_O F dlambda` for a nonnegative integrand. Bounded domains use one
/// rule; unbounded domains are truncated to shells of doubling radius until
/// the last shell is below `SHELL_TOL` of the total.
pub fn integrate_domain(dom: &Domain, q: &QuadratureSpec, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<f64, GeomError> {
    dom.validate()?;
    match dom {
        Domain::Ball { center, radius } => {
            let nodes = quadrature::ball_nodes(center, 0.0, *radius, q)?;
            sum_nonneg(&nodes, &f, *radius)
        }
        Domain::Polydisc { center, radii } => {
            let nodes = polydisc_nodes(center, &vec![0.0; radii.len()], radii, q, 0)?;
            sum_nonneg(&nodes, &f, radii.iter().cloned().fold(0.0, f64::max))
        }
        Domain::FullSpace { .. } | Domain::HalfPlane => {
            let mut total = Neumaier::default();
            for (k, (r_in, r)) in shell_radii().enumerate() {
                let nodes = shell_nodes(dom, r_in, r, q, k as u64)?;
                let part = sum_nonneg(&nodes, &f, r)?;
                total.add(part);
                let t = total.total();
                if !t.is_finite() {
                    return Err(GeomError::Divergent { radius: r });
                }
                if k + 1 >= MIN_SHELLS && part.abs() <= SHELL_TOL * t.abs() {
                    return Ok(t);
                }
            }
            Err(GeomError::Divergent { radius: MAX_TRUNCATION_RADIUS })
        }
    }
}

fn check_dims(f: &HoloFunction, dom: &Domain) -> Result<(), GeomError> {
    f.validate()?;
    if f.n() != dom.n() {
        return Err(invalid("function", format!("function has n = {}, domain has n = {}", f.n(), dom.n())));
    }
    Ok(())
}

/// `||f||_w = (int_O |f|^p e^{-w} dlambda)^(1/p)`.
pub fn weighted_norm(f: &HoloFunction, p: f64, w: &Weight, dom: &Domain, q: &QuadratureSpec) -> Result<f64, GeomError> {
    check_dims(f, dom)?;
    w.validate(dom.n())?;
    if !(p.is_finite() && p > 0.0) {
        return Err(invalid("p", format!("exponent must be finite and > 0, got {p}")));
    }
    let integral = integrate_domain(dom, q, |x| (p * f.ln_abs(x) - w.eval(x)).exp())?;
    Ok(integral.powf(1.0 / p))
}

/// `ln|f|` with the floor applied.
pub fn clamped_ln_abs(f: &HoloFunction, p: &[f64]) -> f64 {
    f.ln_abs(p).max(LN_ABS_FLOOR)
}

/// `N_phi(f; v) = int_O phi(ln|f| - v) dlambda`.
///
/// At zeros of `f` an exponential `phi` takes its exact limit `0`; other
/// rules see `ln|f|` clamped to `LN_ABS_FLOOR`.
pub fn n_phi(f: &HoloFunction, v: &Weight, phi: &ConvexFunction, dom: &Domain, q: &QuadratureSpec) -> Result<f64, GeomError> {
    check_dims(f, dom)?;
    v.validate(dom.n())?;
    let exp_rule = matches!(phi.rule(), Rule::Exponential { .. });
    // validate the integrand on the nodes before summing so that domain
    // violations are reported as such rather than as NaN
    let bad = std::sync::Mutex::new(None::<(Vec<f64>, f64)>);
    let g = |x: &[f64]| {
        let l = f.ln_abs(x);
        let t = if exp_rule && l == f64::NEG_INFINITY { l } else { l.max(LN_ABS_FLOOR) - v.eval(x) };
        match phi.eval_f64(t) {
            Ok(val) => val,
            Err(_) => {
                bad.lock().expect("not poisoned").get_or_insert((x.to_vec(), t));
                0.0
            }
        }
    };
    let res = integrate_domain(dom, q, g);
    if let Some((point, value)) = bad.into_inner().expect("not poisoned") {
        return Err(GeomError::DomainViolation { point, value });
    }
    res
}
