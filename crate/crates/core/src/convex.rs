//! Convex functions on intervals, their sup-inverse and the classification of
//! when that sup-inverse is increasing.
//!
//! Every rule is closed-form, so the monotone structure of a function (where
//! it is flat, where it strictly increases, its one-sided endpoint limits) is
//! read off exactly instead of being searched for numerically. The
//! classification then checks its own answer by sampling the sup-inverse it
//! built.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ext::{ExtReal, Interval};

/// Relative tolerance used to decide equality of endpoint limits and values.
pub const LIMIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConvexError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("not convex: {0}")]
    NotConvex(String),
    #[error("argument {t} lies outside the domain {domain}")]
    Domain { t: ExtReal, domain: Interval },
    #[error("value {y} lies outside the image {image}")]
    OutsideImage { y: f64, image: Interval },
    #[error("sup-inverse is not increasing: {0}")]
    Classification(String),
    #[error("upper condition sample {index}: {reason}")]
    UpperDomain { index: usize, reason: String },
}

/// Breakpoint data for a convex piecewise-linear function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    points: Vec<(f64, f64)>,
    lo_override: Option<f64>,
    hi_override: Option<f64>,
}

impl PiecewiseLinear {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn overrides(&self) -> (Option<f64>, Option<f64>) {
        (self.lo_override, self.hi_override)
    }

    fn first(&self) -> (f64, f64) {
        self.points[0]
    }

    fn last(&self) -> (f64, f64) {
        self.points[self.points.len() - 1]
    }

    /// Linear interpolation between breakpoints, ignoring overrides.
    fn interp(&self, t: f64) -> f64 {
        let pts = &self.points;
        if pts.len() == 1 {
            return pts[0].1;
        }
        let i = pts.partition_point(|&(x, _)| x <= t).clamp(1, pts.len() - 1);
        let (x0, y0) = pts[i - 1];
        let (x1, y1) = pts[i];
        if t == x1 {
            return y1;
        }
        if t == x0 {
            return y0;
        }
        y0 + (y1 - y0) * ((t - x0) / (x1 - x0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Rule {
    /// `t -> (max(t, 0))^p`, `p >= 1`.
    Power { p: f64 },
    /// `t -> exp(p t)`, `p > 0`.
    Exponential { p: f64 },
    Affine { a: f64, b: f64 },
    Constant { c: f64 },
    PiecewiseLinear(PiecewiseLinear),
}

/// A convex function on an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexFunction {
    rule: Rule,
    domain: Interval,
}

impl ConvexFunction {
    pub fn power(p: f64) -> Result<Self, ConvexError> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(ConvexError::InvalidParameter(format!("power exponent must be >= 1, got {p}")));
        }
        Ok(Self { rule: Rule::Power { p }, domain: Interval::real_line() })
    }

    pub fn exponential(p: f64) -> Result<Self, ConvexError> {
        if !(p.is_finite() && p > 0.0) {
            return Err(ConvexError::InvalidParameter(format!("exponential rate must be > 0, got {p}")));
        }
        Ok(Self { rule: Rule::Exponential { p }, domain: Interval::real_line() })
    }

    pub fn affine(a: f64, b: f64) -> Result<Self, ConvexError> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(ConvexError::InvalidParameter("affine coefficients must be finite".into()));
        }
        Ok(Self { rule: Rule::Affine { a, b }, domain: Interval::real_line() })
    }

    pub fn constant(c: f64) -> Result<Self, ConvexError> {
        if !c.is_finite() {
            return Err(ConvexError::InvalidParameter("constant must be finite".into()));
        }
        Ok(Self { rule: Rule::Constant { c }, domain: Interval::real_line() })
    }

    /// Piecewise-linear function through `points` (strictly increasing
    /// abscissae, nondecreasing slopes) on the closed hull of the abscissae.
    /// `overrides` may raise the value at either end of the hull.
    pub fn piecewise_linear(points: Vec<(f64, f64)>, overrides: &[(f64, f64)]) -> Result<Self, ConvexError> {
        if points.is_empty() {
            return Err(ConvexError::InvalidParameter("piecewise-linear function needs at least one point".into()));
        }
        if points.iter().any(|&(t, v)| !(t.is_finite() && v.is_finite())) {
            return Err(ConvexError::InvalidParameter("breakpoints must be finite".into()));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(ConvexError::InvalidParameter("breakpoint abscissae must be strictly increasing".into()));
        }
        let slopes: Vec<f64> = points.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        for (i, w) in slopes.windows(2).enumerate() {
            if w[1] < w[0] - 1e-12 * (1.0 + w[0].abs().max(w[1].abs())) {
                return Err(ConvexError::NotConvex(format!(
                    "slope decreases from {} to {} at t = {}",
                    w[0],
                    w[1],
                    points[i + 1].0
                )));
            }
        }
        let mut pwl = PiecewiseLinear { points, lo_override: None, hi_override: None };
        let (t0, v0) = pwl.first();
        let (tk, vk) = pwl.last();
        for &(t, v) in overrides {
            if !v.is_finite() {
                return Err(ConvexError::InvalidParameter("override values must be finite".into()));
            }
            let slot = if t == t0 {
                if v < v0 {
                    return Err(ConvexError::NotConvex(format!(
                        "override {v} at t = {t} is below the interior limit {v0}"
                    )));
                }
                &mut pwl.lo_override
            } else if t == tk {
                if v < vk {
                    return Err(ConvexError::NotConvex(format!(
                        "override {v} at t = {t} is below the interior limit {vk}"
                    )));
                }
                &mut pwl.hi_override
            } else {
                return Err(ConvexError::InvalidParameter(format!(
                    "override at t = {t} is not an endpoint of [{t0}, {tk}]"
                )));
            };
            if slot.is_some() {
                return Err(ConvexError::InvalidParameter(format!("duplicate override at t = {t}")));
            }
            *slot = Some(v);
        }
        if t0 == tk && (pwl.lo_override.is_some() || pwl.hi_override.is_some()) {
            return Err(ConvexError::InvalidParameter("overrides need a nondegenerate interval".into()));
        }
        let domain = Interval::closed(t0, tk).expect("hull of sorted finite points");
        Ok(Self { rule: Rule::PiecewiseLinear(pwl), domain })
    }

    /// Restricts the function to `domain`. Piecewise-linear functions keep
    /// their hull and may only change the endpoint flags.
    pub fn on(mut self, domain: Interval) -> Result<Self, ConvexError> {
        if let Rule::PiecewiseLinear(pwl) = &self.rule {
            if domain.lo != self.domain.lo || domain.hi != self.domain.hi {
                return Err(ConvexError::InvalidParameter(format!(
                    "piecewise-linear domain must be the hull {}",
                    self.domain
                )));
            }
            if (!domain.lo_closed && pwl.lo_override.is_some()) || (!domain.hi_closed && pwl.hi_override.is_some()) {
                return Err(ConvexError::InvalidParameter("override at an open endpoint".into()));
            }
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    /// Evaluates the function. `Exponential` also accepts the infinite ends of
    /// an unbounded domain, with `exp(-inf) = 0` and `exp(+inf) = +inf`.
    pub fn eval(&self, t: ExtReal) -> Result<ExtReal, ConvexError> {
        let domain_err = || ConvexError::Domain { t, domain: self.domain };
        let x = match t {
            ExtReal::Finite(x) if self.domain.contains(t) => x,
            ExtReal::NegInf if self.domain.lo == ExtReal::NegInf => {
                return match self.rule {
                    Rule::Exponential { .. } => Ok(ExtReal::ZERO),
                    _ => Err(domain_err()),
                }
            }
            ExtReal::PosInf if self.domain.hi == ExtReal::PosInf => {
                return match self.rule {
                    Rule::Exponential { .. } => Ok(ExtReal::PosInf),
                    _ => Err(domain_err()),
                }
            }
            _ => return Err(domain_err()),
        };
        Ok(ExtReal::from(self.raw(x)))
    }

    pub fn eval_f64(&self, t: f64) -> Result<f64, ConvexError> {
        let t = ExtReal::new(t).ok_or_else(|| ConvexError::InvalidParameter("NaN argument".into()))?;
        self.eval(t).map(ExtReal::to_f64)
    }

    /// Formula value at a finite point of the closed domain, overrides included.
    fn raw(&self, x: f64) -> f64 {
        match &self.rule {
            Rule::Power { p } => {
                if x <= 0.0 {
                    0.0
                } else {
                    x.powf(*p)
                }
            }
            Rule::Exponential { p } => (p * x).exp(),
            Rule::Affine { a, b } => a * x + b,
            Rule::Constant { c } => *c,
            Rule::PiecewiseLinear(pwl) => {
                if x == pwl.first().0 {
                    if let Some(v) = pwl.lo_override {
                        return v;
                    }
                }
                if x == pwl.last().0 {
                    if let Some(v) = pwl.hi_override {
                        return v;
                    }
                }
                pwl.interp(x)
            }
        }
    }

    /// Continuous extension of the interior values to an endpoint.
    fn limit_at(&self, t: ExtReal) -> ExtReal {
        match (&self.rule, t) {
            (Rule::Power { .. }, ExtReal::NegInf) => ExtReal::ZERO,
            (Rule::Power { .. }, ExtReal::PosInf) => ExtReal::PosInf,
            (Rule::Exponential { .. }, ExtReal::NegInf) => ExtReal::ZERO,
            (Rule::Exponential { .. }, ExtReal::PosInf) => ExtReal::PosInf,
            (Rule::Affine { a, b }, ExtReal::NegInf) => infinite_affine(*a, *b, -1.0),
            (Rule::Affine { a, b }, ExtReal::PosInf) => infinite_affine(*a, *b, 1.0),
            (Rule::Constant { c }, _) => ExtReal::Finite(*c),
            (Rule::PiecewiseLinear(pwl), ExtReal::Finite(x)) => ExtReal::Finite(pwl.interp(x)),
            (Rule::PiecewiseLinear(_), _) => unreachable!("piecewise-linear domains are bounded"),
            (_, ExtReal::Finite(x)) => ExtReal::from(match &self.rule {
                Rule::Power { p } => {
                    if x <= 0.0 {
                        0.0
                    } else {
                        x.powf(*p)
                    }
                }
                Rule::Exponential { p } => (p * x).exp(),
                Rule::Affine { a, b } => a * x + b,
                _ => unreachable!(),
            }),
        }
    }

    fn shape(&self) -> Shape {
        let d = &self.domain;
        let interior = match &self.rule {
            Rule::Power { .. } => {
                if d.hi <= ExtReal::ZERO {
                    Interior::Constant(0.0)
                } else if d.lo >= ExtReal::ZERO {
                    Interior::StrictlyIncreasing
                } else {
                    Interior::Valley { min: 0.0, t_max: 0.0 }
                }
            }
            Rule::Exponential { .. } => Interior::StrictlyIncreasing,
            Rule::Affine { a, b } => {
                if *a > 0.0 {
                    Interior::StrictlyIncreasing
                } else if *a == 0.0 {
                    Interior::Constant(*b)
                } else {
                    Interior::Nonincreasing
                }
            }
            Rule::Constant { c } => Interior::Constant(*c),
            Rule::PiecewiseLinear(pwl) => {
                let pts = &pwl.points;
                let min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                let last_min = pts.iter().rposition(|p| p.1 == min).expect("nonempty");
                if pts.iter().all(|p| p.1 == min) {
                    Interior::Constant(min)
                } else if last_min == 0 {
                    Interior::StrictlyIncreasing
                } else if last_min == pts.len() - 1 {
                    Interior::Nonincreasing
                } else {
                    Interior::Valley { min, t_max: pts[last_min].0 }
                }
            }
        };
        Shape {
            lim_lo: self.limit_at(d.lo),
            lim_hi: self.limit_at(d.hi),
            val_lo: d.lo_closed.then(|| self.raw(d.lo.to_f64())),
            val_hi: d.hi_closed.then(|| self.raw(d.hi.to_f64())),
            interior,
        }
    }
}

fn infinite_affine(a: f64, b: f64, dir: f64) -> ExtReal {
    if a == 0.0 {
        ExtReal::Finite(b)
    } else if a * dir > 0.0 {
        ExtReal::PosInf
    } else {
        ExtReal::NegInf
    }
}

#[derive(Debug, Clone, Copy)]
enum Interior {
    Constant(f64),
    StrictlyIncreasing,
    /// Minimum attained inside the interval; `t_max` is the rightmost minimizer.
    Valley { min: f64, t_max: f64 },
    /// No interior point after which the function strictly increases.
    Nonincreasing,
}

#[derive(Debug, Clone, Copy)]
struct Shape {
    lim_lo: ExtReal,
    lim_hi: ExtReal,
    val_lo: Option<f64>,
    val_hi: Option<f64>,
    interior: Interior,
}

/// `a` exceeds `b` by more than the limit tolerance.
fn jumps_above(a: f64, b: ExtReal) -> bool {
    match b {
        ExtReal::Finite(b) => a - b > LIMIT_TOL * (1.0 + b.abs()),
        ExtReal::PosInf => false,
        ExtReal::NegInf => true,
    }
}

fn approx_eq(a: ExtReal, b: ExtReal) -> bool {
    match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() <= LIMIT_TOL * (1.0 + x.abs().max(y.abs())),
        _ => a == b,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionCase {
    Constant,
    StrictlyIncreasing,
    BoundedBelowWithTmax,
    Fails,
}

impl fmt::Display for ConditionCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConditionCase::Constant => "constant",
            ConditionCase::StrictlyIncreasing => "strictly_increasing",
            ConditionCase::BoundedBelowWithTmax => "bounded_below_with_tmax",
            ConditionCase::Fails => "fails",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub case: ConditionCase,
    /// Image of the function; `None` when it is not an interval.
    pub image: Option<Interval>,
    pub t_max: Option<ExtReal>,
    pub details: String,
}

/// Which of the three admissible shapes `phi` has, if any.
pub fn classify(phi: &ConvexFunction) -> ConditionReport {
    match analyze(phi) {
        Ok(si) => {
            let case = si.case;
            let details = match case {
                ConditionCase::Constant => format!("constant on {}", phi.domain),
                ConditionCase::StrictlyIncreasing => format!("strictly increasing, image {}", si.domain),
                _ => format!(
                    "nonconstant, minimum attained inside, rightmost minimizer {}",
                    si.t_max.expect("valley case carries t_max")
                ),
            };
            if let Err(why) = si.self_check() {
                return ConditionReport {
                    case: ConditionCase::Fails,
                    image: Some(si.domain),
                    t_max: si.t_max,
                    details: format!("constructed sup-inverse rejected: {why}"),
                };
            }
            ConditionReport { case, image: Some(si.domain), t_max: si.t_max, details }
        }
        Err(fail) => ConditionReport { case: ConditionCase::Fails, image: fail.image, t_max: fail.t_max, details: fail.why },
    }
}

/// Builds the sup-inverse of `phi`.
pub fn sup_inverse(phi: &ConvexFunction) -> Result<SupInverse, ConvexError> {
    let si = analyze(phi).map_err(|f| ConvexError::Classification(f.why))?;
    si.self_check().map_err(ConvexError::Classification)?;
    Ok(si)
}

struct Failure {
    image: Option<Interval>,
    t_max: Option<ExtReal>,
    why: String,
}

fn fail(why: impl Into<String>) -> Failure {
    Failure { image: None, t_max: None, why: why.into() }
}

fn analyze(phi: &ConvexFunction) -> Result<SupInverse, Failure> {
    let d = *phi.domain();
    if d.is_point() {
        let v = phi.raw(d.lo.to_f64());
        return Ok(SupInverse {
            phi: phi.clone(),
            domain: Interval::point(v),
            t_max: None,
            strict: true,
            case: ConditionCase::Constant,
            eval: Evaluator::Point(d.hi),
        });
    }
    let s = phi.shape();
    match s.interior {
        Interior::Constant(c) => {
            let lo_ok = s.val_lo.is_none_or(|v| !jumps_above(v, ExtReal::Finite(c)));
            let hi_ok = s.val_hi.is_none_or(|v| !jumps_above(v, ExtReal::Finite(c)));
            if lo_ok && hi_ok {
                Ok(SupInverse {
                    phi: phi.clone(),
                    domain: Interval::point(c),
                    t_max: None,
                    strict: false,
                    case: ConditionCase::Constant,
                    eval: Evaluator::Point(d.hi),
                })
            } else {
                Err(fail("constant inside the interval but jumps at an endpoint; the minimum is not attained left of an interior point"))
            }
        }
        Interior::Nonincreasing => Err(fail("nonincreasing: no interior point after which the function increases")),
        Interior::StrictlyIncreasing => {
            if let Some(v) = s.val_lo {
                if jumps_above(v, s.lim_lo) {
                    return Err(fail(format!(
                        "value {v} at inf I exceeds the interior limit {}; the function is not strictly increasing and has no interior minimum",
                        s.lim_lo
                    )));
                }
            }
            if let Some(v) = s.val_hi {
                if jumps_above(v, s.lim_hi) {
                    return Err(fail(format!("discontinuous at sup I: value {v}, limit {}", s.lim_hi)));
                }
            }
            let image = Interval::new(s.lim_lo, s.lim_hi, d.lo_closed, d.hi_closed)
                .map_err(|e| fail(format!("degenerate image: {e}")))?;
            let start = d.lo.to_f64();
            Ok(SupInverse {
                phi: phi.clone(),
                domain: image,
                t_max: None,
                strict: true,
                case: ConditionCase::StrictlyIncreasing,
                eval: Evaluator::from_rule(phi, start),
            })
        }
        Interior::Valley { min, t_max } => {
            if let Some(v) = s.val_hi {
                if jumps_above(v, s.lim_hi) {
                    return Err(Failure {
                        image: None,
                        t_max: Some(t_max.into()),
                        why: format!("restriction right of t_max is discontinuous at sup I: value {v}, limit {}", s.lim_hi),
                    });
                }
            }
            let left_sup = match s.val_lo {
                Some(v) => ExtReal::Finite(v),
                None => s.lim_lo,
            };
            let right_sup = s.lim_hi;
            let strict_needed = d.lo_closed && !d.hi_closed;
            let ok = if strict_needed {
                left_sup < right_sup && !approx_eq(left_sup, right_sup)
            } else {
                left_sup <= right_sup || approx_eq(left_sup, right_sup)
            };
            if !ok {
                let rel = if strict_needed { "<" } else { "<=" };
                return Err(Failure {
                    image: None,
                    t_max: Some(t_max.into()),
                    why: format!(
                        "left branch reaches {left_sup}, right branch only {right_sup}; need {left_sup} {rel} {right_sup}"
                    ),
                });
            }
            let image = Interval::new(ExtReal::Finite(min), right_sup, true, d.hi_closed)
                .map_err(|e| fail(format!("degenerate image: {e}")))?;
            Ok(SupInverse {
                phi: phi.clone(),
                domain: image,
                t_max: Some(t_max.into()),
                strict: false,
                case: ConditionCase::BoundedBelowWithTmax,
                eval: Evaluator::from_rule(phi, t_max),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Evaluator {
    Point(ExtReal),
    Power { p: f64 },
    Exp { p: f64 },
    Affine { a: f64, b: f64 },
    /// Bisection on the strictly increasing branch `[start, end]`.
    Bisect { pwl: PiecewiseLinear, start: f64, end: f64 },
}

impl Evaluator {
    fn from_rule(phi: &ConvexFunction, start: f64) -> Self {
        match phi.rule() {
            Rule::Power { p } => Evaluator::Power { p: *p },
            Rule::Exponential { p } => Evaluator::Exp { p: *p },
            Rule::Affine { a, b } => Evaluator::Affine { a: *a, b: *b },
            Rule::Constant { .. } => unreachable!("constants are handled by the point evaluator"),
            Rule::PiecewiseLinear(pwl) => Evaluator::Bisect { pwl: pwl.clone(), start, end: pwl.last().0 },
        }
    }
}

/// Family of a sup-inverse with a closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupInverseKind {
    /// `y -> y^(1/p)`
    Root { p: f64 },
    /// `y -> ln(y) / p`
    Log { p: f64 },
    Other,
}

/// `y -> sup { t : phi(t) = y }` on the image of `phi`; increasing and
/// concave whenever it can be built.
#[derive(Debug, Clone, PartialEq)]
pub struct SupInverse {
    phi: ConvexFunction,
    domain: Interval,
    t_max: Option<ExtReal>,
    strict: bool,
    case: ConditionCase,
    eval: Evaluator,
}

impl SupInverse {
    /// The function this map inverts.
    pub fn phi(&self) -> &ConvexFunction {
        &self.phi
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn t_max(&self) -> Option<ExtReal> {
        self.t_max
    }

    /// Set iff `phi` itself is invertible, in which case the sup is a plain inverse.
    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn case(&self) -> ConditionCase {
        self.case
    }

    pub fn kind(&self) -> SupInverseKind {
        match self.eval {
            Evaluator::Power { p } => SupInverseKind::Root { p },
            Evaluator::Exp { p } => SupInverseKind::Log { p },
            _ => SupInverseKind::Other,
        }
    }

    pub fn eval(&self, y: f64) -> Result<ExtReal, ConvexError> {
        if !self.domain.contains_f64(y) {
            return Err(ConvexError::OutsideImage { y, image: self.domain });
        }
        Ok(match &self.eval {
            Evaluator::Point(t) => *t,
            Evaluator::Power { p } => ExtReal::from(y.powf(1.0 / p)),
            Evaluator::Exp { p } => ExtReal::from(y.ln() / p),
            Evaluator::Affine { a, b } => ExtReal::from((y - b) / a),
            Evaluator::Bisect { pwl, start, end } => ExtReal::Finite(bisect_increasing(pwl, *start, *end, y)),
        })
    }

    /// Finite-valued evaluation; `+inf` (a constant function on an interval
    /// unbounded above) maps to `f64::INFINITY`.
    pub fn eval_f64(&self, y: f64) -> Result<f64, ConvexError> {
        self.eval(y).map(ExtReal::to_f64)
    }

    /// Deterministic sample of the interior of the image, plus its closed ends.
    pub fn sample_image(&self, count: usize) -> Vec<f64> {
        sample_interval(&self.domain, count)
    }

    /// Sampled monotonicity and concavity check of the constructed map.
    fn self_check(&self) -> Result<(), String> {
        if self.domain.is_point() {
            return Ok(());
        }
        let ys = self.sample_image(257);
        let vals: Vec<f64> = ys.iter().map(|&y| self.eval_f64(y).map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
        for i in 1..ys.len() {
            let tol = 1e-12 * (1.0 + vals[i].abs().max(vals[i - 1].abs()));
            if vals[i] < vals[i - 1] - tol {
                return Err(format!("decreases between y = {} and y = {}", ys[i - 1], ys[i]));
            }
        }
        for i in 1..ys.len() - 1 {
            let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
            if !(y0.is_finite() && y2.is_finite()) {
                continue;
            }
            // concavity: the middle value lies above the chord
            let w = (y1 - y0) / (y2 - y0);
            let chord = vals[i - 1] + w * (vals[i + 1] - vals[i - 1]);
            let tol = 1e-9 * (1.0 + vals[i].abs().max(chord.abs()));
            if vals[i] < chord - tol {
                return Err(format!("not concave near y = {y1}"));
            }
        }
        Ok(())
    }
}

fn bisect_increasing(pwl: &PiecewiseLinear, start: f64, end: f64, y: f64) -> f64 {
    if y <= pwl.interp(start) {
        return start;
    }
    if y >= pwl.interp(end) {
        return end;
    }
    let (mut lo, mut hi) = (start, end);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pwl.interp(mid) <= y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // return whichever end reproduces y more closely
    if (pwl.interp(hi) - y).abs() < (pwl.interp(lo) - y).abs() {
        hi
    } else {
        lo
    }
}

/// Deterministic sample of an interval: its closed endpoints plus `count`
/// interior points, spread on a compactified scale for unbounded ends.
pub fn sample_interval(i: &Interval, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 2);
    if i.is_point() {
        out.push(i.lo.to_f64());
        return out;
    }
    if i.lo_closed {
        out.push(i.lo.to_f64());
    }
    for k in 1..=count {
        let u = k as f64 / (count + 1) as f64;
        out.push(interior_point(i, u));
    }
    if i.hi_closed {
        out.push(i.hi.to_f64());
    }
    out.dedup();
    out
}

/// Maps `u in (0, 1)` monotonically into the interior of `i`.
pub fn interior_point(i: &Interval, u: f64) -> f64 {
    match (i.lo, i.hi) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => a + (b - a) * u,
        (ExtReal::Finite(a), ExtReal::PosInf) => a + (u / (1.0 - u)).powi(3) * 8.0 + u / (1.0 - u),
        (ExtReal::NegInf, ExtReal::Finite(b)) => b - ((1.0 - u) / u).powi(3) * 8.0 - (1.0 - u) / u,
        _ => {
            let s = (2.0 * u - 1.0) / (u * (1.0 - u));
            s * s.abs()
        }
    }
}

/// Kind of an upper condition on the sup-inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpperKind {
    /// `si(y1 y2) <= psi1(y1) * psi2(y2)`
    Power,
    /// `si(y1 y2) <= psi1(y1) + psi2(y2)`
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperConditionReport {
    pub kind: UpperKind,
    pub holds: bool,
    /// Smallest `bound - si(y1 y2)` over the samples.
    pub worst_slack: f64,
    pub worst_index: usize,
    pub slacks: Vec<f64>,
}

/// Checks the multiplicative (`Power`) or additive (`Log`) upper condition
/// on every sample `(y1, y2)` with `y1 > 0`.
pub fn check_upper_condition(
    si: &SupInverse,
    psi1: impl Fn(f64) -> f64,
    psi2: impl Fn(f64) -> f64,
    kind: UpperKind,
    samples: &[(f64, f64)],
) -> Result<UpperConditionReport, ConvexError> {
    if samples.is_empty() {
        return Err(ConvexError::InvalidParameter("no samples".into()));
    }
    let mut slacks = Vec::with_capacity(samples.len());
    let mut holds = true;
    for (index, &(y1, y2)) in samples.iter().enumerate() {
        if !(y1 > 0.0) {
            return Err(ConvexError::UpperDomain { index, reason: format!("y1 = {y1} is not positive") });
        }
        let y = y1 * y2;
        if !si.domain.contains_f64(y) {
            return Err(ConvexError::UpperDomain {
                index,
                reason: format!("product {y} lies outside the image {}", si.domain),
            });
        }
        let lhs = si.eval_f64(y)?;
        let bound = match kind {
            UpperKind::Power => psi1(y1) * psi2(y2),
            UpperKind::Log => psi1(y1) + psi2(y2),
        };
        let slack = bound - lhs;
        if !(slack >= -1e-12 * (1.0 + bound.abs())) {
            holds = false;
        }
        slacks.push(slack);
    }
    let (worst_index, worst_slack) = slacks
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 || s.is_nan() { (i, s) } else { acc });
    Ok(UpperConditionReport { kind, holds, worst_slack, worst_index, slacks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn remark_function() -> ConvexFunction {
        ConvexFunction::piecewise_linear(vec![(-1.0, 1.0), (0.0, 0.0), (3.0, 3.0)], &[(-1.0, 2.0)]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let pow2 = ConvexFunction::power(2.0).unwrap();
        assert_eq!(pow2.eval_f64(-3.0).unwrap(), 0.0);
        let exp2 = ConvexFunction::exponential(2.0).unwrap();
        assert_eq!(exp2.eval_f64(0.0).unwrap(), 1.0);
        assert_eq!(remark_function().eval_f64(-1.0).unwrap(), 2.0);
        assert_eq!(remark_function().eval_f64(-0.5).unwrap(), 0.5);
    }

    #[test]
    fn exponential_infinite_conventions() {
        let e = ConvexFunction::exponential(1.0).unwrap();
        assert_eq!(e.eval(ExtReal::NegInf).unwrap(), ExtReal::ZERO);
        assert_eq!(e.eval(ExtReal::PosInf).unwrap(), ExtReal::PosInf);
        let pow = ConvexFunction::power(2.0).unwrap();
        assert!(matches!(pow.eval(ExtReal::NegInf), Err(ConvexError::Domain { .. })));
        let restricted = e.on(Interval::open(0.0, 1.0).unwrap()).unwrap();
        assert!(restricted.eval(ExtReal::NegInf).is_err());
    }

    #[test]
    fn eval_outside_domain_is_error() {
        assert!(matches!(remark_function().eval_f64(3.5), Err(ConvexError::Domain { .. })));
        let c = ConvexFunction::constant(5.0).unwrap().on(Interval::closed(0.0, 1.0).unwrap()).unwrap();
        assert!(c.eval_f64(1.5).is_err());
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(ConvexFunction::power(0.5).is_err());
        assert!(ConvexFunction::exponential(0.0).is_err());
        assert!(matches!(
            ConvexFunction::piecewise_linear(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.5)], &[]),
            Err(ConvexError::NotConvex(_))
        ));
        assert!(ConvexFunction::piecewise_linear(vec![(0.0, 0.0), (0.0, 1.0)], &[]).is_err());
        assert!(matches!(
            ConvexFunction::piecewise_linear(vec![(0.0, 1.0), (1.0, 0.0)], &[(0.0, 0.5)]),
            Err(ConvexError::NotConvex(_))
        ));
        assert!(ConvexFunction::piecewise_linear(vec![(0.0, 1.0), (1.0, 0.0), (2.0, 1.0)], &[(1.0, 3.0)]).is_err());
    }

    #[test]
    fn classify_examples() {
        let c = ConvexFunction::constant(5.0).unwrap().on(Interval::closed(0.0, 1.0).unwrap()).unwrap();
        let r = classify(&c);
        assert_eq!(r.case, ConditionCase::Constant);
        assert_eq!(sup_inverse(&c).unwrap().eval_f64(5.0).unwrap(), 1.0);

        let e = classify(&ConvexFunction::exponential(1.0).unwrap());
        assert_eq!(e.case, ConditionCase::StrictlyIncreasing);
        assert_eq!(e.image.unwrap(), Interval::new(ExtReal::ZERO, ExtReal::PosInf, false, false).unwrap());

        let p = classify(&ConvexFunction::power(2.0).unwrap());
        assert_eq!(p.case, ConditionCase::BoundedBelowWithTmax);
        assert_eq!(p.t_max, Some(ExtReal::ZERO));
        assert_eq!(p.image.unwrap(), Interval::new(ExtReal::ZERO, ExtReal::PosInf, true, false).unwrap());
    }

    #[test]
    fn remark_function_is_admissible() {
        let r = classify(&remark_function());
        assert_eq!(r.case, ConditionCase::BoundedBelowWithTmax);
        assert_eq!(r.image.unwrap(), Interval::closed(0.0, 3.0).unwrap());
        let si = sup_inverse(&remark_function()).unwrap();
        assert_eq!(si.eval_f64(2.0).unwrap(), 2.0);
        for k in 0..=30 {
            let y = k as f64 * 0.1;
            assert!((si.eval_f64(y).unwrap() - y).abs() < 1e-12, "y = {y}");
        }
    }

    #[test]
    fn remark_function_fails_when_left_value_reaches_open_right_end() {
        // on [-1, 3) with phi(-1) = 3 the value 3 is taken only on the left branch
        let phi = ConvexFunction::piecewise_linear(vec![(-1.0, 1.0), (0.0, 0.0), (3.0, 3.0)], &[(-1.0, 3.0)])
            .unwrap()
            .on(Interval::new((-1.0).into(), 3.0.into(), true, false).unwrap())
            .unwrap();
        assert_eq!(classify(&phi).case, ConditionCase::Fails);
        assert!(sup_inverse(&phi).is_err());
    }

    #[test]
    fn failing_shapes() {
        let dec = ConvexFunction::affine(-1.0, 0.0).unwrap().on(Interval::closed(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(classify(&dec).case, ConditionCase::Fails);
        // jump at sup I
        let jump = ConvexFunction::piecewise_linear(vec![(0.0, 0.0), (1.0, 1.0)], &[(1.0, 2.0)]).unwrap();
        assert_eq!(classify(&jump).case, ConditionCase::Fails);
        // left branch climbs above the right branch
        let lop = ConvexFunction::piecewise_linear(vec![(-3.0, 3.0), (0.0, 0.0), (1.0, 1.0)], &[]).unwrap();
        let r = classify(&lop);
        assert_eq!(r.case, ConditionCase::Fails);
        assert_eq!(r.t_max, Some(ExtReal::ZERO));
    }

    #[test]
    fn power_on_subintervals() {
        let left = ConvexFunction::power(2.0).unwrap().on(Interval::new(ExtReal::NegInf, 0.0.into(), false, true).unwrap()).unwrap();
        let r = classify(&left);
        assert_eq!(r.case, ConditionCase::Constant);
        assert_eq!(sup_inverse(&left).unwrap().eval_f64(0.0).unwrap(), 0.0);

        let right = ConvexFunction::power(3.0).unwrap().on(Interval::closed(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(classify(&right).case, ConditionCase::StrictlyIncreasing);
        assert!((sup_inverse(&right).unwrap().eval_f64(8.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_on_unbounded_interval_maps_to_infinity() {
        let si = sup_inverse(&ConvexFunction::constant(1.0).unwrap()).unwrap();
        assert_eq!(si.eval(1.0).unwrap(), ExtReal::PosInf);
        assert!(si.eval(2.0).is_err());
    }

    #[test]
    fn sup_inverse_examples() {
        let p = sup_inverse(&ConvexFunction::power(2.0).unwrap()).unwrap();
        assert_eq!(p.eval_f64(4.0).unwrap(), 2.0);
        assert!(!p.strict());
        let e = sup_inverse(&ConvexFunction::exponential(2.0).unwrap()).unwrap();
        assert_eq!(e.eval_f64(1.0).unwrap(), 0.0);
        assert!(e.strict());
        assert!(matches!(e.eval(0.0), Err(ConvexError::OutsideImage { .. })));
    }

    #[test]
    fn upper_condition_examples() {
        let p = sup_inverse(&ConvexFunction::power(2.0).unwrap()).unwrap();
        let r = check_upper_condition(&p, f64::sqrt, f64::sqrt, UpperKind::Power, &[(4.0, 9.0)]).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_slack, 0.0);

        let e1 = std::f64::consts::E;
        let l = sup_inverse(&ConvexFunction::exponential(1.0).unwrap()).unwrap();
        let r = check_upper_condition(&l, f64::ln, f64::ln, UpperKind::Log, &[(e1, e1 * e1)]).unwrap();
        assert!(r.holds);
        assert!(r.worst_slack.abs() < 1e-14);

        let r = check_upper_condition(&l, f64::ln, |y| y.ln() + 1.0, UpperKind::Log, &[(2.0, 3.0), (0.5, 7.0)]).unwrap();
        assert!(r.worst_slack >= 1.0 - 1e-12);
    }

    #[test]
    fn upper_condition_domain_errors() {
        let l = sup_inverse(&ConvexFunction::exponential(1.0).unwrap()).unwrap();
        assert!(matches!(
            check_upper_condition(&l, f64::ln, f64::ln, UpperKind::Log, &[(2.0, -1.0)]),
            Err(ConvexError::UpperDomain { index: 0, .. })
        ));
        assert!(matches!(
            check_upper_condition(&l, f64::ln, f64::ln, UpperKind::Log, &[(1.0, 1.0), (-2.0, -1.0)]),
            Err(ConvexError::UpperDomain { index: 1, .. })
        ));
    }

    #[test]
    fn failing_upper_condition_reports_slack() {
        let p = sup_inverse(&ConvexFunction::power(2.0).unwrap()).unwrap();
        let r = check_upper_condition(&p, |y| 0.5 * y.sqrt(), f64::sqrt, UpperKind::Power, &[(4.0, 9.0)]).unwrap();
        assert!(!r.holds);
        assert!((r.worst_slack + 3.0).abs() < 1e-12);
    }
}
