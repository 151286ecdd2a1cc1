//! One-dimensional minimization over the radius `r`.
//!
//! Every admissible `r` gives a valid upper bound, so the infimum only has to
//! be approached from above: stopping early, or missing a narrow dip, weakens
//! a bound but never invalidates it. A log-spaced grid scan is followed by
//! golden-section refinement and a final Newton polish on central differences.

use serde::Serialize;

pub const GRID_POINTS: usize = 128;
/// Lower end of the grid relative to the upper end.
pub const GRID_LOW: f64 = 1e-6;
/// The grid stops this far (relatively) inside an open upper end.
pub const UPPER_MARGIN: f64 = 1e-12;
/// Upper end of the scan when the radius is unbounded.
pub const UNBOUNDED_CAP: f64 = 1e3;
/// Relative width at which golden-section search stops.
pub const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MinimizeError {
    #[error("objective is not finite anywhere on the search grid")]
    NoFiniteValue,
    #[error("invalid search interval ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minimum {
    pub r_star: f64,
    pub value: f64,
    pub evaluations: usize,
}

struct Counted<F> {
    f: F,
    count: usize,
}

impl<F: FnMut(f64) -> f64> Counted<F> {
    /// Non-finite values and NaN count as `+inf`.
    fn call(&mut self, r: f64) -> f64 {
        self.count += 1;
        let v = (self.f)(r);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// `inf` of `objective` over `0 < r < r_max` (`r_max` may be `+inf`).
pub fn minimize_over_r(objective: impl FnMut(f64) -> f64, r_max: f64) -> Result<Minimum, MinimizeError> {
    if r_max.is_infinite() {
        minimize_on(objective, GRID_LOW, f64::INFINITY)
    } else {
        minimize_on(objective, GRID_LOW * r_max, r_max)
    }
}

/// `inf` of `objective` over `[lo, hi)`, approached from inside.
///
/// With `hi = +inf` the scan stops at `UNBOUNDED_CAP` and is extended once by
/// a factor `1e3` if the objective is still decreasing there.
pub fn minimize_on(objective: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> Result<Minimum, MinimizeError> {
    if !(lo > 0.0 && lo.is_finite() && hi > lo) {
        return Err(MinimizeError::InvalidInterval { lo, hi });
    }
    let mut f = Counted { f: objective, count: 0 };
    let unbounded = hi.is_infinite();
    let top = if unbounded { UNBOUNDED_CAP.max(2.0 * lo) } else { hi * (1.0 - UPPER_MARGIN) };
    let top = top.max(lo);
    let mut grid = log_grid(lo, top, GRID_POINTS);
    let mut values: Vec<f64> = grid.iter().map(|&r| f.call(r)).collect();
    if unbounded && argmin(&values) == Some(grid.len() - 1) {
        let ext = log_grid(top, top * 1e3, GRID_POINTS);
        for &r in &ext[1..] {
            grid.push(r);
            values.push(f.call(r));
        }
    }
    let Some(i) = argmin(&values) else {
        return Err(MinimizeError::NoFiniteValue);
    };
    let (mut best_r, mut best_v) = (grid[i], values[i]);

    // golden section inside the bracket of neighbours
    let a = grid[i.saturating_sub(1)];
    let b = grid[(i + 1).min(grid.len() - 1)];
    if b > a {
        let (r, v) = golden(&mut f, a, b);
        if v < best_v {
            best_r = r;
            best_v = v;
        }
    }

    // Newton polish: golden section only locates r to about sqrt(eps)
    for _ in 0..3 {
        let h = 1e-5 * best_r;
        if best_r - h < a || best_r + h > b {
            break;
        }
        let (fm, fp) = (f.call(best_r - h), f.call(best_r + h));
        let d1 = (fp - fm) / (2.0 * h);
        let d2 = (fp - 2.0 * best_v + fm) / (h * h);
        if !(d2 > 0.0 && d1.is_finite()) {
            break;
        }
        let cand = best_r - d1 / d2;
        if !(cand > a && cand < b) || cand == best_r {
            break;
        }
        let v = f.call(cand);
        if v <= best_v + 1e-14 * (1.0 + best_v.abs()) {
            // the reported value must belong to the reported radius
            best_r = cand;
            best_v = v;
        } else {
            break;
        }
    }
    Ok(Minimum { r_star: best_r, value: best_v, evaluations: f.count })
}

fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| v < values[b]) {
            best = Some(i);
        }
    }
    best
}

fn golden<F: FnMut(f64) -> f64>(f: &mut Counted<F>, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f.call(c), f.call(d));
    while (b - a) > GOLDEN_TOL * c.abs().max(f64::MIN_POSITIVE) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f.call(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f.call(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fock_objective() {
        let m = minimize_over_r(|r| r * r / 2.0 + 2.0 * (1.0 / r).ln(), f64::INFINITY).unwrap();
        assert!((m.r_star - 2f64.sqrt()).abs() < 1e-8, "{}", m.r_star);
        let exact = 1.0 - 2f64.ln();
        assert!(m.value >= exact - 1e-15);
        assert!(m.value - exact < 1e-9);
    }

    #[test]
    fn decreasing_objective_goes_to_the_boundary() {
        let big_r = 3.0;
        let m = minimize_over_r(|r| 2.0 * (1.0 / r).ln(), big_r).unwrap();
        let exact = 2.0 * (1.0 / big_r).ln();
        assert!(m.r_star < big_r);
        assert!((m.value - exact).abs() < 1e-9);
        assert!(m.value >= exact);
    }

    #[test]
    fn constant_objective() {
        let m = minimize_over_r(|_| 4.25, 1.0).unwrap();
        assert_eq!(m.value, 4.25);
        assert!(m.r_star > 0.0 && m.r_star < 1.0);
    }

    #[test]
    fn quartic_objective() {
        // r^4 - 2 ln r has its minimum at r = 2^(-1/4), value 1/2 + ln(2)/2
        let m = minimize_over_r(|r| r.powi(4) - 2.0 * r.ln(), 10.0).unwrap();
        let exact = 0.5 + 2f64.ln() / 2.0;
        assert!(m.value >= exact - 1e-15 && m.value - exact < 1e-9);
        assert!((m.r_star - 2f64.powf(-0.25)).abs() < 1e-7);
    }

    #[test]
    fn extends_past_the_cap() {
        // minimum at r = 2000
        let m = minimize_over_r(|r| r / 2000.0 - (r / 2000.0).ln(), f64::INFINITY).unwrap();
        assert!((m.r_star / 2000.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_finite_value() {
        assert_eq!(minimize_over_r(|_| f64::NAN, 1.0).unwrap_err(), MinimizeError::NoFiniteValue);
        assert!(minimize_on(|r| r, 2.0, 1.0).is_err());
    }

    #[test]
    fn infeasible_points_are_skipped() {
        let m = minimize_over_r(|r| if r < 0.5 { f64::INFINITY } else { (r - 0.7).powi(2) }, 1.0).unwrap();
        assert!((m.r_star - 0.7).abs() < 1e-7);
    }
}
