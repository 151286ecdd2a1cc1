//! Node sets for balls, spheres and boxes in `R^d`, and ordered compensated
//! summation.
//!
//! Node sets are plain data: points are stored flat with stride `dim`, and
//! every integral over them is summed in node order, so a fixed spec and seed
//! give bit-identical results.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

/// Largest node set we are willing to materialize.
pub const MAX_NODES: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("{rule} quadrature is not available in dimension {dim}")]
    Unsupported { rule: &'static str, dim: usize },
}

/// How to integrate over a ball (or sphere, or box).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuadratureSpec {
    /// Gauss-Legendre in the radius times an equispaced angular rule (real
    /// dimension 2); Gauss-Legendre per axis on boxes and segments.
    PolarGauss { radial: usize, angular: usize },
    /// Uniform Monte Carlo with an explicit seed.
    Mc { n: usize, seed: u64 },
}

impl QuadratureSpec {
    pub const DEFAULT_POLAR: QuadratureSpec = QuadratureSpec::PolarGauss { radial: 64, angular: 128 };
    pub const DEFAULT_MC: QuadratureSpec = QuadratureSpec::Mc { n: 200_000, seed: 7 };

    /// Default rule for complex dimension `n`.
    pub fn default_for(n: usize) -> Self {
        if n == 1 {
            Self::DEFAULT_POLAR
        } else {
            Self::DEFAULT_MC
        }
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        match *self {
            QuadratureSpec::PolarGauss { radial, angular } => {
                if radial < 2 || angular < 3 {
                    return Err(QuadratureError::InvalidSpec(format!(
                        "polar-gauss needs radial >= 2 and angular >= 3, got {radial} x {angular}"
                    )));
                }
            }
            QuadratureSpec::Mc { n, .. } => {
                if n == 0 {
                    return Err(QuadratureError::InvalidSpec("mc needs n >= 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            QuadratureSpec::Mc { n, .. } => QuadratureSpec::Mc { n, seed },
            other => other,
        }
    }

    pub fn is_mc(&self) -> bool {
        matches!(self, QuadratureSpec::Mc { .. })
    }
}

/// Weighted points in `R^dim`, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Nodes {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Nodes {
    pub fn empty(dim: usize) -> Self {
        Self { dim, points: Vec::new(), weights: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks_exact(self.dim.max(1)).zip(self.weights.iter().copied())
    }

    pub fn push(&mut self, p: &[f64], w: f64) {
        debug_assert_eq!(p.len(), self.dim);
        self.points.extend_from_slice(p);
        self.weights.push(w);
    }

    pub fn total_weight(&self) -> f64 {
        sum(self.weights.iter().copied())
    }

    /// `sum_i w_i f(x_i)` in node order.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut acc = Neumaier::default();
        for (p, w) in self.iter() {
            acc.add(w * f(p));
        }
        acc.total()
    }

    /// Evaluates `f` at every node in parallel; values come back in node order.
    pub fn par_values<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        use rayon::prelude::*;
        self.points.par_chunks_exact(self.dim.max(1)).map(f).collect()
    }

    pub fn append(&mut self, other: Nodes) {
        assert_eq!(self.dim, other.dim);
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        if self.sum.is_finite() {
            self.sum + self.comp
        } else {
            self.sum
        }
    }
}

pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for x in xs {
        acc.add(x);
    }
    acc.total()
}

/// Gauss-Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(n.max(2)).expect("degree >= 2");
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule.as_node_weight_pairs().iter().map(|&(x, w)| (mid + half * x, half * w)).collect()
}

/// Volume of the Euclidean ball of radius `r` in `R^dim`.
pub fn ball_volume_real(dim: usize, r: f64) -> f64 {
    // V_d = V_{d-2} * 2 pi r^2 / d, with V_0 = 1 and V_1 = 2 r
    let (mut v, start) = if dim % 2 == 0 { (1.0, 2) } else { (2.0 * r, 3) };
    let mut d = start;
    while d <= dim {
        v *= 2.0 * PI * r * r / d as f64;
        d += 2;
    }
    v
}

/// Surface area of the unit sphere in `R^dim`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * ball_volume_real(dim, 1.0)
}

fn check_size(count: usize) -> Result<(), QuadratureError> {
    if count > MAX_NODES {
        return Err(QuadratureError::InvalidSpec(format!("{count} nodes exceed the limit of {MAX_NODES}")));
    }
    Ok(())
}

/// Nodes for the ball `B(center, r)` with weights summing to (approximately)
/// its volume. Also covers the annulus `r_in < |x - center| < r` when `r_in > 0`.
pub fn ball_nodes(center: &[f64], r_in: f64, r: f64, spec: &QuadratureSpec) -> Result<Nodes, QuadratureError> {
    spec.validate()?;
    let dim = center.len();
    if dim == 0 {
        return Err(QuadratureError::InvalidSpec("zero-dimensional ball".into()));
    }
    let mut nodes = Nodes::empty(dim);
    match *spec {
        QuadratureSpec::PolarGauss { radial, angular } => match dim {
            1 => {
                for (a, b) in [(-r, -r_in), (r_in, r)] {
                    for (t, w) in gauss_legendre(a, b, radial) {
                        nodes.push(&[center[0] + t], w);
                    }
                }
            }
            2 => {
                check_size(radial * angular)?;
                let dtheta = 2.0 * PI / angular as f64;
                let dirs: Vec<(f64, f64)> = (0..angular).map(|k| (k as f64 * dtheta).sin_cos()).collect();
                for (t, w) in gauss_legendre(r_in, r, radial) {
                    for &(s, c) in &dirs {
                        nodes.push(&[center[0] + t * c, center[1] + t * s], w * t * dtheta);
                    }
                }
            }
            _ => return Err(QuadratureError::Unsupported { rule: "polar-gauss", dim }),
        },
        QuadratureSpec::Mc { n, seed } => {
            check_size(n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vol = ball_volume_real(dim, r) - ball_volume_real(dim, r_in);
            let w = vol / n as f64;
            let unif = Uniform::new(0.0f64, 1.0).expect("valid range");
            let inner = (r_in / r).powi(dim as i32);
            let mut dir = vec![0.0; dim];
            let mut p = vec![0.0; dim];
            for _ in 0..n {
                unit_direction(&mut rng, &mut dir);
                // radius with density proportional to t^(dim-1) on [r_in, r]
                let u: f64 = unif.sample(&mut rng);
                let t = r * (inner + (1.0 - inner) * u).powf(1.0 / dim as f64);
                for k in 0..dim {
                    p[k] = center[k] + t * dir[k];
                }
                nodes.push(&p, w);
            }
        }
    }
    Ok(nodes)
}

fn unit_direction(rng: &mut ChaCha8Rng, dir: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for d in dir.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *d = g;
            norm2 += g * g;
        }
        if norm2 > 1e-300 {
            let inv = 1.0 / norm2.sqrt();
            dir.iter_mut().for_each(|d| *d *= inv);
            return;
        }
    }
}

/// Nodes on the sphere `|x - center| = r` with weights summing to one, so that
/// integrating gives the spherical average.
pub fn sphere_nodes(center: &[f64], r: f64, spec: &QuadratureSpec) -> Result<Nodes, QuadratureError> {
    spec.validate()?;
    let dim = center.len();
    let mut nodes = Nodes::empty(dim);
    match *spec {
        QuadratureSpec::PolarGauss { angular, .. } => match dim {
            2 => {
                let w = 1.0 / angular as f64;
                for k in 0..angular {
                    let (s, c) = (2.0 * PI * k as f64 / angular as f64).sin_cos();
                    nodes.push(&[center[0] + r * c, center[1] + r * s], w);
                }
            }
            1 => {
                nodes.push(&[center[0] - r], 0.5);
                nodes.push(&[center[0] + r], 0.5);
            }
            _ => return Err(QuadratureError::Unsupported { rule: "polar-gauss", dim }),
        },
        QuadratureSpec::Mc { n, seed } => {
            check_size(n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = 1.0 / n as f64;
            let mut dir = vec![0.0; dim];
            let mut p = vec![0.0; dim];
            for _ in 0..n {
                unit_direction(&mut rng, &mut dir);
                for k in 0..dim {
                    p[k] = center[k] + r * dir[k];
                }
                nodes.push(&p, w);
            }
        }
    }
    Ok(nodes)
}

/// Nodes for the box `prod [lo_k, hi_k]`.
pub fn box_nodes(lo: &[f64], hi: &[f64], spec: &QuadratureSpec) -> Result<Nodes, QuadratureError> {
    spec.validate()?;
    let dim = lo.len();
    let mut nodes = Nodes::empty(dim);
    match *spec {
        QuadratureSpec::PolarGauss { radial, .. } => {
            let count = radial.checked_pow(dim as u32).unwrap_or(usize::MAX);
            check_size(count)?;
            let axes: Vec<Vec<(f64, f64)>> = (0..dim).map(|k| gauss_legendre(lo[k], hi[k], radial)).collect();
            let mut idx = vec![0usize; dim];
            let mut p = vec![0.0; dim];
            'outer: loop {
                let mut w = 1.0;
                for k in 0..dim {
                    let (x, wk) = axes[k][idx[k]];
                    p[k] = x;
                    w *= wk;
                }
                nodes.push(&p, w);
                for k in (0..dim).rev() {
                    idx[k] += 1;
                    if idx[k] < radial {
                        continue 'outer;
                    }
                    idx[k] = 0;
                }
                break;
            }
        }
        QuadratureSpec::Mc { n, seed } => {
            check_size(n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
            let w = vol / n as f64;
            let unif = Uniform::new(0.0f64, 1.0).expect("valid range");
            let mut p = vec![0.0; dim];
            for _ in 0..n {
                for k in 0..dim {
                    let u: f64 = unif.sample(&mut rng);
                    p[k] = lo[k] + (hi[k] - lo[k]) * u;
                }
                nodes.push(&p, w);
            }
        }
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_ball_volumes() {
        assert!((ball_volume_real(2, 1.0) - PI).abs() < 1e-15);
        assert!((ball_volume_real(3, 2.0) - 4.0 / 3.0 * PI * 8.0).abs() < 1e-12);
        assert!((ball_volume_real(4, 1.0) - PI * PI / 2.0).abs() < 1e-15);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-15);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-14);
    }

    #[test]
    fn polar_rule_integrates_polynomials_exactly() {
        let nodes = ball_nodes(&[0.3, -0.2], 0.0, 1.5, &QuadratureSpec::PolarGauss { radial: 8, angular: 16 }).unwrap();
        assert!((nodes.total_weight() - PI * 2.25).abs() < 1e-13);
        // |x - c|^2 over the ball = pi r^4 / 2
        let m = nodes.integrate(|p| (p[0] - 0.3).powi(2) + (p[1] + 0.2).powi(2));
        assert!((m - PI * 1.5f64.powi(4) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn annulus_weights_sum_to_area() {
        let nodes = ball_nodes(&[0.0, 0.0], 1.0, 2.0, &QuadratureSpec::PolarGauss { radial: 8, angular: 16 }).unwrap();
        assert!((nodes.total_weight() - 3.0 * PI).abs() < 1e-13);
        assert!(nodes.iter().all(|(p, _)| (p[0].hypot(p[1]) - 1.5).abs() <= 0.5));
    }

    #[test]
    fn mc_is_seed_deterministic() {
        let spec = QuadratureSpec::Mc { n: 1000, seed: 11 };
        let a = ball_nodes(&[0.0; 4], 0.0, 1.0, &spec).unwrap();
        let b = ball_nodes(&[0.0; 4], 0.0, 1.0, &spec).unwrap();
        assert_eq!(a, b);
        let c = ball_nodes(&[0.0; 4], 0.0, 1.0, &spec.with_seed(12)).unwrap();
        assert_ne!(a, c);
        assert!(a.iter().all(|(p, _)| p.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12));
    }

    #[test]
    fn box_rule_integrates_constants() {
        let nodes = box_nodes(&[0.0, -1.0], &[2.0, 1.0], &QuadratureSpec::PolarGauss { radial: 5, angular: 8 }).unwrap();
        assert_eq!(nodes.len(), 25);
        assert!((nodes.total_weight() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum(xs), 2.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(QuadratureSpec::PolarGauss { radial: 1, angular: 8 }.validate().is_err());
        assert!(QuadratureSpec::Mc { n: 0, seed: 1 }.validate().is_err());
        assert!(matches!(
            ball_nodes(&[0.0; 4], 0.0, 1.0, &QuadratureSpec::DEFAULT_POLAR),
            Err(QuadratureError::Unsupported { .. })
        ));
    }
}
