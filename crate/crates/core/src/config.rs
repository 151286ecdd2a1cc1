//! JSON run configurations, one schema per subcommand.
//!
//! Unknown fields are rejected. Parse errors carry the dotted path of the
//! offending field so that the CLI can name it.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::convex::{ConvexError, ConvexFunction};
use crate::dbar::{DbarQuadrature, Source};
use crate::ext::Interval;
use crate::geom::{Domain, HoloFunction, Weight};
use crate::quadrature::QuadratureSpec;
use crate::report::Format;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid {field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

/// Parses `text` as the config of `command`. A `"command"` entry, if
/// present, must name the same subcommand.
pub fn parse<T: DeserializeOwned>(text: &str, command: &str) -> Result<T, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))?;
    if let Some(c) = value.get("command") {
        if c.as_str() != Some(command) {
            return Err(ConfigError::new("command", format!("config is for {c}, not \"{command}\"")));
        }
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path == "." { "config" } else { &path }, e.into_inner().to_string())
    })
}

/// A convex function as written in a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum PhiRule {
    Power { p: f64 },
    Exponential { p: f64 },
    Affine { a: f64, b: f64 },
    Constant { c: f64 },
    PiecewiseLinear {
        points: Vec<[f64; 2]>,
        #[serde(default)]
        overrides: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiSpec {
    #[serde(flatten)]
    pub rule: PhiRule,
    /// Restriction of the natural domain.
    #[serde(default)]
    pub domain: Option<Interval>,
}

impl PhiSpec {
    pub fn build(&self) -> Result<ConvexFunction, ConvexError> {
        let phi = match &self.rule {
            PhiRule::Power { p } => ConvexFunction::power(*p)?,
            PhiRule::Exponential { p } => ConvexFunction::exponential(*p)?,
            PhiRule::Affine { a, b } => ConvexFunction::affine(*a, *b)?,
            PhiRule::Constant { c } => ConvexFunction::constant(*c)?,
            PhiRule::PiecewiseLinear { points, overrides } => ConvexFunction::piecewise_linear(
                points.iter().map(|p| (p[0], p[1])).collect(),
                &overrides.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>(),
            )?,
        };
        match self.domain {
            Some(d) => phi.on(d),
            None => Ok(phi),
        }
    }
}

/// `n` equispaced values on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64).collect()
    }
}

/// Evaluation points: explicit real coordinates, or a rectangle in `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridSpec {
    Points(Vec<Vec<f64>>),
    Rect { re: Axis, im: Axis },
}

impl GridSpec {
    /// Points in row-major order (imaginary part outer).
    pub fn points(&self, n: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
        match self {
            GridSpec::Points(ps) => {
                if let Some(p) = ps.iter().find(|p| p.len() != 2 * n || p.iter().any(|x| !x.is_finite())) {
                    return Err(ConfigError::new("grid.points", format!("{p:?} is not a finite point of C^{n}")));
                }
                Ok(ps.clone())
            }
            GridSpec::Rect { re, im } => {
                if n != 1 {
                    return Err(ConfigError::new("grid.rect", "rectangular grids need n = 1"));
                }
                for (name, a) in [("grid.rect.re", re), ("grid.rect.im", im)] {
                    if a.n == 0 || !(a.lo.is_finite() && a.hi.is_finite() && a.lo <= a.hi) {
                        return Err(ConfigError::new(name, "need n >= 1 and finite lo <= hi"));
                    }
                }
                Ok(im.values().into_iter().flat_map(|y| re.values().into_iter().map(move |x| vec![x, y])).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    #[default]
    Thm31,
    Thm41,
    SupBased,
    All,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub method: MethodChoice,
    pub domain: Domain,
    /// `w` for the norm-based bounds.
    #[serde(default)]
    pub weight: Option<Weight>,
    #[serde(default = "default_p")]
    pub p: f64,
    /// `phi` and `v` for the sup-inverse bound.
    #[serde(default)]
    pub phi: Option<PhiSpec>,
    #[serde(default)]
    pub v: Option<Weight>,
    /// The function whose norm / `N_phi` is computed when not given directly.
    #[serde(default)]
    pub function: Option<HoloFunction>,
    #[serde(default)]
    pub norm: Option<f64>,
    #[serde(default)]
    pub n_phi: Option<f64>,
    pub grid: GridSpec,
    /// Rule for ball means.
    #[serde(default)]
    pub quadrature: Option<QuadratureSpec>,
    /// Rule for the norm and `N_phi` integrals.
    #[serde(default)]
    pub norm_quadrature: Option<QuadratureSpec>,
    #[serde(default)]
    pub output: Option<Format>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_p() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JensenCheckConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_max_atoms")]
    pub max_atoms: usize,
    #[serde(default = "default_max_pieces")]
    pub max_pieces: usize,
    #[serde(default)]
    pub output: Option<Format>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_trials() -> usize {
    10_000
}

fn default_max_atoms() -> usize {
    8
}

fn default_max_pieces() -> usize {
    6
}

impl Default for JensenCheckConfig {
    fn default() -> Self {
        Self { command: None, trials: default_trials(), max_atoms: default_max_atoms(), max_pieces: default_max_pieces(), output: None, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockDemoConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default = "origin")]
    pub grid: GridSpec,
    /// If given, `||f||_w` is computed by quadrature; otherwise it is `1`.
    #[serde(default)]
    pub function: Option<HoloFunction>,
    #[serde(default)]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(default)]
    pub output: Option<Format>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn origin() -> GridSpec {
    GridSpec::Points(vec![vec![0.0, 0.0]])
}

impl Default for FockDemoConfig {
    fn default() -> Self {
        Self { command: None, grid: origin(), function: None, quadrature: None, output: None, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfplaneDemoConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default = "default_heights")]
    pub heights: Vec<f64>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(default)]
    pub output: Option<Format>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_heights() -> Vec<f64> {
    vec![2.0, 5.0, 10.0, 100.0]
}

impl Default for HalfplaneDemoConfig {
    fn default() -> Self {
        Self { command: None, heights: default_heights(), re: 0.0, quadrature: None, output: None, seed: None }
    }
}

/// Random admissible `(z, r)`: `|z| <= z_radius`, `r` uniform on `[r_min, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPoints {
    pub count: usize,
    #[serde(default = "default_z_radius")]
    pub z_radius: f64,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
}

fn default_z_radius() -> f64 {
    3.0
}

fn default_r_min() -> f64 {
    0.05
}

fn default_r_max() -> f64 {
    0.95
}

impl Default for RandomPoints {
    fn default() -> Self {
        Self { count: 20, z_radius: default_z_radius(), r_min: default_r_min(), r_max: default_r_max() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbarCheckConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default = "default_source")]
    pub g: Source,
    #[serde(default = "zero_weight")]
    pub v: Weight,
    #[serde(default = "default_a")]
    pub a: f64,
    /// Explicit `[re, im, r]` triples.
    #[serde(default)]
    pub points: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub random: Option<RandomPoints>,
    #[serde(default)]
    pub quadrature: DbarQuadrature,
    #[serde(default)]
    pub output: Option<Format>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_source() -> Source {
    Source::plain_bump(1.0)
}

fn zero_weight() -> Weight {
    Weight::constant(0.0)
}

fn default_a() -> f64 {
    2.0
}

impl Default for DbarCheckConfig {
    fn default() -> Self {
        Self {
            command: None,
            g: default_source(),
            v: zero_weight(),
            a: default_a(),
            points: None,
            random: None,
            quadrature: DbarQuadrature::default(),
            output: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyAllConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub output: Option<Format>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_radius_names_no_parse_error_but_validates() {
        let cfg: BoundConfig = parse(
            r#"{"domain": {"type": "ball", "center": [0, 0], "radius": -1}, "weight": {"type": "abs-sq"}, "norm": 1, "grid": {"points": [[0, 0]]}}"#,
            "bound",
        )
        .unwrap();
        let err = cfg.domain.validate().unwrap_err();
        assert!(err.to_string().contains("domain.radius"));
    }

    #[test]
    fn type_errors_carry_the_path() {
        let err = parse::<BoundConfig>(r#"{"domain": {"type": "ball", "center": [0, 0], "radius": "x"}, "grid": {"points": []}}"#, "bound").unwrap_err();
        // internally tagged enums buffer their content, so the path stops at the enum
        assert_eq!(err.field, "domain");
        assert!(err.message.contains("radius") || err.message.contains("invalid type"));
        let err = parse::<HalfplaneDemoConfig>(r#"{"heights": [1, "x"]}"#, "halfplane-demo").unwrap_err();
        assert_eq!(err.field, "heights[1]");
        let err = parse::<JensenCheckConfig>(r#"{"trials": 10, "bogus": 1}"#, "jensen-check").unwrap_err();
        assert!(err.message.contains("bogus"));
    }

    #[test]
    fn command_must_match() {
        let err = parse::<JensenCheckConfig>(r#"{"command": "fock-demo"}"#, "jensen-check").unwrap_err();
        assert_eq!(err.field, "command");
    }

    #[test]
    fn phi_specs() {
        let s: PhiSpec = serde_json::from_str(r#"{"rule": "piecewise-linear", "points": [[-1, 1], [0, 0], [3, 3]], "overrides": [[-1, 2]]}"#).unwrap();
        let phi = s.build().unwrap();
        assert_eq!(phi.eval_f64(-1.0).unwrap(), 2.0);
        let s: PhiSpec = serde_json::from_str(r#"{"rule": "exponential", "p": 1, "domain": {"lo": "-inf", "hi": 0, "lo_closed": false, "hi_closed": true}}"#).unwrap();
        assert!(s.build().unwrap().eval_f64(1.0).is_err());
    }

    #[test]
    fn rect_grid_order() {
        let g: GridSpec = serde_json::from_str(r#"{"rect": {"re": {"lo": 0, "hi": 1, "n": 2}, "im": {"lo": 5, "hi": 6, "n": 2}}}"#).unwrap();
        assert_eq!(g.points(1).unwrap(), vec![vec![0.0, 5.0], vec![1.0, 5.0], vec![0.0, 6.0], vec![1.0, 6.0]]);
    }
}
