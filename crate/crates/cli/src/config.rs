//! Scenario configuration: the TOML schema, the built-in scenarios and the
//! translation into core objects.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use zermelo_core::chart::{ConformalFactor, MatrixField};
use zermelo_core::correspondence::HomotheticNavigation;
use zermelo_core::isoparametric::{normalize_transnormal, ScalarField, ScalarFieldSpec};
use zermelo_core::{ChartDomain, Datum, Mat, Metric, VectorField};

use crate::error::CliError;

const BUILTINS: [(&str, &str); 4] = [
    ("funk-disk", include_str!("../scenarios/funk-disk.toml")),
    ("killing-rotation", include_str!("../scenarios/killing-rotation.toml")),
    ("constant-wind", include_str!("../scenarios/constant-wind.toml")),
    ("sphere-killing", include_str!("../scenarios/sphere-killing.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub metric: MetricSpec,
    pub wind: WindSpec,
    pub region: RegionSpec,
    #[serde(default)]
    pub navigation: NavigationMode,
    #[serde(default)]
    pub function: Option<FunctionSpec>,
    #[serde(default)]
    pub samples: SampleCounts,
    /// Overrides keyed by `suite.check`, e.g. `"flag-shift.residual"`.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Suites to run; all of them when absent.
    #[serde(default)]
    pub suites: Option<Vec<Suite>>,
    #[serde(default)]
    pub expected: Expected,
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricSpec {
    Euclidean {
        dim: usize,
    },
    /// Constant Riemannian metric `yᵀAy`.
    Quadratic {
        matrix: Vec<Vec<f64>>,
    },
    /// `factor(x) · yᵀAy`, with `A` the identity unless given.
    Conformal {
        dim: usize,
        #[serde(default)]
        matrix: Option<Vec<Vec<f64>>>,
        factor: FactorSpec,
    },
    /// `|y|_A + ⟨b, y⟩` with constant `A` and `b`.
    Randers {
        matrix: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FactorSpec {
    Stereographic { curvature: f64 },
    Exponential { k: Vec<f64> },
    Power { exponent: f64 },
}

/// The wind `V`; `dilation` optionally declares the expected `c`, which is
/// then checked against the measured one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindSpec {
    Zero {
        #[serde(default)]
        dilation: Option<f64>,
    },
    /// `V(x) = λx`.
    Radial {
        lambda: f64,
        #[serde(default)]
        dilation: Option<f64>,
    },
    /// Rotation in the `(x⁰, x¹)` plane.
    Rotation {
        omega: f64,
        #[serde(default)]
        dilation: Option<f64>,
    },
    Translation {
        vector: Vec<f64>,
        #[serde(default)]
        dilation: Option<f64>,
    },
    /// `V(x) = Mx + b`.
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        #[serde(default)]
        dilation: Option<f64>,
    },
}

impl WindSpec {
    pub fn dilation(&self) -> Option<f64> {
        match self {
            WindSpec::Zero { dilation }
            | WindSpec::Radial { dilation, .. }
            | WindSpec::Rotation { dilation, .. }
            | WindSpec::Translation { dilation, .. }
            | WindSpec::Affine { dilation, .. } => *dilation,
        }
    }

    pub fn label(&self) -> String {
        match self {
            WindSpec::Zero { .. } => "zero".into(),
            WindSpec::Radial { lambda, .. } => format!("radial(λ={lambda})"),
            WindSpec::Rotation { omega, .. } => format!("rotation(ω={omega})"),
            WindSpec::Translation { vector, .. } => format!("translation({vector:?})"),
            WindSpec::Affine { .. } => "affine".into(),
        }
    }
}

impl MetricSpec {
    pub fn label(&self) -> String {
        match self {
            MetricSpec::Euclidean { dim } => format!("euclidean(n={dim})"),
            MetricSpec::Quadratic { .. } => "quadratic".into(),
            MetricSpec::Conformal { factor, .. } => match factor {
                FactorSpec::Stereographic { curvature } => format!("stereographic(κ={curvature})"),
                FactorSpec::Exponential { .. } => "conformal-exponential".into(),
                FactorSpec::Power { exponent } => format!("conformal-power(p={exponent})"),
            },
            MetricSpec::Randers { .. } => "randers".into(),
        }
    }
}

/// How the navigated metric is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NavigationMode {
    /// Closed form for Riemannian bases in dimension ≥ 3, where the implicit
    /// metric's volume quadrature makes the density-based suites several
    /// times slower; implicit otherwise.
    #[default]
    Auto,
    /// Solve `F(x, y/F̃ − V) = 1` for every evaluation.
    Implicit,
    /// The Randers expression of a navigated Riemannian metric.
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    pub radius: f64,
    /// Admissibility margin: points need `F(x, −V(x)) ≤ 1 − margin`.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    0.05
}

/// The normalized function whose level sets are transported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `|x − center| − r0`, reparametrized to unit gradient length when
    /// `normalize` is set.
    Radial {
        #[serde(default)]
        center: Option<Vec<f64>>,
        r0: f64,
        #[serde(default)]
        normalize: bool,
        /// Radii between which test points are drawn.
        annulus: [f64; 2],
        levels: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleCounts {
    pub tensor_points: usize,
    pub volume_points: usize,
    pub scaling_points: usize,
    pub pairing_geodesics: usize,
    pub geodesics: usize,
    pub jacobi_fields: usize,
    pub key_geodesics: usize,
    pub flags: usize,
    pub s_points: usize,
    pub laplacian_points: usize,
    pub per_level: usize,
    pub pullback_points: usize,
    pub consistency_flags: usize,
    pub consistency_geodesics: usize,
    pub plane_samples: usize,
    pub dilation_samples: usize,
    /// Transported geodesics run over `[0, geodesic_horizon]`.
    pub geodesic_horizon: f64,
    pub jacobi_horizon: f64,
    /// The key-identity grid covers `[0, key_horizon]`.
    pub key_horizon: f64,
    /// Starting points of transported curves lie within this distance of
    /// the region center.
    pub start_radius: f64,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            tensor_points: 50,
            volume_points: 50,
            scaling_points: 10,
            pairing_geodesics: 10,
            geodesics: 5,
            jacobi_fields: 4,
            key_geodesics: 5,
            flags: 100,
            s_points: 20,
            laplacian_points: 20,
            per_level: 4,
            pullback_points: 5,
            consistency_flags: 5,
            consistency_geodesics: 2,
            plane_samples: 8,
            dilation_samples: 16,
            geodesic_horizon: 0.4,
            jacobi_horizon: 0.3,
            key_horizon: 0.3,
            start_radius: 0.2,
        }
    }
}

/// Closed-form values the run is compared against when present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub c: Option<f64>,
    pub k_tilde: Option<f64>,
    pub s_tilde: Option<f64>,
    pub s_base: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Tensors,
    Volumes,
    Pairing,
    Geodesic,
    Jacobi,
    KeyIdentity,
    FlagShift,
    SShift,
    Laplacian,
    Isoparametric,
    Consistency,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Tensors,
        Suite::Volumes,
        Suite::Pairing,
        Suite::Geodesic,
        Suite::Jacobi,
        Suite::KeyIdentity,
        Suite::FlagShift,
        Suite::SShift,
        Suite::Laplacian,
        Suite::Isoparametric,
        Suite::Consistency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Tensors => "tensors",
            Suite::Volumes => "volumes",
            Suite::Pairing => "pairing",
            Suite::Geodesic => "geodesic",
            Suite::Jacobi => "jacobi",
            Suite::KeyIdentity => "key-identity",
            Suite::FlagShift => "flag-shift",
            Suite::SShift => "s-shift",
            Suite::Laplacian => "laplacian",
            Suite::Isoparametric => "isoparametric",
            Suite::Consistency => "consistency",
        }
    }

    /// The statement a suite checks, in words.
    pub fn theorem(self) -> &'static str {
        match self {
            Suite::Tensors => "fundamental tensors on the orthogonal complement scale by 1/(1 + <V, y>_y)",
            Suite::Volumes => "navigation preserves the Busemann-Hausdorff density; homothetic flows scale it by e^{-2cnt}",
            Suite::Pairing => "<V, γ'>_γ' is affine along unit-speed geodesics with slope -2c",
            Suite::Geodesic => "Ψ_t(γ(s(t))) is a unit-speed geodesic of the navigated metric",
            Suite::Jacobi => "pushed-forward orthogonal Jacobi fields are Jacobi fields of the navigated metric",
            Suite::KeyIdentity => "|Ψ_* v|² along the transported geodesic equals e^{-2ct}/(c0 + 1) |v|²",
            Suite::FlagShift => "flag curvature shifts by -c²",
            Suite::SShift => "S-curvature shifts by (n + 1)c",
            Suite::Laplacian => "Δ̃f̃(Ψ(x)) = (2cf + 1)Δf(x) - 2cn",
            Suite::Isoparametric => "transported normalized isoparametric functions stay isoparametric",
            Suite::Consistency => "independent numerical routes agree on both metrics",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| ScenarioConfig::from_toml(text).expect("built-in scenarios are valid"))
    }

    /// A built-in name or a path to a TOML file.
    pub fn load(spec: &str) -> Result<Self, CliError> {
        if let Some(cfg) = Self::builtin(spec) {
            return Ok(cfg);
        }
        let path = Path::new(spec);
        if !path.exists() {
            let known: Vec<_> = builtin_names().collect();
            return Err(CliError::Config(format!(
                "'{spec}' is neither a built-in scenario ({}) nor an existing file",
                known.join(", ")
            )));
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn dim(&self) -> usize {
        match &self.metric {
            MetricSpec::Euclidean { dim } | MetricSpec::Conformal { dim, .. } => *dim,
            MetricSpec::Quadratic { matrix } | MetricSpec::Randers { matrix, .. } => matrix.len(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.region.center.clone().unwrap_or_else(|| vec![0.0; self.dim()])
    }

    /// Replaces the wind by `V ≡ 0`.
    pub fn with_zero_wind(mut self) -> Self {
        self.wind = WindSpec::Zero { dilation: None };
        self.expected = Expected::default();
        self
    }

    pub fn suites(&self) -> Vec<Suite> {
        let mut s = self.suites.clone().unwrap_or_else(|| Suite::ALL.to_vec());
        s.sort();
        s.dedup();
        s
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let n = self.dim();
        if n < 2 {
            return bad(format!("metric: dimension must be at least 2, got {n}"));
        }
        let square = |field: &str, m: &Vec<Vec<f64>>| -> Result<(), CliError> {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(CliError::Config(format!("{field}: expected a {n}x{n} matrix")));
            }
            Ok(())
        };
        let vector = |field: &str, v: &[f64]| -> Result<(), CliError> {
            if v.len() != n {
                return Err(CliError::Config(format!("{field}: expected {n} components, got {}", v.len())));
            }
            Ok(())
        };
        match &self.metric {
            MetricSpec::Euclidean { .. } => {}
            MetricSpec::Quadratic { matrix } => square("metric.matrix", matrix)?,
            MetricSpec::Conformal { matrix, factor, .. } => {
                if let Some(m) = matrix {
                    square("metric.matrix", m)?;
                }
                if let FactorSpec::Exponential { k } = factor {
                    vector("metric.factor.k", k)?;
                }
            }
            MetricSpec::Randers { matrix, b } => {
                square("metric.matrix", matrix)?;
                vector("metric.b", b)?;
            }
        }
        match &self.wind {
            WindSpec::Translation { vector: v, .. } => vector("wind.vector", v)?,
            WindSpec::Affine { matrix, offset, .. } => {
                square("wind.matrix", matrix)?;
                vector("wind.offset", offset)?;
            }
            _ => {}
        }
        if let Some(c) = &self.region.center {
            vector("region.center", c)?;
        }
        if !(self.region.radius > 0.0) {
            return bad("region.radius must be positive".into());
        }
        if !(0.0..1.0).contains(&self.region.margin) {
            return bad("region.margin must lie in [0, 1)".into());
        }
        if let Some(FunctionSpec::Radial { center, annulus, levels, r0, .. }) = &self.function {
            if let Some(c) = center {
                vector("function.center", c)?;
            }
            if !(0.0 < annulus[0] && annulus[0] < annulus[1]) {
                return bad("function.annulus must satisfy 0 < inner < outer".into());
            }
            if levels.is_empty() {
                return bad("function.levels must not be empty".into());
            }
            if !(*r0 > 0.0) {
                return bad("function.r0 must be positive".into());
            }
        }
        let s = &self.samples;
        for (key, v) in [
            ("geodesic_horizon", s.geodesic_horizon),
            ("jacobi_horizon", s.jacobi_horizon),
            ("key_horizon", s.key_horizon),
            ("start_radius", s.start_radius),
        ] {
            if !(v > 0.0) {
                return bad(format!("samples.{key} must be positive"));
            }
        }
        if s.dilation_samples == 0 {
            return bad("samples.dilation_samples must be positive".into());
        }
        for (key, v) in &self.tolerances {
            let known = crate::suites::CHECKS.iter().any(|(suite, check, _)| format!("{suite}.{check}") == *key);
            if !known {
                return bad(format!("tolerances: unknown check '{key}'"));
            }
            if !(*v > 0.0) {
                return bad(format!("tolerances.{key} must be positive"));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, suite: Suite, check: &str) -> f64 {
        let key = format!("{}.{check}", suite.name());
        self.tolerances.get(&key).copied().unwrap_or_else(|| crate::suites::default_tolerance(suite, check))
    }
}

fn matrix(rows: &[Vec<f64>]) -> Result<Mat, CliError> {
    Mat::from_rows(rows).map_err(|e| CliError::Config(e.to_string()))
}

/// Core objects built from a configuration.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub nav: HomotheticNavigation<f64>,
    pub function: Option<Arc<dyn ScalarField<f64>>>,
}

impl Scenario {
    pub fn build(config: ScenarioConfig) -> Result<Self, CliError> {
        let n = config.dim();
        let geometry = |e: zermelo_core::GeometryError| CliError::Scenario(format!("{}: {e}", config.name));
        let domain = ChartDomain::ball(config.center(), config.region.radius).map_err(geometry)?;
        let base = match &config.metric {
            MetricSpec::Euclidean { .. } => Metric::euclidean(n, domain),
            MetricSpec::Quadratic { matrix: m } => {
                Metric::quadratic("quadratic", domain, MatrixField::Constant(matrix(m)?)).map_err(geometry)?
            }
            MetricSpec::Conformal { matrix: m, factor, .. } => {
                let base = match m {
                    Some(m) => matrix(m)?,
                    None => Mat::identity(n),
                };
                let factor = match factor {
                    FactorSpec::Stereographic { curvature } => ConformalFactor::Stereographic { curvature: *curvature },
                    FactorSpec::Exponential { k } => ConformalFactor::Exponential { k: k.clone() },
                    FactorSpec::Power { exponent } => ConformalFactor::Power { exponent: *exponent },
                };
                Metric::quadratic("conformal", domain, MatrixField::Conformal { base, factor }).map_err(geometry)?
            }
            MetricSpec::Randers { matrix: m, b } => Metric::randers(
                "randers",
                domain,
                MatrixField::Constant(matrix(m)?),
                VectorField::translation(b.clone()),
            )
            .map_err(geometry)?,
        };
        let mut wind = match &config.wind {
            WindSpec::Zero { .. } => VectorField::zero(n),
            WindSpec::Radial { lambda, .. } => VectorField::radial(n, *lambda),
            WindSpec::Rotation { omega, .. } => VectorField::rotation(n, *omega),
            WindSpec::Translation { vector, .. } => VectorField::translation(vector.clone()),
            WindSpec::Affine { matrix: m, offset, .. } => {
                VectorField::affine(matrix(m)?, offset.clone()).map_err(geometry)?
            }
        };
        if let Some(c) = config.wind.dilation() {
            wind = wind.with_dilation(c);
        }
        let datum = Datum::new(base, wind, config.region.margin).map_err(geometry)?;
        let riemannian = datum.base().is_riemannian();
        let mut nav = HomotheticNavigation::new(datum, config.samples.dilation_samples, config.seed).map_err(geometry)?;
        let closed = match config.navigation {
            NavigationMode::Auto => riemannian && n >= 3,
            NavigationMode::Implicit => false,
            NavigationMode::ClosedForm => true,
        };
        if closed {
            nav = nav.with_closed_form().map_err(geometry)?;
        }
        let function = match &config.function {
            None => None,
            Some(FunctionSpec::Radial { center, r0, normalize, annulus, .. }) => {
                let center = center.clone().unwrap_or_else(|| config.center());
                let radial: Arc<dyn ScalarField<f64>> = Arc::new(ScalarFieldSpec::radial(center.clone(), *r0));
                if *normalize {
                    let mut x0 = center.clone();
                    x0[0] += r0;
                    let window = (annulus[0] - r0 - 0.05, annulus[1] - r0 + 0.05);
                    let f = normalize_transnormal(nav.base(), radial, &x0, window, config.seed).map_err(geometry)?;
                    Some(Arc::new(f) as Arc<dyn ScalarField<f64>>)
                } else {
                    Some(radial)
                }
            }
        };
        Ok(Scenario { config, nav, function })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "m"
[metric]
kind = "euclidean"
dim = 2
[wind]
kind = "zero"
[region]
radius = 0.5
"#;

    #[test]
    fn builtins_parse_and_build() {
        for name in builtin_names() {
            let cfg = ScenarioConfig::builtin(name).unwrap();
            assert_eq!(cfg.name, name);
            Scenario::build(cfg).unwrap();
        }
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.center(), vec![0.0, 0.0]);
        assert_eq!(cfg.region.margin, 0.05);
        assert_eq!(cfg.samples.flags, 100);
        assert_eq!(cfg.suites(), Suite::ALL.to_vec());
        assert_eq!(cfg.tolerance(Suite::Tensors, "relation"), 1e-5);
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = ScenarioConfig::from_toml(&format!("{MINIMAL}\nbogus = 1\n")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let text = MINIMAL.replace("kind = \"zero\"", "kind = \"translation\"\nvector = [1.0, 0.0, 0.0]");
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("wind.vector"), "{err}");
    }

    #[test]
    fn tolerance_override_and_unknown_check() {
        let ok = ScenarioConfig::from_toml(&format!("{MINIMAL}\n[tolerances]\n\"pairing.slope\" = 1e-3\n")).unwrap();
        assert_eq!(ok.tolerance(Suite::Pairing, "slope"), 1e-3);
        assert!(ScenarioConfig::from_toml(&format!("{MINIMAL}\n[tolerances]\n\"pairing.nope\" = 1e-3\n")).is_err());
        assert!(ScenarioConfig::from_toml(&format!("{MINIMAL}\n[tolerances]\n\"pairing.slope\" = -1.0\n")).is_err());
    }

    #[test]
    fn zero_wind_clears_expectations() {
        let cfg = ScenarioConfig::builtin("funk-disk").unwrap().with_zero_wind();
        assert!(matches!(cfg.wind, WindSpec::Zero { .. }));
        assert_eq!(cfg.expected.c, None);
    }

    #[test]
    fn declared_dilation_is_checked() {
        let mut cfg = ScenarioConfig::builtin("funk-disk").unwrap();
        cfg.wind = WindSpec::Radial { lambda: 1.0, dilation: Some(-0.4) };
        assert!(matches!(Scenario::build(cfg), Err(CliError::Scenario(_))));
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()), Some(s));
        }
        assert_eq!(Suite::parse("nope"), None);
    }
}
