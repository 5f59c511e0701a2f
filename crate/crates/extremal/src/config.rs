//! Scenario files.
//!
//! ```toml
//! seed = 7
//! n = 100000
//! k = 1
//! replicates = 1000
//! out_dir = "out"
//!
//! [domain]
//! lower = [0.0]
//! upper = [1.0]
//! cells = 200
//!
//! [lambda]
//! kind = "constant"
//! value = 1.0
//!
//! [g]
//! kind = "poly"
//! coeffs = [0.0, 0.0, 1.0]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use extremal_core::sampler::CdfTable;
use extremal_core::{BoxDomain, NoiseSpec, Polynomial, ScalarField};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    /// Points per realization of `f_n` or construction A.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub domain: DomainSpec,
    pub lambda: Option<FieldSpec>,
    pub rho: Option<FieldSpec>,
    pub g: Option<FieldSpec>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub sample: SampleOptions,
    #[serde(default)]
    pub density: DensityOptions,
    #[serde(default)]
    pub verify: VerifyOptions,
    #[serde(default)]
    pub sec4: Sec4Options,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_n() -> usize {
    100_000
}

fn default_k() -> usize {
    1
}

fn default_replicates() -> usize {
    1000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells: usize,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            lower: vec![0.0],
            upper: vec![1.0],
            cells: 200,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    /// 1-D: `coeffs[i]` multiplies `x^i`. 2-D: `coeffs[i][j]` multiplies
    /// `x^i y^j`.
    Poly { coeffs: PolyCoeffs },
    /// Row-major cell values, inline or from a CSV file relative to the
    /// config.
    Grid {
        values: Option<Vec<f64>>,
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PolyCoeffs {
    Univariate(Vec<f64>),
    Bivariate(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub family: NoiseFamily,
    /// Abscissae and CDF values for `family = "table"`.
    pub t: Option<Vec<f64>>,
    pub f: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    #[default]
    Exponential,
    Uniform,
    Ratio,
    Table,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Process {
    /// Exact first-`k` record sampler of `W_λ + g`.
    #[default]
    Records,
    ConstructionA,
    /// The discrete process `f_n`.
    Fn,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleOptions {
    #[serde(default)]
    pub process: Process,
    /// Also write every point of each realization (not for `records`).
    #[serde(default)]
    pub full: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMode {
    #[default]
    Marginal,
    Joint,
    MinValue,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityOptions {
    #[serde(default)]
    pub kind: DensityMode,
    /// Curve resolution for `min-value`.
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    400
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions {
            kind: DensityMode::Marginal,
            points: default_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Definition1,
    Constructions,
    Theorem1,
    Theorem2,
    Joint2,
    Sec4,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Definition1 => "definition1",
            Suite::Constructions => "constructions",
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Joint2 => "joint2",
            Suite::Sec4 => "sec4",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    pub suite: Option<Suite>,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Multiplies the rate the checks assume; anything but 1 should fail.
    #[serde(default = "one")]
    pub rate_scale: f64,
}

fn default_bins() -> usize {
    20
}

fn one() -> f64 {
    1.0
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            suite: None,
            bins: default_bins(),
            rate_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sec4Options {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_sec4_cells")]
    pub cells: usize,
    #[serde(default = "default_sec4_samples")]
    pub samples: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_deltas() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0]
}

fn default_sec4_cells() -> usize {
    5000
}

fn default_sec4_samples() -> usize {
    100_000
}

impl Default for Sec4Options {
    fn default() -> Self {
        Sec4Options {
            deltas: default_deltas(),
            cells: default_sec4_cells(),
            samples: default_sec4_samples(),
            bins: default_bins(),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            bail!("n must be at least 1");
        }
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        if self.replicates == 0 {
            bail!("replicates must be at least 1");
        }
        self.build_domain()?;
        if self.verify.bins == 0 || self.sec4.bins == 0 {
            bail!("bins must be positive");
        }
        if !(self.verify.rate_scale > 0.0 && self.verify.rate_scale.is_finite()) {
            bail!("verify.rate_scale must be positive");
        }
        if let Some(d) = self.sec4.deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            bail!("sec4.deltas must be positive, got {d}");
        }
        self.noise_spec()?;
        Ok(())
    }

    pub fn build_domain(&self) -> Result<BoxDomain> {
        Ok(BoxDomain::new(&self.domain.lower, &self.domain.upper, self.domain.cells)?)
    }

    fn field(&self, spec: Option<&FieldSpec>, name: &str) -> Result<ScalarField> {
        let Some(spec) = spec else {
            bail!("missing [{name}] field");
        };
        Ok(match spec {
            FieldSpec::Constant { value } => ScalarField::constant(*value),
            FieldSpec::Poly { coeffs } => ScalarField::Poly(match coeffs {
                PolyCoeffs::Univariate(c) => Polynomial::univariate(c),
                PolyCoeffs::Bivariate(rows) => Polynomial::bivariate(rows),
            }),
            FieldSpec::Grid { values, path } => match (values, path) {
                (Some(v), None) => ScalarField::grid(v.clone()),
                (None, Some(p)) => ScalarField::grid(read_grid_csv(&self.base_dir.join(p))?),
                _ => bail!("[{name}] grid needs exactly one of `values` or `path`"),
            },
        })
    }

    pub fn lambda(&self) -> Result<ScalarField> {
        self.field(self.lambda.as_ref(), "lambda")
    }

    pub fn g(&self) -> Result<ScalarField> {
        self.field(self.g.as_ref(), "g")
    }

    /// `ρ` defaults to a constant.
    pub fn rho(&self) -> Result<ScalarField> {
        match &self.rho {
            None => Ok(ScalarField::constant(1.0)),
            Some(_) => self.field(self.rho.as_ref(), "rho"),
        }
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        let spec = match self.noise.family {
            NoiseFamily::Exponential => NoiseSpec::Exponential,
            NoiseFamily::Uniform => NoiseSpec::Uniform,
            NoiseFamily::Ratio => NoiseSpec::Ratio,
            NoiseFamily::Table => match (&self.noise.t, &self.noise.f) {
                (Some(t), Some(f)) => NoiseSpec::Table(CdfTable::new(t.clone(), f.clone())?),
                _ => bail!("noise family `table` needs `t` and `f`"),
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Cell values from a CSV file: numbers separated by commas or newlines,
/// `#` lines ignored.
pub fn read_grid_csv(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading grid {}", path.display()))?;
    let mut out = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        for tok in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            out.push(tok.parse().with_context(|| format!("bad number `{tok}` in {}", path.display()))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_example() {
        let cfg = ScenarioConfig::parse(
            r#"
            seed = 3
            k = 2
            [domain]
            lower = [0.0, 0.0]
            upper = [1.0, 2.0]
            cells = 8
            [lambda]
            kind = "poly"
            coeffs = [[1.0, 0.5], [0.2, 0.0]]
            [g]
            kind = "grid"
            values = [0.0, 0.1, 0.2, 0.3]
            [noise]
            family = "uniform"
            [verify]
            suite = "definition1"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.build_domain().unwrap().cell_count(), 64);
        assert!(cfg.lambda().is_ok());
        assert_eq!(cfg.verify.suite, Some(Suite::Definition1));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ScenarioConfig::parse("sed = 3").is_err());
        assert!(ScenarioConfig::parse("[domain]\nlower=[0.0]\nupper=[1.0]\ncells=4\nextra=1").is_err());
        assert!(ScenarioConfig::parse("n = 0").is_err());
        assert!(ScenarioConfig::parse("[domain]\nlower=[1.0]\nupper=[0.0]\ncells=4").is_err());
        assert!(ScenarioConfig::parse("[sec4]\ndeltas = [1.0, -2.0]").is_err());
    }

    #[test]
    fn missing_lambda_is_reported() {
        let cfg = ScenarioConfig::parse("seed = 1").unwrap();
        assert!(cfg.lambda().unwrap_err().to_string().contains("lambda"));
    }
}
