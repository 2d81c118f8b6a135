//! Run configuration: strict JSON with a `family`-tagged kernel section.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Dims;
use crate::kernels::{
    self, rows, CrossVariogramSpec, ExpansionKernel, ExpansionTerm, FClassKernel, MatrixKernel,
    MaternSpectralKernel, RadialProfile, SinhSeriesKernel, VarianceScaling,
};
use crate::nonstat::{XiKernel, XiTerm};
use crate::spectral::uniform_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Eval,
    Gram,
    Extract,
    Audit,
    Simulate,
    Krige,
    ReportSinhDiscrepancy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub kernel: KernelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Transform>,
    pub io: IoConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub numeric: NumericConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observations: Option<PathBuf>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericConfig {
    pub tol: f64,
    pub n_sites: usize,
    pub n_trials: usize,
    pub box_halfwidth: f64,
    pub quad_order: usize,
    pub k_max: [usize; 2],
    pub h_grid: Vec<f64>,
    pub schoenberg_points: usize,
    pub n_samples: usize,
    pub jitter: Option<f64>,
    pub noise: f64,
    pub xi_u: Option<Vec<f64>>,
    pub xi_v: Option<Vec<f64>>,
    pub xi_degrees: Option<[usize; 2]>,
    pub xi_nodes: Option<usize>,
    pub discrepancy_h_max: f64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            tol: crate::validation::DEFAULT_TOL,
            n_sites: 40,
            n_trials: 20,
            box_halfwidth: crate::validation::DEFAULT_BOX,
            quad_order: crate::specfun::DEFAULT_QUAD_ORDER,
            k_max: [4, 4],
            h_grid: uniform_grid(9, 0.25),
            schoenberg_points: 12,
            n_samples: 100,
            jitter: None,
            noise: 0.0,
            xi_u: None,
            xi_v: None,
            xi_degrees: None,
            xi_nodes: None,
            discrepancy_h_max: 2.0,
        }
    }
}

/// Optional post-processing of an isotropic kernel: normalization then variance scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transform {
    #[serde(default)]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub k1: usize,
    pub k2: usize,
    #[serde(with = "rows")]
    pub matrix: DMatrix<f64>,
    pub profile: RadialProfile,
}

impl From<&TermConfig> for ExpansionTerm {
    fn from(t: &TermConfig) -> Self {
        ExpansionTerm {
            k1: t.k1,
            k2: t.k2,
            matrix: t.matrix.clone(),
            profile: t.profile.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionConfig {
    pub p: usize,
    pub d1: u32,
    pub d2: u32,
    pub d: u32,
    #[serde(default)]
    pub normalized: bool,
    pub terms: Vec<TermConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinhConfig {
    pub p: usize,
    pub d1: u32,
    pub d2: u32,
    pub d: u32,
    pub gamma: CrossVariogramSpec,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
}

fn default_truncation() -> usize {
    kernels::DEFAULT_TRUNCATION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FClassConfig {
    pub p: usize,
    pub d1: u32,
    pub d2: u32,
    pub d: u32,
    #[serde(with = "rows")]
    pub alpha: DMatrix<f64>,
    #[serde(with = "rows")]
    pub nu: DMatrix<f64>,
    pub tau: f64,
    /// Terms of the inner kernel on `S^{d2} x R^d` (all with `k1 = 0`).
    pub inner: Vec<TermConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaternConfig {
    pub p: usize,
    pub d1: u32,
    pub d2: u32,
    pub d: u32,
    pub sigma: Vec<f64>,
    pub alpha: f64,
    #[serde(with = "rows")]
    pub beta: DMatrix<f64>,
    pub nu: Vec<f64>,
    #[serde(default)]
    pub nu_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiConfig {
    pub p: usize,
    pub d1: u32,
    pub d2: u32,
    pub d: u32,
    pub terms: Vec<XiTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelConfig {
    Expansion(ExpansionConfig),
    SinhSeries(SinhConfig),
    FClass(FClassConfig),
    MaternSpectral(MaternConfig),
    Xi(XiConfig),
}

/// A constructed kernel: isotropic in `R^d`, or the torus family.
#[derive(Debug, Clone)]
pub enum BuiltKernel {
    Isotropic(Arc<dyn MatrixKernel>),
    Xi(XiKernel),
}

impl BuiltKernel {
    pub fn p(&self) -> usize {
        match self {
            BuiltKernel::Isotropic(k) => k.p(),
            BuiltKernel::Xi(k) => k.p(),
        }
    }

    pub fn dims(&self) -> Dims {
        match self {
            BuiltKernel::Isotropic(k) => k.dims(),
            BuiltKernel::Xi(k) => Dims { d1: 1, d2: 1, d: k.d() },
        }
    }
}

fn check_p(declared: usize, actual: usize) -> Result<()> {
    if declared != actual {
        return Err(Error::dims(format!("kernel declares p = {declared} but its parameters have {actual} components")));
    }
    Ok(())
}

impl ExpansionConfig {
    pub fn build(&self) -> Result<ExpansionKernel> {
        let k = ExpansionKernel::new(
            Dims::new(self.d1, self.d2, self.d)?,
            self.terms.iter().map(Into::into).collect(),
            self.normalized,
        )?;
        check_p(self.p, k.p())?;
        Ok(k)
    }
}

impl SinhConfig {
    pub fn build(&self) -> Result<SinhSeriesKernel> {
        check_p(self.p, self.gamma.p())?;
        SinhSeriesKernel::new(Dims::new(self.d1, self.d2, self.d)?, self.gamma.clone(), self.truncation)
    }
}

impl FClassConfig {
    pub fn build(&self) -> Result<FClassKernel> {
        let dims = Dims::new(self.d1, self.d2, self.d)?;
        let inner = ExpansionKernel::new(dims, self.inner.iter().map(Into::into).collect(), false)?;
        check_p(self.p, inner.p())?;
        FClassKernel::new(dims, self.alpha.clone(), self.nu.clone(), self.tau, inner)
    }
}

impl MaternConfig {
    pub fn build_unchecked(&self) -> Result<MaternSpectralKernel> {
        check_p(self.p, self.nu.len())?;
        MaternSpectralKernel::new_unchecked(
            Dims::new(self.d1, self.d2, self.d)?,
            VarianceScaling::new(self.sigma.clone())?,
            self.alpha,
            self.beta.clone(),
            self.nu.clone(),
            self.nu_slope,
        )
    }

    pub fn build(&self) -> Result<MaternSpectralKernel> {
        check_p(self.p, self.nu.len())?;
        MaternSpectralKernel::new(
            Dims::new(self.d1, self.d2, self.d)?,
            VarianceScaling::new(self.sigma.clone())?,
            self.alpha,
            self.beta.clone(),
            self.nu.clone(),
            self.nu_slope,
        )
    }
}

impl XiConfig {
    fn check(&self) -> Result<()> {
        if self.d1 != 1 || self.d2 != 1 {
            return Err(Error::invalid(format!(
                "the xi family lives on the torus: need d1 = d2 = 1, got ({}, {})",
                self.d1, self.d2
            )));
        }
        Ok(())
    }

    pub fn build_unchecked(&self) -> Result<XiKernel> {
        self.check()?;
        let k = XiKernel::new_unchecked(self.d, self.terms.clone())?;
        check_p(self.p, k.p())?;
        Ok(k)
    }

    pub fn build(&self) -> Result<XiKernel> {
        self.check()?;
        let k = XiKernel::new(self.d, self.terms.clone())?;
        check_p(self.p, k.p())?;
        Ok(k)
    }
}

impl KernelConfig {
    pub fn family(&self) -> &'static str {
        match self {
            KernelConfig::Expansion(_) => "expansion",
            KernelConfig::SinhSeries(_) => "sinh_series",
            KernelConfig::FClass(_) => "f_class",
            KernelConfig::MaternSpectral(_) => "matern_spectral",
            KernelConfig::Xi(_) => "xi",
        }
    }

    pub fn build(&self, transform: Option<&Transform>) -> Result<BuiltKernel> {
        let iso: Arc<dyn MatrixKernel> = match self {
            KernelConfig::Expansion(c) => Arc::new(c.build()?),
            KernelConfig::SinhSeries(c) => Arc::new(c.build()?),
            KernelConfig::FClass(c) => Arc::new(c.build()?),
            KernelConfig::MaternSpectral(c) => Arc::new(c.build()?),
            KernelConfig::Xi(c) => {
                if transform.is_some() {
                    return Err(Error::Config("transforms apply to isotropic families only".into()));
                }
                return Ok(BuiltKernel::Xi(c.build()?));
            }
        };
        Ok(BuiltKernel::Isotropic(apply_transform(iso, transform)?))
    }
}

pub fn apply_transform(kernel: Arc<dyn MatrixKernel>, transform: Option<&Transform>) -> Result<Arc<dyn MatrixKernel>> {
    let Some(t) = transform else { return Ok(kernel) };
    let mut k = kernel;
    if t.normalize {
        k = Arc::new(kernels::normalize(k)?);
    }
    if let Some(v) = &t.variance {
        k = Arc::new(kernels::apply_variance(k, &VarianceScaling::new(v.clone())?)?);
    }
    Ok(k)
}

/// What a run writes next to its output: enough to repeat it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config: RunConfig,
    pub version: String,
    pub seed: u64,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Parses either a run config or a manifest written by an earlier run.
pub fn parse_config_text(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let is_manifest = value
        .as_object()
        .is_some_and(|o| o.contains_key("config") && o.contains_key("version") && !o.contains_key("command"));
    if is_manifest {
        let m: Manifest = serde_json::from_str(text)?;
        if m.version != env!("CARGO_PKG_VERSION") {
            log::warn!("manifest written by version {}, running {}", m.version, env!("CARGO_PKG_VERSION"));
        }
        let mut c = m.config;
        c.seed = m.seed;
        Ok(c)
    } else {
        Ok(serde_json::from_str(text)?)
    }
}

/// Loads a config, resolving relative paths against the config file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = crate::io::read_to_string(path)?;
    let mut c = parse_config_text(&text).map_err(|e| match e {
        Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
        other => other,
    })?;
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let base = std::path::absolute(base).map_err(|source| Error::Io {
        path: base.to_path_buf(),
        source,
    })?;
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    fix(&mut c.io.output);
    for p in [&mut c.io.input, &mut c.io.sites, &mut c.io.observations].into_iter().flatten() {
        fix(p);
    }
    Ok(c)
}

impl RunConfig {
    /// Checks that every declared input exists and the output directory is writable, before any computation.
    pub fn validate_paths(&self) -> Result<()> {
        let need = |p: &Option<PathBuf>, key: &str| -> Result<()> {
            match p {
                Some(p) if p.is_file() => Ok(()),
                Some(p) => Err(Error::Config(format!("io.{key}: input file {} does not exist", p.display()))),
                None => Err(Error::Config(format!("io.{key} is required for `{}`", self.command_name()))),
            }
        };
        match (self.command, &self.kernel) {
            (Command::Eval, KernelConfig::Xi(_)) | (Command::Gram, _) | (Command::Simulate, _) => {
                need(&self.io.sites, "sites")?
            }
            (Command::Eval, _) => need(&self.io.input, "input")?,
            (Command::Krige, _) => {
                need(&self.io.observations, "observations")?;
                need(&self.io.sites, "sites")?;
            }
            _ => {}
        }
        let out = &self.io.output;
        if out.is_dir() {
            return Err(Error::Config(format!("io.output {} is a directory", out.display())));
        }
        match out.parent() {
            Some(d) if d.as_os_str().is_empty() || d.is_dir() => Ok(()),
            Some(d) => Err(Error::Config(format!("output directory {} does not exist", d.display()))),
            None => Err(Error::Config("io.output must name a file".into())),
        }
    }

    pub fn command_name(&self) -> &'static str {
        match self.command {
            Command::Eval => "eval",
            Command::Gram => "gram",
            Command::Extract => "extract",
            Command::Audit => "audit",
            Command::Simulate => "simulate",
            Command::Krige => "krige",
            Command::ReportSinhDiscrepancy => "report-sinh-discrepancy",
        }
    }
}
