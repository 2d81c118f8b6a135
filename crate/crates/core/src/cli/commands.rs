//! One function per command; each returns the bytes of its primary output.

use std::sync::Arc;

use serde::Serialize;

use super::config::{apply_transform, BuiltKernel, Command, KernelConfig, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::{Dims, Invariants3, Site};
use crate::io;
use crate::kernels::{gram, MatrixKernel, PairKernel};
use crate::linalg::upper_triangle;
use crate::nonstat::{default_nodes, recover_all, xi_pd_audit};
use crate::spectral::{extract, schoenberg_audit, CoefficientTable};
use crate::validation::{matern_condition_audit, pd_audit_in_box, psd_ratio, AuditReport};

/// Primary artifact of a run plus whether every audit in it passed.
#[derive(Debug)]
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub passed: bool,
    /// Lines for the human-readable summary.
    pub summary: Vec<String>,
}

impl Outcome {
    fn ok(bytes: Vec<u8>) -> Self {
        Outcome {
            bytes,
            passed: true,
            summary: Vec::new(),
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Audit => audit(cfg),
        Command::ReportSinhDiscrepancy => sinh_discrepancy(cfg),
        _ => {
            let kernel = cfg.kernel.build(cfg.transform.as_ref())?;
            match cfg.command {
                Command::Eval => eval(cfg, &kernel),
                Command::Gram => gram_cmd(cfg, &kernel),
                Command::Extract => extract_cmd(cfg, &kernel),
                Command::Simulate => simulate_cmd(cfg, &kernel),
                Command::Krige => krige_cmd(cfg, &kernel),
                Command::Audit | Command::ReportSinhDiscrepancy => unreachable!(),
            }
        }
    }
}

fn pair_kernel(k: &BuiltKernel) -> &dyn PairKernel {
    match k {
        BuiltKernel::Isotropic(k) => k,
        BuiltKernel::Xi(k) => k,
    }
}

fn load_sites(path: &Option<std::path::PathBuf>, kernel: &BuiltKernel) -> Result<Vec<Site>> {
    let path = path.as_ref().ok_or_else(|| Error::Config("io.sites is required".into()))?;
    let (dims, sites) = io::read_sites(path)?;
    check_dims(dims, kernel.dims())?;
    Ok(sites)
}

fn check_dims(found: Dims, want: Dims) -> Result<()> {
    if found != want {
        return Err(Error::dims(format!("sites live on {found:?} but the kernel on {want:?}")));
    }
    Ok(())
}

fn eval(cfg: &RunConfig, kernel: &BuiltKernel) -> Result<Outcome> {
    match kernel {
        BuiltKernel::Isotropic(k) => {
            let path = cfg.io.input.as_ref().ok_or_else(|| Error::Config("io.input is required".into()))?;
            let rows = io::read_invariants(path)?
                .into_iter()
                .map(|inv| Ok((inv, k.eval(&inv)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome::ok(io::eval_csv(k.p(), &rows)?))
        }
        BuiltKernel::Xi(k) => {
            let sites = load_sites(&cfg.io.sites, kernel)?;
            let mut rows = Vec::new();
            for a in 0..sites.len() {
                for b in a..sites.len() {
                    rows.push((a, b, k.eval_xi(&sites[a], &sites[b])?));
                }
            }
            Ok(Outcome::ok(io::pair_eval_csv(k.p(), &rows)?))
        }
    }
}

fn gram_cmd(cfg: &RunConfig, kernel: &BuiltKernel) -> Result<Outcome> {
    let sites = load_sites(&cfg.io.sites, kernel)?;
    Ok(Outcome::ok(io::matrix_csv(&gram(pair_kernel(kernel), &sites)?)?))
}

fn extract_cmd(cfg: &RunConfig, kernel: &BuiltKernel) -> Result<Outcome> {
    let n = &cfg.numeric;
    match kernel {
        BuiltKernel::Isotropic(k) => {
            let t = extract(k.as_ref(), (n.k_max[0], n.k_max[1]), &n.h_grid, n.quad_order)?;
            Ok(Outcome::ok(io::table_csv(&t)?))
        }
        BuiltKernel::Xi(k) => {
            let (u, v) = xi_points(cfg, k.d())?;
            let deg = n.xi_degrees.map(|[a, b]| (a, b)).unwrap_or(k.truncation());
            let q = n.xi_nodes.unwrap_or(default_nodes(deg.0.max(deg.1)));
            Ok(Outcome::ok(io::recovered_csv(&recover_all(k, deg, &u, &v, q)?)?))
        }
    }
}

fn xi_points(cfg: &RunConfig, d: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    let pick = |x: &Option<Vec<f64>>, key: &str| -> Result<Vec<f64>> {
        let v = x.clone().unwrap_or_else(|| vec![0.0; d as usize]);
        if v.len() != d as usize {
            return Err(Error::Config(format!("numeric.{key} needs {d} coordinates, got {}", v.len())));
        }
        Ok(v)
    };
    Ok((pick(&cfg.numeric.xi_u, "xi_u")?, pick(&cfg.numeric.xi_v, "xi_v")?))
}

fn simulate_cmd(cfg: &RunConfig, kernel: &BuiltKernel) -> Result<Outcome> {
    let sites = load_sites(&cfg.io.sites, kernel)?;
    let sim = crate::fields::simulate(pair_kernel(kernel), &sites, cfg.numeric.n_samples, cfg.seed, cfg.numeric.jitter)?;
    let mut out = Outcome::ok(io::samples_csv(kernel.dims(), &sites, &sim.samples, kernel.p())?);
    out.summary.push(format!(
        "{} samples at {} sites, jitter {:e} after {} escalations",
        sim.samples.len(),
        sites.len(),
        sim.jitter,
        sim.escalations
    ));
    Ok(out)
}

fn krige_cmd(cfg: &RunConfig, kernel: &BuiltKernel) -> Result<Outcome> {
    let obs_path = cfg.io.observations.as_ref().ok_or_else(|| Error::Config("io.observations is required".into()))?;
    let (dims, obs_sites, values) = io::read_observations(obs_path, kernel.p())?;
    check_dims(dims, kernel.dims())?;
    let query = load_sites(&cfg.io.sites, kernel)?;
    let k = crate::fields::krige(pair_kernel(kernel), &obs_sites, &values, cfg.numeric.noise, &query)?;
    Ok(Outcome::ok(io::kriging_csv(kernel.dims(), &query, &k)?))
}

#[derive(Debug, Serialize)]
pub struct StageResult {
    pub stage: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_eig_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub report: serde_json::Value,
}

impl StageResult {
    fn from_audit(r: &AuditReport) -> Result<Self> {
        Ok(StageResult {
            stage: r.stage.clone(),
            passed: r.passed,
            min_eig_ratio: Some(r.min_eig_ratio),
            detail: None,
            report: serde_json::to_value(r)?,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub family: String,
    pub passed: bool,
    pub stages: Vec<StageResult>,
}

/// Runs stages in order and stops at the first failure.
struct Stages(Vec<StageResult>);

impl Stages {
    fn push(&mut self, s: StageResult) -> bool {
        let ok = s.passed;
        self.0.push(s);
        ok
    }

    /// Records a construction-time audit failure as a failed stage; other errors propagate.
    fn build<T>(&mut self, r: Result<T>) -> Result<Option<T>> {
        match r {
            Ok(t) => Ok(Some(t)),
            Err(Error::AuditFailed { stage, detail }) => {
                self.0.push(StageResult {
                    stage,
                    passed: false,
                    min_eig_ratio: None,
                    detail: Some(detail),
                    report: serde_json::Value::Null,
                });
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

fn pd_stage(cfg: &RunConfig, k: &dyn PairKernel) -> Result<StageResult> {
    let n = &cfg.numeric;
    StageResult::from_audit(&pd_audit_in_box(k, n.n_sites, n.n_trials, cfg.seed, n.tol, n.box_halfwidth)?)
}

fn audit(cfg: &RunConfig) -> Result<Outcome> {
    let n = &cfg.numeric;
    let mut st = Stages(Vec::new());
    let iso = |k: Arc<dyn MatrixKernel>| apply_transform(k, cfg.transform.as_ref());
    match &cfg.kernel {
        KernelConfig::Expansion(c) => {
            let trials = c
                .terms
                .iter()
                .map(|t| Ok((None, format!("({}, {})", t.k1, t.k2), psd_ratio(&t.matrix)?)))
                .collect::<Result<Vec<_>>>()?;
            if st.push(StageResult::from_audit(&AuditReport::from_trials("coefficient_psd", trials, n.tol))?) {
                let k = c.build()?;
                let table = coefficient_table(&k, &n.h_grid)?;
                let kernel = iso(Arc::new(k))?;
                if st.push(pd_stage(cfg, &kernel)?) {
                    let r = schoenberg_audit(&table, c.d, n.schoenberg_points, cfg.seed)?;
                    st.push(StageResult {
                        stage: "schoenberg_audit".into(),
                        passed: r.audit.passed,
                        min_eig_ratio: Some(r.audit.min_eig_ratio),
                        detail: r.interpolated.then(|| "distances interpolated between grid points".into()),
                        report: serde_json::to_value(&r)?,
                    });
                }
            }
        }
        KernelConfig::SinhSeries(c) => {
            if let Some(k) = st.build(c.build())? {
                let gamma = k.variogram().clone();
                let r = crate::validation::cnd_audit(
                    move |inv: &Invariants3| Ok(gamma.gamma(inv.r, inv.h)),
                    c.gamma.p(),
                    k.dims(),
                    crate::validation::Orientation::AsGiven,
                    n.n_sites,
                    n.n_trials,
                    cfg.seed,
                    n.tol,
                )?;
                if st.push(StageResult::from_audit(&r)?) {
                    st.push(pd_stage(cfg, &iso(Arc::new(k))?)?);
                }
            }
        }
        KernelConfig::FClass(c) => {
            if let Some(k) = st.build(c.build())? {
                st.push(StageResult {
                    stage: "cnd_audit".into(),
                    passed: true,
                    min_eig_ratio: None,
                    detail: Some("alpha and nu conditionally negative definite".into()),
                    report: serde_json::Value::Null,
                });
                st.push(pd_stage(cfg, &iso(Arc::new(k))?)?);
            }
        }
        KernelConfig::MaternSpectral(c) => {
            let k = c.build_unchecked()?;
            let r = matern_condition_audit(
                &k,
                &crate::validation::default_a_grid(),
                &crate::validation::default_sr_grid(),
                crate::validation::DEFAULT_TOL_MATERN,
            )?;
            if st.push(StageResult::from_audit(&r)?) {
                st.push(pd_stage(cfg, &iso(Arc::new(k))?)?);
            }
        }
        KernelConfig::Xi(c) => {
            if cfg.transform.is_some() {
                return Err(Error::Config("transforms apply to isotropic families only".into()));
            }
            let k = c.build_unchecked()?;
            let r = xi_pd_audit(&k, n.n_sites, n.n_trials, cfg.seed, n.tol)?;
            st.push(StageResult::from_audit(&r.coefficients)?);
            st.push(StageResult::from_audit(&r.assembled)?);
        }
    }
    let passed = st.0.iter().all(|s| s.passed);
    let summary = st
        .0
        .iter()
        .map(|s| {
            format!(
                "{:<24} {:<4} {}",
                s.stage,
                if s.passed { "ok" } else { "FAIL" },
                s.min_eig_ratio
                    .map(|r| format!("min_eig_ratio = {r:.3e}"))
                    .or_else(|| s.detail.clone())
                    .unwrap_or_default()
            )
        })
        .collect();
    let report = RunReport {
        family: cfg.kernel.family().into(),
        passed,
        stages: st.0,
    };
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    Ok(Outcome { bytes, passed, summary })
}

/// Exact coefficient table of an expansion kernel on `h_grid`.
fn coefficient_table(k: &crate::kernels::ExpansionKernel, h_grid: &[f64]) -> Result<CoefficientTable> {
    let dims = k.dims();
    let mut t = CoefficientTable::zeros(dims.d1, dims.d2, k.p(), k.max_degree(), h_grid.to_vec())?;
    let (m1, m2) = k.max_degree();
    for k1 in 0..=m1 {
        for k2 in 0..=m2 {
            for (hi, &h) in h_grid.iter().enumerate() {
                t.set(k1, k2, hi, k.coefficient(k1, k2, h))?;
            }
        }
    }
    Ok(t)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Series value against the closed form on a 10 x 10 x 5 grid of `(s, r, h)`.
fn sinh_discrepancy(cfg: &RunConfig) -> Result<Outcome> {
    let KernelConfig::SinhSeries(c) = &cfg.kernel else {
        return Err(Error::Config(format!(
            "report-sinh-discrepancy needs a sinh_series kernel, got {}",
            cfg.kernel.family()
        )));
    };
    let k = c.build()?;
    let p = k.p();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &s in &linspace(-1.0, 1.0, 10) {
        for &r in &linspace(-1.0, 1.0, 10) {
            for &h in &linspace(0.0, cfg.numeric.discrepancy_h_max, 5) {
                let inv = Invariants3::new(s, r, h);
                let (series, bound) = k.eval_with_bound(&inv)?;
                let closed = k.eval_closed_form(&inv)?;
                for (idx, (a, b)) in upper_triangle(&series)
                    .into_iter()
                    .zip(upper_triangle(&closed))
                    .enumerate()
                {
                    let (i, j) = triangle_index(p, idx);
                    let diff = (a - b).abs();
                    worst = worst.max(diff);
                    rows.push(vec![
                        io::fmt_f64(s),
                        io::fmt_f64(r),
                        io::fmt_f64(h),
                        i.to_string(),
                        j.to_string(),
                        io::fmt_f64(a),
                        io::fmt_f64(b),
                        io::fmt_f64(diff),
                        io::fmt_f64(diff / a.abs().max(f64::MIN_POSITIVE)),
                        io::fmt_f64(bound),
                    ]);
                }
            }
        }
    }
    let bytes = io::rows_csv(
        &["s", "r", "h", "i", "j", "series", "closed_form", "abs_diff", "rel_diff", "tail_bound"],
        rows,
    )?;
    let mut out = Outcome::ok(bytes);
    out.summary.push(format!("largest |series - closed form| = {worst:.3e}"));
    Ok(out)
}

fn triangle_index(p: usize, idx: usize) -> (usize, usize) {
    let mut n = idx;
    for i in 0..p {
        let len = p - i;
        if n < len {
            return (i, i + n);
        }
        n -= len;
    }
    unreachable!("index {idx} outside the {p}x{p} upper triangle")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_order() {
        let got: Vec<_> = (0..6).map(|i| triangle_index(3, i)).collect();
        assert_eq!(got, vec![(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]);
    }
}
