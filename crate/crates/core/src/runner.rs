//! Config-driven experiment runs: one kernel, one diagnostic, three artifacts.
//!
//! A config is a TOML file:
//!
//! ```toml
//! seed = 42
//! output = "out/dyadic"        # optional, overridden by --output
//! threads = 4                  # optional, never affects output bytes
//!
//! [kernel]
//! builtin = "DYADIC"           # or [kernel.counterexample] / [kernel.affine_ifs]
//!
//! [diagnostic]
//! name = "estimate_condition_E"
//!
//! [diagnostic.params]
//! x = 0.0
//! z = 0.5
//! delta = 0.1
//! n = 10000
//! m = 100
//! ```
//!
//! Points are written as a number (1-D), an array of numbers, or a string
//! `"(i,j,k)"` for sequence states (`k` may be `inf`). The full parameter list of
//! each diagnostic is printed by `list`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::counterexample::{
    escape_statistics, u0_visit_frequency, z_return_probe, CExampleChain, Mode, DEFAULT_P2_OFFSET,
    TAIL_CONVENTION,
};
use crate::diagnostics::{
    drift_check, equicontinuity_probe, estimate_condition_e, estimate_liminf_return, mixing_report,
    stability_probe, support_report, tightness_probe, DiagnosticOptions,
};
use crate::error::Error;
use crate::ifs::{
    builtin_process, drift_coefficients, estimate_b_tilde, lipschitz_report, validate_params,
    IfsJumpProcess, LyapunovCertificate,
};
use crate::kernel::toy::{Coin, Flip, Identity, Scale, Shift};
use crate::kernel::{
    cesaro_measure, ensemble, with_threads, Kernel, DEFAULT_ENSEMBLE, DEFAULT_HORIZON,
};
use crate::metric::{
    EmpiricalMeasure, Metric, MetricPoint, SeqState, Space, TestFunction, TestFunctionDictionary,
    DEFAULT_DICTIONARY_SIZE,
};
use crate::report::{DiagnosticReport, Statistic, Threshold, Verdict};
use crate::rng::{derive_seed, RandomStream};
use crate::stats::DEFAULT_CONFIDENCE;

pub const MANIFEST_SCHEMA: &str = "ergochain-manifest/1";

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INVALID: i32 = 65;
pub const EXIT_SOFTWARE: i32 = 70;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub kernel: KernelSpec,
    pub diagnostic: DiagnosticSpec,
}

/// Exactly one of the three fields must be set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affine_ifs: Option<IfsJumpProcess>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSpec {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_offset")]
    pub p2_offset: u64,
}

fn default_offset() -> u64 {
    DEFAULT_P2_OFFSET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticSpec {
    pub name: String,
    #[serde(default)]
    pub params: Params,
}

/// Union of all diagnostic parameters; each diagnostic reads the ones it needs
/// and rejects the rest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<MetricPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xs: Option<Vec<MetricPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<MetricPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<MetricPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantile: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<Vec<MetricPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<Vec<MetricPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_per_atom: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<MetricPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_probes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_box: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<MetricPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_window: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub p2_offset: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum RunError {
    /// Unreadable or malformed config (exit 64).
    Config(String),
    /// Config parses but violates an invariant, or a kernel invariant fails (exit 65).
    Invalid(String),
    Io(String),
    Internal(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_USAGE,
            RunError::Invalid(_) => EXIT_INVALID,
            RunError::Io(_) => EXIT_IO,
            RunError::Internal(_) => EXIT_SOFTWARE,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Invalid(m) => write!(f, "invalid experiment: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
            RunError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Invalid(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            RunError::Config(m) => RunError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), RunError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(out) = &o.output {
            self.output = Some(out.clone());
        }
        if o.mode.is_some() || o.p2_offset.is_some() {
            let ce = self.kernel.counterexample.as_mut().ok_or_else(|| {
                RunError::Config(
                    "--mode/--p2-offset apply only to the counterexample kernel".into(),
                )
            })?;
            if let Some(mode) = o.mode {
                ce.mode = mode;
            }
            if let Some(off) = o.p2_offset {
                ce.p2_offset = off;
            }
        }
        Ok(())
    }

    /// The config as it determines the output: without `output` and `threads`.
    pub fn effective(&self) -> Self {
        Self {
            output: None,
            threads: None,
            ..self.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// A kernel resolved from its spec.
pub enum ResolvedKernel {
    Ifs(IfsJumpProcess),
    Counterexample(CExampleChain),
    Toy(Box<dyn Kernel>),
}

impl ResolvedKernel {
    pub fn kernel(&self) -> &dyn Kernel {
        match self {
            ResolvedKernel::Ifs(p) => p,
            ResolvedKernel::Counterexample(c) => c,
            ResolvedKernel::Toy(k) => k.as_ref(),
        }
    }
}

struct Named<K> {
    name: &'static str,
    inner: K,
}

impl<K: Kernel> Kernel for Named<K> {
    fn name(&self) -> &str {
        self.name
    }
    fn space(&self) -> Space {
        self.inner.space()
    }
    fn step(&self, x: &MetricPoint, rng: &mut RandomStream) -> crate::Result<MetricPoint> {
        self.inner.step(x, rng)
    }
}

/// Toy kernels available by name alongside the jump-process fixtures.
fn toy_kernel(name: &str) -> Option<Box<dyn Kernel>> {
    Some(match name.to_ascii_uppercase().as_str() {
        "IDENTITY" => Box::new(Identity {
            space: Space::Real(1),
        }),
        "SHIFT" => Box::new(Shift { by: 1.0 }),
        "FLIP" => Box::new(Flip { a: 0.0, b: 1.0 }),
        "COIN" => Box::new(Coin { a: 0.0, b: 1.0 }),
        "DOUBLING" => Box::new(Named {
            name: "DOUBLING",
            inner: Scale { factor: 2.0 },
        }),
        _ => return None,
    })
}

impl KernelSpec {
    pub fn resolve(&self) -> Result<ResolvedKernel, RunError> {
        match (&self.builtin, &self.counterexample, &self.affine_ifs) {
            (Some(name), None, None) => {
                if name.eq_ignore_ascii_case("COUNTEREXAMPLE") {
                    return Ok(ResolvedKernel::Counterexample(CExampleChain::default()));
                }
                if let Some(p) = builtin_process(name) {
                    return Ok(ResolvedKernel::Ifs(p));
                }
                toy_kernel(name).map(ResolvedKernel::Toy).ok_or_else(|| {
                    RunError::Config(format!(
                        "kernel.builtin: unknown kernel {name:?} (see `list`)"
                    ))
                })
            }
            (None, Some(ce), None) => Ok(ResolvedKernel::Counterexample(CExampleChain::new(
                ce.mode,
                ce.p2_offset,
            )?)),
            (None, None, Some(p)) => {
                p.check()?;
                Ok(ResolvedKernel::Ifs(p.clone()))
            }
            _ => Err(RunError::Config(
                "kernel: set exactly one of `builtin`, `counterexample`, `affine_ifs`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub schema: String,
    pub version: String,
    pub seed: u64,
    pub diagnostic: String,
    pub kernel: String,
    /// Effective config (TOML); rerunning it reproduces every artifact.
    pub config: String,
    pub artifacts: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: DiagnosticReport,
    pub output_dir: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.report.verdict.exit_code()
    }
}

/// Loads, runs and writes artifacts. The exit code is the verdict's.
pub fn run(config_path: &Path, overrides: &Overrides) -> Result<RunOutcome, RunError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    cfg.apply(overrides)?;
    let out = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("ergochain-out"));
    run_config(&cfg, &out)
}

pub fn run_config(cfg: &ExperimentConfig, output_dir: &Path) -> Result<RunOutcome, RunError> {
    let report = with_threads(cfg.threads.unwrap_or(0), || execute(cfg))?;
    write_artifacts(cfg, &report, output_dir)?;
    Ok(RunOutcome {
        report,
        output_dir: output_dir.to_path_buf(),
    })
}

pub fn write_artifacts(
    cfg: &ExperimentConfig,
    report: &DiagnosticReport,
    dir: &Path,
) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| io_err(&p, e))
    };
    write("report.json", &report.to_json())?;
    write("series.csv", &report.series_csv())?;
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        diagnostic: report.condition_name.clone(),
        kernel: report
            .inputs
            .get("kernel")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string(),
        config: cfg.effective().to_toml(),
        artifacts: vec![
            "report.json".into(),
            "series.csv".into(),
            "manifest.json".into(),
        ],
    };
    let mut body =
        serde_json::to_string_pretty(&manifest).map_err(|e| RunError::Internal(e.to_string()))?;
    body.push('\n');
    write("manifest.json", &body)
}

fn need<T: Clone>(v: &Option<T>, field: &str, diag: &str) -> Result<T, RunError> {
    v.clone()
        .ok_or_else(|| RunError::Config(format!("diagnostic.params.{field}: required by {diag}")))
}

/// Random points in `[-b, b]^d` from a derived seed.
fn box_points(
    seed: u64,
    label: &str,
    count: usize,
    dim: usize,
    b: f64,
) -> crate::Result<Vec<MetricPoint>> {
    let mut rng = RandomStream::new(derive_seed(seed, label, 0), 0);
    (0..count)
        .map(|_| {
            MetricPoint::real(
                (0..dim)
                    .map(|_| b * (2.0 * rng.uniform() - 1.0))
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}

fn seq_start(p: &Params, diag: &str) -> Result<SeqState, RunError> {
    let start = p.start.clone().unwrap_or(MetricPoint::Seq(SeqState {
        i: 1,
        j: 1,
        k: crate::Level::Finite(1),
    }));
    start.as_seq().copied().ok_or_else(|| {
        RunError::Invalid(format!(
            "{diag}: start must be a sequence state \"(i,j,k)\""
        ))
    })
}

fn ifs_of<'a>(k: &'a ResolvedKernel, diag: &str) -> Result<&'a IfsJumpProcess, RunError> {
    match k {
        ResolvedKernel::Ifs(p) => Ok(p),
        _ => Err(RunError::Invalid(format!(
            "{diag} needs a jump-process kernel"
        ))),
    }
}

fn chain_of<'a>(k: &'a ResolvedKernel, diag: &str) -> Result<&'a CExampleChain, RunError> {
    match k {
        ResolvedKernel::Counterexample(c) => Ok(c),
        _ => Err(RunError::Invalid(format!(
            "{diag} needs the counterexample kernel"
        ))),
    }
}

/// Runs the configured diagnostic; no file system access.
pub fn execute(cfg: &ExperimentConfig) -> Result<DiagnosticReport, RunError> {
    let resolved = cfg.kernel.resolve()?;
    let kernel = resolved.kernel();
    let p = &cfg.diagnostic.params;
    let name = cfg.diagnostic.name.as_str();
    let seed = derive_seed(cfg.seed, name, 0);
    let opts = DiagnosticOptions {
        confidence: p.confidence.unwrap_or(DEFAULT_CONFIDENCE),
        metric: p.metric.unwrap_or_default(),
    };
    let n = p.n.unwrap_or(DEFAULT_HORIZON);
    let m = p.m.unwrap_or(DEFAULT_ENSEMBLE);
    let x0_default = || match kernel.space() {
        Space::Real(d) => MetricPoint::Real(vec![0.0; d]),
        Space::Seq => MetricPoint::Seq(SeqState {
            i: 1,
            j: 1,
            k: crate::Level::Finite(1),
        }),
    };

    let mut report = match name {
        "estimate_condition_E" => {
            let x = p.x.clone().unwrap_or_else(x0_default);
            estimate_condition_e(
                kernel,
                &x,
                &need(&p.z, "z", name)?,
                need(&p.delta, "delta", name)?,
                n,
                m,
                seed,
                &opts,
            )?
        }
        "estimate_liminf_return" => {
            let xs = p.xs.clone().unwrap_or_else(|| vec![x0_default()]);
            estimate_liminf_return(
                kernel,
                &xs,
                &need(&p.z, "z", name)?,
                need(&p.delta, "delta", name)?,
                n,
                m,
                seed,
                &opts,
            )?
        }
        "drift_check" => {
            let proc = ifs_of(&resolved, name)?;
            let x0 = p.x0.clone().unwrap_or_else(x0_default);
            let x0v = x0
                .as_real()
                .ok_or_else(|| RunError::Invalid("x0 must be a real vector".into()))?;
            let b_tilde = estimate_b_tilde(proc, x0v, None)?.value.ok_or_else(|| {
                RunError::Invalid("semigroup orbit of x0 diverges; b_tilde is infinite".into())
            })?;
            let d = proc.declared;
            let coeffs = drift_coefficients(d.r, proc.gamma, d.kappa, proc.n_maps(), b_tilde)?;
            let lambda = p.lambda.unwrap_or((coeffs.lambda0 + 1.0) / 2.0);
            let cert = LyapunovCertificate::from_drift(x0.clone(), coeffs, lambda, opts.metric)?;
            let probes = match &p.probes {
                Some(ps) => ps.clone(),
                None => box_points(
                    seed,
                    "drift_probes",
                    p.n_probes.unwrap_or(50),
                    proc.dim,
                    p.probe_box.unwrap_or(10.0),
                )?,
            };
            let mut r = drift_check(kernel, &cert, &probes, p.m.unwrap_or(500), seed, &opts)?;
            r.set_input("lambda0", coeffs.lambda0);
            r.set_input("b_tilde", b_tilde);
            r
        }
        "equicontinuity_probe" => {
            let z = need(&p.z, "z", name)?;
            let f = TestFunction::bump(z.clone(), p.f_scale.unwrap_or(1.0), opts.metric)?;
            let radii = p
                .radii
                .clone()
                .unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]);
            let rep = equicontinuity_probe(
                kernel,
                &f,
                &z,
                &radii,
                p.n_max.unwrap_or(20),
                p.m.unwrap_or(DEFAULT_ENSEMBLE),
                p.points_per_radius.unwrap_or(4),
                seed,
                &opts,
            )?;
            rep.to_report(kernel.name())
        }
        "tightness_probe" => {
            let z =
                p.z.clone()
                    .or_else(|| p.x.clone())
                    .unwrap_or_else(x0_default);
            tightness_probe(
                kernel,
                &z,
                need(&p.eps, "eps", name)?,
                n,
                m,
                p.quantile,
                seed,
                &opts,
            )?
        }
        "stability_probe" => {
            let mu1 = EmpiricalMeasure::uniform(need(&p.mu1, "mu1", name)?)?;
            let mu2 = EmpiricalMeasure::uniform(need(&p.mu2, "mu2", name)?)?;
            let size = p.dictionary_size.unwrap_or(DEFAULT_DICTIONARY_SIZE);
            let dict = TestFunctionDictionary::seeded(
                &[&mu1, &mu2],
                size,
                derive_seed(seed, "dictionary", 0),
                opts.metric,
            )?;
            stability_probe(
                kernel,
                &mu1,
                &mu2,
                p.n.unwrap_or(16),
                p.m_per_atom.unwrap_or(DEFAULT_ENSEMBLE),
                &dict,
                seed,
            )?
        }
        "mixing_bound_k" => mixing_report(
            need(&p.alpha, "alpha", name)?,
            p.f_norm.unwrap_or(1.0),
            need(&p.eps, "eps", name)?,
        )?,
        "support_estimate" => {
            let x = p.x.clone().unwrap_or_else(x0_default);
            let trajs = ensemble(kernel, &x, n, m, seed)?;
            let mu = cesaro_measure(&trajs, n)?;
            let mut r = support_report(&mu, need(&p.eps, "eps", name)?, opts.metric)?;
            r.set_input("kernel", kernel.name());
            r.set_input("x", &x);
            r.set_input("n", n);
            r.set_input("m", m);
            r.note("measure: Cesàro average of the simulated ensemble");
            r
        }
        "validate_params" => {
            let proc = ifs_of(&resolved, name)?;
            let b = p.probe_box.unwrap_or(5.0);
            let count = p.n_pairs.unwrap_or(200);
            let xs = box_points(seed, "pairs_a", count, proc.dim, b)?;
            let ys = box_points(seed, "pairs_b", count, proc.dim, b)?;
            let pairs: Vec<_> = xs.into_iter().zip(ys).collect();
            let ts =
                p.ts.clone()
                    .unwrap_or_else(|| vec![0.0, 0.1, 0.5, 1.0, 2.0, 5.0]);
            validate_params(proc, &pairs, &ts)?
        }
        "lipschitz_bound_L" => {
            let declared = match &resolved {
                ResolvedKernel::Ifs(proc) => Some((proc.declared, proc.gamma)),
                _ => None,
            };
            let pick = |v: Option<f64>,
                        f: fn(&(crate::ifs::DeclaredConstants, f64)) -> f64,
                        field: &str| {
                v.or(declared.as_ref().map(f)).ok_or_else(|| {
                    RunError::Config(format!("diagnostic.params.{field}: required by {name}"))
                })
            };
            let r = pick(p.r, |d| d.0.r, "r")?;
            let a = pick(p.a, |d| d.0.a, "a")?;
            let gamma = pick(p.gamma, |d| d.1, "gamma")?;
            let kappa = pick(p.kappa, |d| d.0.kappa, "kappa")?;
            lipschitz_report(r, a, gamma, kappa)?
        }
        "escape_statistics" => {
            let chain = chain_of(&resolved, name)?;
            let start = seq_start(p, name)?;
            let trajs = ensemble(chain, &MetricPoint::Seq(start), n, m, seed)?;
            let mut r = escape_statistics(&trajs, p.j_window.unwrap_or(100))?;
            r.set_input("kernel", kernel.name());
            r.set_input("start", MetricPoint::Seq(start));
            r
        }
        "u0_visit_frequency" => {
            let chain = chain_of(&resolved, name)?;
            let start = seq_start(p, name)?;
            let trajs = ensemble(chain, &MetricPoint::Seq(start), n, m, seed)?;
            let burn_in = p.burn_in.unwrap_or(n / 4 + 1);
            let freq = u0_visit_frequency(&trajs, burn_in, opts.confidence)?;
            let mut r = DiagnosticReport::new("u0_visit_frequency")
                .input("kernel", kernel.name())
                .input("start", MetricPoint::Seq(start))
                .input("n", n)
                .input("m", m)
                .input("burn_in", freq.burn_in)
                .input("confidence", opts.confidence);
            r.series = freq
                .per_step
                .iter()
                .enumerate()
                .map(|(t, e)| crate::report::SeriesPoint::from_probability(t as u64 + 1, e))
                .collect();
            let stat = Statistic {
                estimate: freq.theta_hat.p_hat,
                ci_low: freq.theta_hat.ci_low,
                ci_high: freq.theta_hat.ci_high,
            };
            r.statistic = Some(stat);
            r.threshold = Some(Threshold::new(">", 0.0));
            r.verdict = Verdict::above(&stat, 0.0);
            r.note("theta_hat: min over steps >= burn_in of the per-step U0 frequency");
            r.details = json!({"theta_step": freq.theta_step, "cesaro": freq.cesaro});
            r
        }
        "z_return_probe" => {
            let chain = chain_of(&resolved, name)?;
            let start = seq_start(p, name)?;
            z_return_probe(chain, &start, p.radius.unwrap_or(0.125), n, m, seed, &opts)?
        }
        other => {
            return Err(RunError::Config(format!(
                "diagnostic.name: unknown diagnostic {other:?} (see `list`)"
            )))
        }
    };
    report.set_input("config_seed", cfg.seed);
    if let ResolvedKernel::Counterexample(c) = &resolved {
        report.set_input("mode", c.mode());
        report.set_input("p2_offset", c.p2_offset());
        if !report.notes.iter().any(|n| n == TAIL_CONVENTION) {
            report.note(TAIL_CONVENTION);
        }
    }
    Ok(report)
}

pub struct BuiltinEntry {
    pub kind: &'static str,
    pub name: &'static str,
    pub signature: &'static str,
}

/// Stable-ordered inventory of kernels and diagnostics.
pub fn list_builtins() -> Vec<BuiltinEntry> {
    let e = |kind, name, signature| BuiltinEntry {
        kind,
        name,
        signature,
    };
    vec![
        e(
            "kernel",
            "DYADIC",
            "R^1: x/2 or x/2+1/2 w.p. 1/2; identity flow, gamma=1",
        ),
        e(
            "kernel",
            "DECAY2D",
            "R^2: x/2+o_i, o in {0,(2/3,0),(0,2/3)}; flow e^-t x, gamma=2",
        ),
        e("kernel", "POINT", "R^1: x -> x/2"),
        e(
            "kernel",
            "COUNTEREXAMPLE",
            "seq(i,j,k): [kernel.counterexample] mode=patched|literal, p2_offset=1",
        ),
        e("kernel", "IDENTITY", "R^1: x -> x"),
        e("kernel", "SHIFT", "R^1: x -> x+1"),
        e("kernel", "FLIP", "R^1: 0 <-> 1"),
        e("kernel", "COIN", "R^1: 0 or 1 w.p. 1/2"),
        e("kernel", "DOUBLING", "R^1: x -> 2x"),
        e(
            "kernel",
            "affine_ifs",
            "[kernel.affine_ifs] name, dim, semigroup, maps, probs, gamma, declared",
        ),
        e("diagnostic", "estimate_condition_E", "x, z, delta, n, m"),
        e("diagnostic", "estimate_liminf_return", "xs, z, delta, n, m"),
        e(
            "diagnostic",
            "drift_check",
            "x0, lambda, probes | n_probes, probe_box, m>=30",
        ),
        e(
            "diagnostic",
            "equicontinuity_probe",
            "z, radii (decreasing), n_max, m, points_per_radius, f_scale",
        ),
        e("diagnostic", "tightness_probe", "z, eps, n, m, quantile"),
        e(
            "diagnostic",
            "stability_probe",
            "mu1, mu2, n, m_per_atom, dictionary_size",
        ),
        e("diagnostic", "mixing_bound_k", "alpha, f_norm, eps"),
        e("diagnostic", "support_estimate", "x, n, m, eps"),
        e("diagnostic", "validate_params", "n_pairs, probe_box, ts"),
        e(
            "diagnostic",
            "lipschitz_bound_L",
            "r, a, gamma, kappa (default: declared)",
        ),
        e("diagnostic", "escape_statistics", "start, n, m, j_window"),
        e("diagnostic", "u0_visit_frequency", "start, n, m, burn_in"),
        e("diagnostic", "z_return_probe", "start, radius, n, m"),
    ]
}

pub fn render_builtins() -> String {
    let mut out = String::new();
    for b in list_builtins() {
        out.push_str(&format!("{:<11} {:<24} {}\n", b.kind, b.name, b.signature));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DYADIC_E: &str = r#"
seed = 42

[kernel]
builtin = "DYADIC"

[diagnostic]
name = "estimate_condition_E"

[diagnostic.params]
x = 0.0
z = 0.5
delta = 0.1
n = 400
m = 50
"#;

    #[test]
    fn parses_and_echoes() {
        let cfg = ExperimentConfig::from_toml(DYADIC_E).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.diagnostic.params.z, Some(MetricPoint::scalar(0.5)));
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn parse_errors_name_the_field() {
        let e = ExperimentConfig::from_toml(&DYADIC_E.replace("delta", "detla")).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
        assert!(e.to_string().contains("detla"), "{e}");
        let e = ExperimentConfig::from_toml(&DYADIC_E.replace("seed = 42", "")).unwrap_err();
        assert!(e.to_string().contains("seed"), "{e}");
        assert!(
            e.to_string().contains("line") || e.to_string().contains("TOML parse error"),
            "{e}"
        );
    }

    #[test]
    fn space_mismatch_is_invalid() {
        let cfg =
            ExperimentConfig::from_toml(&DYADIC_E.replace("z = 0.5", "z = \"(1,1,1)\"")).unwrap();
        assert_eq!(execute(&cfg).unwrap_err().exit_code(), EXIT_INVALID);
    }

    #[test]
    fn mode_override_needs_counterexample() {
        let mut cfg = ExperimentConfig::from_toml(DYADIC_E).unwrap();
        let o = Overrides {
            mode: Some(Mode::Literal),
            ..Overrides::default()
        };
        assert_eq!(cfg.apply(&o).unwrap_err().exit_code(), EXIT_USAGE);
    }

    #[test]
    fn kernel_spec_needs_exactly_one() {
        assert!(KernelSpec::default().resolve().is_err());
        let ks = KernelSpec {
            builtin: Some("doubling".into()),
            ..KernelSpec::default()
        };
        assert_eq!(ks.resolve().unwrap().kernel().name(), "DOUBLING");
    }

    #[test]
    fn listing_is_stable_and_complete() {
        let a = render_builtins();
        assert_eq!(a, render_builtins());
        for k in ["DYADIC", "DECAY2D", "POINT", "COUNTEREXAMPLE"] {
            assert!(a.contains(k));
        }
        for d in [
            "estimate_condition_E",
            "estimate_liminf_return",
            "drift_check",
            "equicontinuity_probe",
            "tightness_probe",
            "stability_probe",
            "mixing_bound_k",
            "support_estimate",
            "z_return_probe",
        ] {
            assert!(a.contains(d), "{d}");
        }
    }

    #[test]
    fn executes_dyadic_condition_e() {
        let cfg = ExperimentConfig::from_toml(DYADIC_E).unwrap();
        let r = execute(&cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.series.len(), 400);
    }
}
