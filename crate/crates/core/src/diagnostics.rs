//! Monte Carlo estimators for ergodicity hypotheses and conclusions.
//!
//! Limits over `n → ∞` are replaced by proxies over the final quarter of the
//! simulated horizon: `limsup` by the maximum and `liminf` by the minimum of the
//! per-step estimates there. "Positive" means the lower confidence bound is
//! strictly positive; an interval straddling a threshold yields INCONCLUSIVE.
//! Neighbourhoods of a point are open balls `B(z, δ) = {x : ρ(x, z) < δ}`.
//!
//! Every estimator is a pure function of its inputs and seed. Internal tasks
//! (per start point, pilot runs, probe points) draw from seeds derived with
//! [`derive_seed`], trajectories from stream ids `0..m` under those seeds.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::ifs::LyapunovCertificate;
use crate::kernel::{check_space, par_tasks, propagate_measure, walk, Kernel};
use crate::metric::{
    bl_distance, EmpiricalMeasure, Metric, MetricPoint, TestFunction, TestFunctionDictionary,
};
use crate::report::{DiagnosticReport, SeriesPoint, Statistic, Threshold, Verdict};
use crate::rng::{derive_seed, RandomStream};
use crate::stats::{ls_slope, z_value, MeanEstimate, ProbabilityEstimate, DEFAULT_CONFIDENCE};

pub const BALLS_ONLY: &str = "neighbourhoods checked: open balls only";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticOptions {
    pub confidence: f64,
    pub metric: Metric,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self {
            confidence: DEFAULT_CONFIDENCE,
            metric: Metric::Sup,
        }
    }
}

/// Step indices (0-based) of the last quarter of a horizon of `n` steps.
pub fn final_quarter(n: usize) -> Range<usize> {
    let start = (3 * n / 4).min(n.saturating_sub(1));
    start..n
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::param(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn check_count(name: &str, v: usize, min: usize) -> Result<()> {
    if v < min {
        return Err(Error::param(format!(
            "{name} must be at least {min}, got {v}"
        )));
    }
    Ok(())
}

/// Trajectories per accumulation chunk. Chunks are merged in index order, so
/// floating-point sums do not depend on the thread count.
const CHUNK: usize = 256;

/// Folds per-trajectory hit indicators (`hits[t]`: inside after `t + 1` steps)
/// into an accumulator, one chunk of stream ids per task.
#[allow(clippy::too_many_arguments)]
fn accumulate_hits<A: Send>(
    kernel: &dyn Kernel,
    x: &MetricPoint,
    n: usize,
    m: usize,
    seed: u64,
    inside: &(dyn Fn(&MetricPoint) -> bool + Sync),
    init: impl Fn() -> A + Sync,
    add: impl Fn(&mut A, &[bool]) + Sync,
    merge: impl Fn(&mut A, A),
) -> Result<A> {
    let chunks = m.div_ceil(CHUNK);
    let parts = par_tasks(chunks, |c| {
        let mut acc = init();
        let mut row = Vec::with_capacity(n);
        for id in c as usize * CHUNK..((c as usize + 1) * CHUNK).min(m) {
            row.clear();
            walk(
                kernel,
                x,
                n,
                &mut RandomStream::new(seed, id as u64),
                |_, s| row.push(inside(s)),
            )?;
            add(&mut acc, &row);
        }
        Ok(acc)
    })?;
    let mut parts = parts.into_iter();
    let mut total = parts.next().unwrap_or_else(&init);
    for p in parts {
        merge(&mut total, p);
    }
    Ok(total)
}

fn hit_counts(
    kernel: &dyn Kernel,
    x: &MetricPoint,
    n: usize,
    m: usize,
    seed: u64,
    inside: &(dyn Fn(&MetricPoint) -> bool + Sync),
) -> Result<Vec<u64>> {
    accumulate_hits(
        kernel,
        x,
        n,
        m,
        seed,
        inside,
        || vec![0u64; n],
        |acc, row| {
            acc.iter_mut()
                .zip(row)
                .for_each(|(a, h)| *a += u64::from(*h))
        },
        |acc, other| acc.iter_mut().zip(other).for_each(|(a, b)| *a += b),
    )
}

fn ball(z: &MetricPoint, delta: f64, metric: Metric) -> impl Fn(&MetricPoint) -> bool + Sync + '_ {
    move |x| metric.dist_unchecked(x, z) < delta
}

/// Running Cesàro averages of ball hits, `(1/n) Σ_{i≤n} P^i(x, B(z, δ))`, with
/// intervals from the spread of the per-trajectory averages. The statistic is
/// the maximum over the final quarter; PASS when its lower bound is positive.
#[allow(clippy::too_many_arguments)]
pub fn estimate_condition_e(
    kernel: &dyn Kernel,
    x: &MetricPoint,
    z: &MetricPoint,
    delta: f64,
    n: usize,
    m: usize,
    seed: u64,
    opts: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    check_space(kernel, x)?;
    check_space(kernel, z)?;
    check_positive("delta", delta)?;
    check_count("n", n, 1)?;
    check_count("m", m, 1)?;
    let zq = z_value(opts.confidence)?;
    // Per step: sum and sum of squares of the per-trajectory running averages.
    let (sums, sums_sq) = accumulate_hits(
        kernel,
        x,
        n,
        m,
        seed,
        &ball(z, delta, opts.metric),
        || (vec![0.0f64; n], vec![0.0f64; n]),
        |(s1, s2), row| {
            let mut cum = 0u64;
            for (t, h) in row.iter().enumerate() {
                cum += u64::from(*h);
                let a = cum as f64 / (t + 1) as f64;
                s1[t] += a;
                s2[t] += a * a;
            }
        },
        |(s1, s2), (o1, o2)| {
            s1.iter_mut().zip(o1).for_each(|(a, b)| *a += b);
            s2.iter_mut().zip(o2).for_each(|(a, b)| *a += b);
        },
    )?;
    let mut series = Vec::with_capacity(n);
    for t in 0..n {
        let (sum, sum_sq) = (sums[t], sums_sq[t]);
        let mf = m as f64;
        let mean = sum / mf;
        let se = if m > 1 {
            ((sum_sq - mf * mean * mean).max(0.0) / (mf - 1.0)).sqrt() / mf.sqrt()
        } else {
            0.0
        };
        series.push(SeriesPoint {
            n: t as u64 + 1,
            estimate: mean,
            ci_low: (mean - zq * se).max(0.0),
            ci_high: (mean + zq * se).min(1.0),
        });
    }
    let best = series[final_quarter(n)]
        .iter()
        .max_by(|a, b| a.estimate.total_cmp(&b.estimate))
        .copied()
        .expect("nonempty window");

    let mut report = DiagnosticReport::new("estimate_condition_E")
        .input("kernel", kernel.name())
        .input("x", x)
        .input("z", z)
        .input("delta", delta)
        .input("n", n)
        .input("m", m)
        .input("seed", seed)
        .input("confidence", opts.confidence)
        .input("metric", opts.metric);
    report.statistic = Some(best.statistic());
    report.threshold = Some(Threshold::new(">", 0.0));
    report.verdict = Verdict::above(&best.statistic(), 0.0);
    report.series = series;
    report.note("statistic: max of the running Cesàro average over the final quarter of the horizon (limsup proxy)");
    report.note(BALLS_ONLY);
    report.details = json!({"argmax_n": best.n});
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnProxy {
    pub x: MetricPoint,
    pub proxy: ProbabilityEstimate,
    pub at_n: u64,
    pub verdict: Verdict,
}

/// Per-step `P^n(x, B(z, δ))` for every start `x`; the liminf proxy is the
/// minimum over the final quarter and `α̂` is the minimum over starts.
#[allow(clippy::too_many_arguments)]
pub fn estimate_liminf_return(
    kernel: &dyn Kernel,
    xs: &[MetricPoint],
    z: &MetricPoint,
    delta: f64,
    n: usize,
    m: usize,
    seed: u64,
    opts: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    if xs.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    for x in xs {
        check_space(kernel, x)?;
    }
    check_space(kernel, z)?;
    check_positive("delta", delta)?;
    check_count("n", n, 1)?;
    check_count("m", m, 1)?;
    let inside = ball(z, delta, opts.metric);

    let mut per_start = Vec::with_capacity(xs.len());
    let mut worst: Option<(usize, Vec<SeriesPoint>)> = None;
    for (xi, x) in xs.iter().enumerate() {
        let counts = hit_counts(
            kernel,
            x,
            n,
            m,
            derive_seed(seed, "liminf_return", xi as u64),
            &inside,
        )?;
        let series = counts
            .iter()
            .enumerate()
            .map(|(t, hits)| {
                ProbabilityEstimate::wilson(*hits, m as u64, opts.confidence)
                    .map(|p| SeriesPoint::from_probability(t as u64 + 1, &p))
            })
            .collect::<Result<Vec<_>>>()?;
        let low = series[final_quarter(n)]
            .iter()
            .min_by(|a, b| a.estimate.total_cmp(&b.estimate))
            .copied()
            .expect("nonempty window");
        let proxy = ProbabilityEstimate {
            p_hat: low.estimate,
            ci_low: low.ci_low,
            ci_high: low.ci_high,
            n_samples: m as u64,
            confidence: opts.confidence,
        };
        let verdict = Verdict::above(&low.statistic(), 0.0);
        let replace = match &worst {
            None => true,
            Some((wi, _)) => {
                proxy.p_hat
                    < per_start
                        .get(*wi)
                        .map_or(f64::INFINITY, |r: &ReturnProxy| r.proxy.p_hat)
            }
        };
        per_start.push(ReturnProxy {
            x: x.clone(),
            proxy,
            at_n: low.n,
            verdict,
        });
        if replace {
            worst = Some((xi, series));
        }
    }
    let (wi, series) = worst.expect("at least one start");
    let alpha = per_start[wi].proxy;
    let stat = Statistic {
        estimate: alpha.p_hat,
        ci_low: alpha.ci_low,
        ci_high: alpha.ci_high,
    };
    let mut report = DiagnosticReport::new("estimate_liminf_return")
        .input("kernel", kernel.name())
        .input("xs", xs)
        .input("z", z)
        .input("delta", delta)
        .input("n", n)
        .input("m", m)
        .input("seed", seed)
        .input("confidence", opts.confidence)
        .input("metric", opts.metric);
    report.statistic = Some(stat);
    report.threshold = Some(Threshold::new(">", 0.0));
    report.verdict = Verdict::above(&stat, 0.0);
    report.series = series;
    for r in per_start.iter().filter(|r| r.verdict != Verdict::Pass) {
        report.witness("liminf proxy not positive", r);
    }
    report.note("liminf proxy: min of P^n(x, B(z, delta)) over the final quarter; alpha-hat: min over starts");
    report.note(format!(
        "series shown for the start attaining alpha-hat: {}",
        per_start[wi].x
    ));
    report.note(BALLS_ONLY);
    report.details = json!({"per_start": per_start});
    Ok(report)
}

/// Monte Carlo check of `PV(x) ≤ λV(x) + b·1_{B(x₀,R)}(x)` at each probe.
/// A probe violates when `estimate − 3·stderr` exceeds the bound; it passes with
/// margin when `estimate + 3·stderr` stays within it.
pub fn drift_check(
    kernel: &dyn Kernel,
    cert: &LyapunovCertificate,
    probes: &[MetricPoint],
    m: usize,
    seed: u64,
    opts: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    cert.check()?;
    if probes.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    check_count("m", m, 30)?;
    check_space(kernel, &cert.x0)?;
    for p in probes {
        check_space(kernel, p)?;
    }
    let estimates: Vec<MeanEstimate> = probes
        .par_iter()
        .enumerate()
        .map(|(pi, x)| {
            let key = derive_seed(seed, "drift_check", pi as u64);
            let values = (0..m as u64)
                .map(|id| {
                    kernel
                        .step(x, &mut RandomStream::new(key, id))
                        .map(|y| cert.v.eval(&y))
                })
                .collect::<Result<Vec<_>>>()?;
            MeanEstimate::from_samples(&values)
        })
        .collect::<Result<_>>()?;

    let mut report = DiagnosticReport::new("drift_check")
        .input("kernel", kernel.name())
        .input("V", cert.v.description())
        .input("lambda", cert.lambda)
        .input("b", cert.b)
        .input("R", cert.radius)
        .input("x0", &cert.x0)
        .input("probes", probes)
        .input("m", m)
        .input("seed", seed);
    let mut violations = 0;
    let mut all_margin = true;
    let mut worst_slack = f64::NEG_INFINITY;
    for (pi, (x, e)) in probes.iter().zip(&estimates).enumerate() {
        let bound = cert.bound(x, opts.metric);
        let lo = e.mean - 3.0 * e.stderr;
        let hi = e.mean + 3.0 * e.stderr;
        worst_slack = worst_slack.max(hi - bound);
        if lo > bound {
            violations += 1;
            report.witness(
                "drift violation",
                json!({"x": x, "pv_hat": e.mean, "stderr": e.stderr, "bound": bound}),
            );
        } else if hi > bound {
            all_margin = false;
        }
        report.series.push(SeriesPoint {
            n: pi as u64,
            estimate: e.mean,
            ci_low: lo,
            ci_high: hi,
        });
    }
    report.statistic = Some(Statistic::exact(worst_slack));
    report.threshold = Some(Threshold::new("<=", 0.0));
    report.verdict = if violations > 0 {
        Verdict::Fail
    } else if all_margin {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    let stationary = cert.b / (1.0 - cert.lambda);
    report.note("series: n = probe index, estimate = PV(x) with +/- 3 stderr");
    report.note(format!(
        "implied bound on stationary E[V]: b/(1-lambda) = {stationary}"
    ));
    report.details = json!({
        "violations": violations,
        "max_upper_minus_bound": worst_slack,
        "implied_stationary_bound": stationary,
    });
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquicontinuityEntry {
    pub radius: f64,
    pub y: MetricPoint,
    pub n: u64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquicontinuityReport {
    pub center: MetricPoint,
    pub radii: Vec<f64>,
    pub horizons: Vec<u64>,
    pub test_function: String,
    pub entries: Vec<EquicontinuityEntry>,
    /// Per radius: sup over probe points and horizons.
    pub modulus: Vec<f64>,
    /// Per radius and horizon: sup over probe points.
    pub modulus_by_n: Vec<Vec<f64>>,
    /// Moduli shrink with the radius (smallest ≤ ½ largest, up to noise).
    pub e_chain_trend: bool,
    pub seed: u64,
    pub m: usize,
}

impl EquicontinuityReport {
    pub fn to_report(&self, kernel_name: &str) -> DiagnosticReport {
        let mut r = DiagnosticReport::new("equicontinuity_probe")
            .input("kernel", kernel_name)
            .input("z", &self.center)
            .input("radii", &self.radii)
            .input("n_max", self.horizons.len())
            .input("m", self.m)
            .input("seed", self.seed)
            .input("f", &self.test_function);
        let last = self.radii.len() - 1;
        for (ni, n) in self.horizons.iter().enumerate() {
            let v = self.modulus_by_n[last][ni];
            r.series.push(SeriesPoint::exact(*n, v));
        }
        let first = self.modulus[0];
        let smallest = self.modulus[last];
        r.statistic = Some(Statistic::exact(smallest));
        r.threshold = Some(Threshold::new("<=", 0.5 * first));
        r.verdict = if self.e_chain_trend {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        if !self.e_chain_trend {
            r.note("modulus does not shrink with the radius: no equicontinuity (e-chain) trend");
        }
        r.note("series: sup over probe points of |P^n f(z) - P^n f(y)| at the smallest radius");
        r.details = serde_json::to_value(self).unwrap_or_default();
        r
    }
}

fn shell_point(z: &[f64], radius: f64, metric: Metric, rng: &mut RandomStream) -> Vec<f64> {
    let mut dir: Vec<f64> = z.iter().map(|_| 2.0 * rng.uniform() - 1.0).collect();
    let zeros = vec![0.0; z.len()];
    let mut norm = metric.real_distance(&dir, &zeros);
    if norm == 0.0 {
        dir[0] = 1.0;
        norm = 1.0;
    }
    let s = radius * (0.5 + 0.5 * rng.uniform());
    z.iter()
        .zip(&dir)
        .map(|(zi, di)| zi + s * di / norm)
        .collect()
}

/// Estimates `|Pⁿf(z) − Pⁿf(y)|` for probe points `y` with `ρ(y, z) ∈ [r/2, r]`,
/// `n = 1..=n_max`, using common random numbers for the two chains.
#[allow(clippy::too_many_arguments)]
pub fn equicontinuity_probe(
    kernel: &dyn Kernel,
    f: &TestFunction,
    z: &MetricPoint,
    radii: &[f64],
    n_max: usize,
    m: usize,
    points_per_radius: usize,
    seed: u64,
    opts: &DiagnosticOptions,
) -> Result<EquicontinuityReport> {
    check_space(kernel, z)?;
    let zc = z.as_real().ok_or_else(|| {
        Error::param("equicontinuity probe samples shells in real vector spaces only")
    })?;
    if radii.is_empty() {
        return Err(Error::param("at least one radius is required"));
    }
    for r in radii {
        check_positive("radius", *r)?;
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("radii must be strictly decreasing"));
    }
    check_count("n_max", n_max, 1)?;
    check_count("m", m, 2)?;
    check_count("points_per_radius", points_per_radius, 1)?;

    let crn = derive_seed(seed, "equicontinuity_crn", 0);
    let path_values = |x: &MetricPoint, id: u64| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n_max);
        walk(kernel, x, n_max, &mut RandomStream::new(crn, id), |_, s| {
            out.push(f.eval(s))
        })?;
        Ok(out)
    };
    let z_paths = par_tasks(m, |id| path_values(z, id))?;

    let mut entries = Vec::new();
    let mut modulus = Vec::with_capacity(radii.len());
    let mut modulus_by_n = Vec::with_capacity(radii.len());
    let mut smallest_se: f64 = 0.0;
    for (ri, &r) in radii.iter().enumerate() {
        let mut by_n = vec![0.0f64; n_max];
        for pi in 0..points_per_radius {
            let mut rng = RandomStream::new(
                derive_seed(
                    seed,
                    "equicontinuity_shell",
                    (ri * points_per_radius + pi) as u64,
                ),
                0,
            );
            let y = MetricPoint::real(shell_point(zc, r, opts.metric, &mut rng))?;
            let y_paths = par_tasks(m, |id| path_values(&y, id))?;
            for t in 0..n_max {
                let diffs: Vec<f64> = z_paths
                    .iter()
                    .zip(&y_paths)
                    .map(|(a, b)| a[t] - b[t])
                    .collect();
                let e = MeanEstimate::from_samples(&diffs)?;
                let value = e.mean.abs();
                by_n[t] = by_n[t].max(value);
                if ri == radii.len() - 1 {
                    smallest_se = smallest_se.max(e.stderr);
                }
                entries.push(EquicontinuityEntry {
                    radius: r,
                    y: y.clone(),
                    n: t as u64 + 1,
                    value,
                    stderr: e.stderr,
                });
            }
        }
        modulus.push(by_n.iter().copied().fold(0.0, f64::max));
        modulus_by_n.push(by_n);
    }
    let first = modulus[0];
    let last = *modulus.last().expect("nonempty");
    let e_chain_trend = radii.len() >= 2 && last <= 0.5 * first + 3.0 * smallest_se;
    Ok(EquicontinuityReport {
        center: z.clone(),
        radii: radii.to_vec(),
        horizons: (1..=n_max as u64).collect(),
        test_function: f.describe(),
        entries,
        modulus,
        modulus_by_n,
        e_chain_trend,
        seed,
        m,
    })
}

/// Greedy ε-net over the positive-weight atoms, in atom order: every atom is
/// within `eps` of a representative and representatives are pairwise `≥ eps` apart.
pub fn support_estimate(
    mu: &EmpiricalMeasure,
    eps: f64,
    metric: Metric,
) -> Result<Vec<MetricPoint>> {
    check_positive("eps", eps)?;
    Ok(greedy_net(
        mu.atoms().iter().filter(|(_, w)| *w > 0.0).map(|(p, _)| p),
        eps,
        metric,
    ))
}

fn greedy_net<'a>(
    points: impl Iterator<Item = &'a MetricPoint>,
    eps: f64,
    metric: Metric,
) -> Vec<MetricPoint> {
    let mut reps: Vec<MetricPoint> = Vec::new();
    for p in points {
        if reps.iter().all(|r| metric.dist_unchecked(p, r) >= eps) {
            reps.push(p.clone());
        }
    }
    reps
}

pub fn support_report(mu: &EmpiricalMeasure, eps: f64, metric: Metric) -> Result<DiagnosticReport> {
    let reps = support_estimate(mu, eps, metric)?;
    let mut r = DiagnosticReport::new("support_estimate")
        .input("atoms", mu.len())
        .input("eps", eps)
        .input("metric", metric);
    r.statistic = Some(Statistic::exact(reps.len() as f64));
    r.verdict = Verdict::Pass;
    r.details = json!({ "representatives": reps });
    Ok(r)
}

/// Pilot horizon and ensemble cap used to build the compact candidate.
const PILOT_MAX_TRAJECTORIES: usize = 100;
const MEDOID_SAMPLE: usize = 256;
const EARLY_CHECKPOINTS: usize = 64;

/// Tightness: builds a finite candidate `K` from a pilot run (Cesàro atoms over
/// the first half of the horizon, trimmed to the `quantile` of distances from
/// their medoid, thinned to an `eps/2`-net) and estimates `P^n(z, K^eps)` on a
/// fresh ensemble. The liminf proxy over the final quarter must reach `1 − eps`.
#[allow(clippy::too_many_arguments)]
pub fn tightness_probe(
    kernel: &dyn Kernel,
    z: &MetricPoint,
    eps: f64,
    n: usize,
    m: usize,
    quantile: Option<f64>,
    seed: u64,
    opts: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    check_space(kernel, z)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("eps must lie in (0,1), got {eps}")));
    }
    check_count("n", n, 1)?;
    check_count("m", m, 1)?;
    let q = quantile.unwrap_or(1.0 - eps / 2.0);
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param(format!("quantile must lie in (0,1], got {q}")));
    }
    let metric = opts.metric;

    let pilot_n = (n / 2).max(1);
    let pilot_m = m.min(PILOT_MAX_TRAJECTORIES);
    let pilot_seed = derive_seed(seed, "tightness_pilot", 0);
    let pilot: Vec<Vec<MetricPoint>> = par_tasks(pilot_m, |id| {
        let mut out = Vec::with_capacity(pilot_n);
        walk(
            kernel,
            z,
            pilot_n,
            &mut RandomStream::new(pilot_seed, id),
            |_, s| out.push(s.clone()),
        )?;
        Ok(out)
    })?;
    let atoms: Vec<&MetricPoint> = pilot.iter().flatten().collect();

    let stride = (atoms.len() / MEDOID_SAMPLE).max(1);
    let sample: Vec<&MetricPoint> = atoms.iter().step_by(stride).copied().collect();
    let medoid = sample
        .iter()
        .map(|c| {
            (
                c,
                sample
                    .iter()
                    .map(|p| metric.dist_unchecked(c, p))
                    .sum::<f64>(),
            )
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(c, _)| (*c).clone())
        .expect("pilot is nonempty");
    let mut dists: Vec<f64> = atoms
        .iter()
        .map(|p| metric.dist_unchecked(p, &medoid))
        .collect();
    let mut sorted = dists.clone();
    sorted.sort_by(f64::total_cmp);
    let cut_idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    let trim_radius = sorted[cut_idx];
    let kept = atoms
        .iter()
        .zip(dists.drain(..))
        .filter(|(_, d)| *d <= trim_radius)
        .map(|(p, _)| *p);
    let candidate = greedy_net(kept, eps / 2.0, metric);

    // Every step of the final quarter, plus evenly spaced earlier checkpoints.
    let fq = final_quarter(n);
    let mut steps: Vec<usize> = (0..EARLY_CHECKPOINTS)
        .map(|c| c * fq.start / EARLY_CHECKPOINTS)
        .filter(|s| *s < fq.start)
        .collect();
    steps.dedup();
    steps.extend(fq.clone());
    let fresh_seed = derive_seed(seed, "tightness_fresh", 0);
    let near = |x: &MetricPoint| candidate.iter().any(|k| metric.dist_unchecked(x, k) < eps);
    let rows: Vec<Vec<bool>> = par_tasks(m, |id| {
        let mut row = Vec::with_capacity(steps.len());
        let mut next = 0;
        walk(
            kernel,
            z,
            n,
            &mut RandomStream::new(fresh_seed, id),
            |t, s| {
                if next < steps.len() && steps[next] == t {
                    row.push(near(s));
                    next += 1;
                }
            },
        )?;
        Ok(row)
    })?;
    let mut series = Vec::with_capacity(steps.len());
    for (ci, t) in steps.iter().enumerate() {
        let hits = rows.iter().filter(|r| r[ci]).count() as u64;
        let p = ProbabilityEstimate::wilson(hits, m as u64, opts.confidence)?;
        series.push(SeriesPoint::from_probability(*t as u64 + 1, &p));
    }
    let proxy = series
        .iter()
        .filter(|p| fq.contains(&(p.n as usize - 1)))
        .min_by(|a, b| a.estimate.total_cmp(&b.estimate))
        .copied()
        .expect("final quarter is nonempty");
    let mut report = DiagnosticReport::new("tightness_probe")
        .input("kernel", kernel.name())
        .input("z", z)
        .input("eps", eps)
        .input("n", n)
        .input("m", m)
        .input("quantile", q)
        .input("seed", seed)
        .input("confidence", opts.confidence)
        .input("metric", metric);
    report.statistic = Some(proxy.statistic());
    report.threshold = Some(Threshold::new(">=", 1.0 - eps));
    report.verdict = Verdict::at_least(&proxy.statistic(), 1.0 - eps);
    report.series = series;
    report.note("K: eps/2-net of pilot Cesàro atoms within the quantile radius of their medoid");
    report.note("liminf proxy: min of P^n(z, K^eps) over the final quarter of the horizon");
    report.details = json!({
        "pilot_horizon": pilot_n,
        "pilot_trajectories": pilot_m,
        "medoid": medoid,
        "trim_radius": trim_radius,
        "candidate_size": candidate.len(),
        "argmin_n": proxy.n,
    });
    Ok(report)
}

/// `{0, 1, 2, 4, …}` up to and including `n`.
pub fn geometric_checkpoints(n: usize) -> Vec<usize> {
    let mut c = vec![0];
    let mut t = 1;
    while t < n {
        c.push(t);
        t *= 2;
    }
    if n > 0 {
        c.push(n);
    }
    c
}

/// Propagates both measures along common random numbers and tracks
/// `bl_distance(μ₁Pᵗ, μ₂Pᵗ)` at geometric checkpoints up to `n`.
#[allow(clippy::too_many_arguments)]
pub fn stability_probe(
    kernel: &dyn Kernel,
    mu1: &EmpiricalMeasure,
    mu2: &EmpiricalMeasure,
    n: usize,
    m_per_atom: usize,
    dict: &TestFunctionDictionary,
    seed: u64,
) -> Result<DiagnosticReport> {
    stability_probe_at(
        kernel,
        mu1,
        mu2,
        &geometric_checkpoints(n),
        m_per_atom,
        dict,
        seed,
    )
}

/// Distances below this are treated as identical measures.
const MERGED: f64 = 1e-12;

pub fn stability_probe_at(
    kernel: &dyn Kernel,
    mu1: &EmpiricalMeasure,
    mu2: &EmpiricalMeasure,
    checkpoints: &[usize],
    m_per_atom: usize,
    dict: &TestFunctionDictionary,
    seed: u64,
) -> Result<DiagnosticReport> {
    if mu1.space() != mu2.space() {
        return Err(Error::SpaceMismatch(
            mu1.space().to_string(),
            mu2.space().to_string(),
        ));
    }
    if checkpoints.is_empty() {
        return Err(Error::param("at least one checkpoint is required"));
    }
    let key = derive_seed(seed, "stability_probe", 0);
    let a = propagate_measure(kernel, mu1, checkpoints, m_per_atom, key)?;
    let b = propagate_measure(kernel, mu2, checkpoints, m_per_atom, key)?;
    let values = a
        .iter()
        .zip(&b)
        .map(|(x, y)| bl_distance(x, y, dict))
        .collect::<Result<Vec<_>>>()?;
    let ts: Vec<f64> = checkpoints.iter().map(|t| *t as f64).collect();
    let slope = ls_slope(&ts, &values);
    let initial = values[0];
    let last = *values.last().expect("nonempty");
    let noise_floor = 1.0 / ((m_per_atom * mu1.len().min(mu2.len())) as f64).sqrt();

    let mut report = DiagnosticReport::new("stability_probe")
        .input("kernel", kernel.name())
        .input("mu1_atoms", mu1.len())
        .input("mu2_atoms", mu2.len())
        .input("checkpoints", checkpoints)
        .input("m_per_atom", m_per_atom)
        .input("seed", seed)
        .input("dictionary", dict.provenance());
    report.series = checkpoints
        .iter()
        .zip(&values)
        .map(|(t, v)| SeriesPoint::exact(*t as u64, *v))
        .collect();
    report.statistic = Some(Statistic::exact(last));
    report.threshold = Some(Threshold::new("<", initial / 2.0));
    report.verdict = if initial <= MERGED && last <= MERGED {
        report.note("measures are indistinguishable under the dictionary from the start");
        Verdict::Pass
    } else if slope < 0.0 && last < initial / 2.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    report.note("both measures are propagated with common random numbers (continuation c of atom a uses stream a*m_per_atom + c)");
    report.note("distance is a lower bound on the bounded-Lipschitz distance: dictionary provenance recorded in inputs");
    report.details = json!({"ls_slope": slope, "noise_floor": noise_floor});
    Ok(report)
}

/// Least `k` with `4(1 − α/2)^k ‖f‖∞ ≤ ε`; zero when `ε ≥ 4‖f‖∞`.
pub fn mixing_bound_k(alpha: f64, f_norm: f64, eps: f64) -> Result<u64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param(format!(
            "alpha must lie in (0,1], got {alpha}"
        )));
    }
    check_positive("f_norm", f_norm)?;
    check_positive("eps", eps)?;
    let bound = |k: u64| 4.0 * (1.0 - alpha / 2.0).powi(k as i32) * f_norm;
    if bound(0) <= eps {
        return Ok(0);
    }
    let guess = ((eps / (4.0 * f_norm)).ln() / (1.0 - alpha / 2.0).ln())
        .ceil()
        .max(0.0) as u64;
    let mut k = guess;
    while bound(k) > eps {
        k += 1;
    }
    while k > 0 && bound(k - 1) <= eps {
        k -= 1;
    }
    Ok(k)
}

pub fn mixing_report(alpha: f64, f_norm: f64, eps: f64) -> Result<DiagnosticReport> {
    let k = mixing_bound_k(alpha, f_norm, eps)?;
    let mut r = DiagnosticReport::new("mixing_bound_k")
        .input("alpha", alpha)
        .input("f_norm", f_norm)
        .input("eps", eps);
    r.statistic = Some(Statistic::exact(k as f64));
    r.verdict = Verdict::Pass;
    r.details = json!({"k": k, "bound_at_k": 4.0 * (1.0 - alpha / 2.0).powi(k as i32) * f_norm});
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{dyadic, point, LyapunovFn};
    use crate::kernel::toy::{Flip, Identity, Scale, Shift};
    use crate::metric::Space;

    fn s(x: f64) -> MetricPoint {
        MetricPoint::scalar(x)
    }

    fn opts() -> DiagnosticOptions {
        DiagnosticOptions::default()
    }

    #[test]
    fn quarter() {
        assert_eq!(final_quarter(100), 75..100);
        assert_eq!(final_quarter(1), 0..1);
        assert_eq!(final_quarter(3), 2..3);
    }

    #[test]
    fn condition_e_identity_and_shift() {
        let id = Identity {
            space: Space::Real(1),
        };
        let r = estimate_condition_e(&id, &s(0.0), &s(0.0), 0.5, 50, 10, 1, &opts()).unwrap();
        assert!(r.series.iter().all(|p| p.estimate == 1.0));
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.statistic.unwrap().estimate, 1.0);

        let r = estimate_condition_e(
            &Shift { by: 1.0 },
            &s(0.0),
            &s(0.0),
            0.5,
            50,
            10,
            1,
            &opts(),
        )
        .unwrap();
        assert!(r.series.iter().all(|p| p.estimate == 0.0));
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn liminf_identity_and_flip() {
        let id = Identity {
            space: Space::Real(1),
        };
        let r = estimate_liminf_return(&id, &[s(0.0)], &s(0.0), 0.1, 20, 10, 1, &opts()).unwrap();
        assert_eq!(r.statistic.unwrap().estimate, 1.0);
        assert_eq!(r.verdict, Verdict::Pass);

        let flip = Flip { a: 0.0, b: 1.0 };
        let r = estimate_liminf_return(&flip, &[s(0.0)], &s(0.0), 0.1, 40, 10, 1, &opts()).unwrap();
        for p in &r.series {
            assert_eq!(p.estimate, if p.n % 2 == 0 { 1.0 } else { 0.0 });
        }
        assert_eq!(r.statistic.unwrap().estimate, 0.0);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn drift_point_process() {
        let proc = point(0.5);
        let probes: Vec<_> = (-10..=10).map(|i| s(i as f64 * 3.0)).collect();
        let v = LyapunovFn::distance_from(s(0.0), Metric::Sup);
        let good = LyapunovCertificate::new(v.clone(), 0.6, 0.0, 1.0, s(0.0)).unwrap();
        let r = drift_check(&proc, &good, &probes, 30, 3, &opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let bad = LyapunovCertificate::new(v, 0.4, 0.0, 1.0, s(0.0)).unwrap();
        let r = drift_check(&proc, &bad, &probes, 30, 3, &opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witnesses.len(), 20);
    }

    #[test]
    fn drift_rejects_bad_inputs() {
        let proc = point(0.5);
        let v = LyapunovFn::distance_from(s(0.0), Metric::Sup);
        let mut cert = LyapunovCertificate::new(v, 0.6, 0.0, 1.0, s(0.0)).unwrap();
        assert!(drift_check(&proc, &cert, &[s(1.0)], 29, 0, &opts()).is_err());
        cert.lambda = 1.0;
        assert!(drift_check(&proc, &cert, &[s(1.0)], 30, 0, &opts()).is_err());
    }

    fn clamp01() -> TestFunction {
        TestFunction::custom("clamp(x,0,1)", 1.0, 1.0, |p| {
            p.x0().unwrap().clamp(0.0, 1.0)
        })
        .unwrap()
    }

    #[test]
    fn equicontinuity_identity_is_linear_in_radius() {
        let id = Identity {
            space: Space::Real(1),
        };
        let radii = [0.2, 0.1, 0.05, 0.025];
        let rep =
            equicontinuity_probe(&id, &clamp01(), &s(0.5), &radii, 5, 4, 3, 1, &opts()).unwrap();
        for e in &rep.entries {
            assert!(e.value <= e.radius + 1e-15);
            assert!(e.value >= e.radius / 2.0 - 1e-15);
            assert_eq!(e.stderr, 0.0);
        }
        assert!(rep.e_chain_trend);
        assert_eq!(rep.to_report("IDENTITY").verdict, Verdict::Pass);
    }

    #[test]
    fn equicontinuity_dyadic_contracts_doubling_does_not() {
        let radii = [0.2, 0.05, 0.0125];
        let rep = equicontinuity_probe(
            &dyadic(),
            &clamp01(),
            &s(0.5),
            &radii,
            10,
            200,
            3,
            4,
            &opts(),
        )
        .unwrap();
        assert!(rep.e_chain_trend, "{:?}", rep.modulus);
        for (e, r) in rep.modulus.iter().zip(radii) {
            assert!(*e <= r / 2.0 + 1e-12);
        }
        let dbl = Scale { factor: 2.0 };
        let rep = equicontinuity_probe(
            &dbl,
            &clamp01(),
            &s(0.0),
            &[0.1, 0.01, 0.001],
            20,
            2,
            4,
            4,
            &opts(),
        )
        .unwrap();
        assert!(!rep.e_chain_trend, "{:?}", rep.modulus);
        let grows = &rep.modulus_by_n[2];
        assert!(grows[0] < grows[19]);
        assert_eq!(rep.to_report("DOUBLING").verdict, Verdict::Fail);
    }

    #[test]
    fn equicontinuity_entries_bounded_and_stderr_shrinks() {
        let radii = [0.3, 0.1];
        let small = equicontinuity_probe(
            &dyadic(),
            &clamp01(),
            &s(0.2),
            &radii,
            4,
            100,
            1,
            9,
            &opts(),
        )
        .unwrap();
        let big = equicontinuity_probe(
            &dyadic(),
            &clamp01(),
            &s(0.2),
            &radii,
            4,
            1600,
            1,
            9,
            &opts(),
        )
        .unwrap();
        for e in small.entries.iter().chain(&big.entries) {
            assert!((0.0..=2.0).contains(&e.value));
        }
        let se = |r: &EquicontinuityReport| r.entries.iter().map(|e| e.stderr).sum::<f64>();
        let ratio = se(&small) / se(&big);
        assert!((2.0..8.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn tightness_identity_and_dyadic() {
        let id = Identity {
            space: Space::Real(1),
        };
        let r = tightness_probe(&id, &s(0.3), 0.1, 40, 100, None, 1, &opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.statistic.unwrap().estimate, 1.0);
        let r = tightness_probe(&dyadic(), &s(0.0), 0.1, 400, 200, None, 1, &opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.statistic);
    }

    #[test]
    fn tightness_shift_fails() {
        let r =
            tightness_probe(&Shift { by: 1.0 }, &s(0.0), 0.1, 100, 10, None, 1, &opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn support_examples() {
        let mu = EmpiricalMeasure::dirac(s(0.7));
        assert_eq!(
            support_estimate(&mu, 0.1, Metric::Sup).unwrap(),
            vec![s(0.7)]
        );
        let mu = EmpiricalMeasure::uniform(vec![s(0.0), s(0.4), s(1.0)]).unwrap();
        assert_eq!(
            support_estimate(&mu, 0.5, Metric::Sup).unwrap(),
            vec![s(0.0), s(1.0)]
        );
        let zero = EmpiricalMeasure::weighted(vec![(s(0.0), 1.0), (s(5.0), 0.0)]).unwrap();
        assert_eq!(
            support_estimate(&zero, 0.5, Metric::Sup).unwrap(),
            vec![s(0.0)]
        );
    }

    #[test]
    fn mixing_examples() {
        assert_eq!(mixing_bound_k(0.5, 1.0, 0.1).unwrap(), 13);
        assert_eq!(mixing_bound_k(1.0, 1.0, 2.0).unwrap(), 1);
        assert_eq!(mixing_bound_k(0.3, 1.0, 4.0).unwrap(), 0);
        assert!(mixing_bound_k(0.0, 1.0, 0.1).is_err());
        assert!(mixing_bound_k(0.5, 0.0, 0.1).is_err());
    }

    #[test]
    fn stability_identical_measures() {
        let mu = EmpiricalMeasure::uniform(vec![s(0.1), s(0.9)]).unwrap();
        let dict = TestFunctionDictionary::seeded(&[&mu], 16, 1, Metric::Sup).unwrap();
        let r = stability_probe(&dyadic(), &mu, &mu, 16, 50, &dict, 2).unwrap();
        assert!(r.series.iter().all(|p| p.estimate == 0.0));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn checkpoints() {
        assert_eq!(geometric_checkpoints(10), vec![0, 1, 2, 4, 8, 10]);
        assert_eq!(geometric_checkpoints(8), vec![0, 1, 2, 4, 8]);
    }
}
