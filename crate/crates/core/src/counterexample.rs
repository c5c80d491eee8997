//! A Feller chain on a closed subset of ℓ∞ that satisfies the ergodic
//! condition yet has no invariant probability measure.
//!
//! States are indices `(i, j, k)` of the sequences
//! `x(i,j,k) = (i, 0, …, 0, 2^{-k}, 2^{-k}, …)` with `j` zeros followed by a
//! constant tail. From `(i, j, k)` the chain moves to
//!
//! | target            | probability              |
//! |-------------------|--------------------------|
//! | `(1, j+1, 1)`     | `p₁(i, k)`               |
//! | `(i, j+1, k+1)`   | `p₂(k)`                  |
//! | `(i+1, j+1, k)`   | `1 − p₁(i, k) − p₂(k)`   |
//!
//! with `p₁(i, k) = 1 − p₂(k)` for `k < i!` and `p₁(i, k) = p₂(k)` otherwise.
//! `j` increases by one every step, which is why the Cesàro averages cannot be
//! tight. With `p₂(k) = k^{-4}` the cell `(i, k) = (1, 1)` carries mass 2, so
//! the default mode shifts the exponent base: `p₂(k) = (k + offset)^{-4}`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::diagnostics::{estimate_condition_e, DiagnosticOptions};
use crate::error::{Error, Result};
use crate::kernel::{ensemble, Kernel, Trajectory};
use crate::metric::{Level, MetricPoint, SeqState, Space};
use crate::report::{DiagnosticReport, SeriesPoint, Statistic, Threshold, Verdict};
use crate::rng::{derive_seed, RandomStream};
use crate::stats::ProbabilityEstimate;

/// Recorded in every report that measures distances between sequence states.
pub const TAIL_CONVENTION: &str =
    "tail convention: x(i,j,k) = (i, 0 x j, 2^-k, 2^-k, ...), a constant tail \
     after j zeros; x(i,j,inf) = (i, 0, 0, ...) for every j";

/// Closed-form ℓ∞ distance between `x(i₁,j₁,k₁)` and `x(i₂,j₂,k₂)`.
///
/// With `j₁ ≤ j₂`: `max(|i₁ − i₂|, [j₁ < j₂]·2^{-k₁}, |2^{-k₁} − 2^{-k₂}|)`.
pub fn seq_distance(s1: &SeqState, s2: &SeqState) -> f64 {
    let (a, b) = if s1.j <= s2.j { (s1, s2) } else { (s2, s1) };
    let ta = a.k.tail_value();
    let tb = b.k.tail_value();
    let di = a.i.abs_diff(b.i) as f64;
    let offset = if a.j < b.j { ta } else { 0.0 };
    di.max(offset).max((ta - tb).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Patched,
    Literal,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "patched" => Ok(Mode::Patched),
            "literal" => Ok(Mode::Literal),
            _ => Err(Error::param(format!(
                "unknown mode {s:?}; expected patched|literal"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Patched => "patched",
            Mode::Literal => "literal",
        })
    }
}

pub const DEFAULT_P2_OFFSET: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CExampleChain {
    mode: Mode,
    p2_offset: u64,
}

impl Default for CExampleChain {
    fn default() -> Self {
        Self::patched(DEFAULT_P2_OFFSET).expect("default offset is valid")
    }
}

/// `k < i!`, without overflowing.
fn below_factorial(k: u64, i: u64) -> bool {
    let mut fact: u64 = 1;
    for n in 2..=i {
        match fact.checked_mul(n) {
            Some(f) if f <= k => fact = f,
            _ => return true,
        }
    }
    k < fact
}

impl CExampleChain {
    pub fn patched(p2_offset: u64) -> Result<Self> {
        if p2_offset == 0 {
            return Err(Error::param(
                "patched mode needs p2 offset >= 1 (offset 0 is the literal mode)",
            ));
        }
        Ok(Self {
            mode: Mode::Patched,
            p2_offset,
        })
    }

    pub fn literal() -> Self {
        Self {
            mode: Mode::Literal,
            p2_offset: 0,
        }
    }

    pub fn new(mode: Mode, p2_offset: u64) -> Result<Self> {
        match mode {
            Mode::Patched => Self::patched(p2_offset),
            Mode::Literal => Ok(Self::literal()),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn p2_offset(&self) -> u64 {
        self.p2_offset
    }

    /// `p₂(k)`; zero at `k = ∞`.
    pub fn p2(&self, k: Level) -> f64 {
        match k {
            Level::Finite(k) => ((k + self.p2_offset) as f64).powi(-4),
            Level::Infinite => 0.0,
        }
    }

    /// `p₁(i, k)`; zero at `k = ∞`.
    pub fn p1(&self, i: u64, k: Level) -> f64 {
        match k {
            Level::Finite(kf) if below_factorial(kf, i) => 1.0 - self.p2(k),
            Level::Finite(_) => self.p2(k),
            Level::Infinite => 0.0,
        }
    }

    /// `(p₁, p₂, stay)` at `(i, k)`.
    pub fn branch_probabilities(&self, i: u64, k: Level) -> Result<[f64; 3]> {
        let p1 = self.p1(i, k);
        let p2 = self.p2(k);
        let mass = p1 + p2;
        if mass > 1.0 + 1e-15 {
            return Err(Error::InvalidCell {
                i,
                k: k.finite().unwrap_or(u64::MAX),
                mass,
            });
        }
        Ok([p1, p2, (1.0 - mass).max(0.0)])
    }

    /// Exact one-step law from `s` as three atoms (zero-mass branches kept).
    /// Also defined at `k = ∞`, where the chain deterministically moves to
    /// `(i+1, j+1, ∞)`.
    pub fn one_step_law(&self, s: &SeqState) -> Result<[(SeqState, f64); 3]> {
        let [p1, p2, stay] = self.branch_probabilities(s.i, s.k)?;
        let up = match s.k {
            Level::Finite(k) => Level::Finite(k + 1),
            Level::Infinite => Level::Infinite,
        };
        Ok([
            (
                SeqState {
                    i: 1,
                    j: s.j + 1,
                    k: Level::Finite(1),
                },
                p1,
            ),
            (
                SeqState {
                    i: s.i,
                    j: s.j + 1,
                    k: up,
                },
                p2,
            ),
            (
                SeqState {
                    i: s.i + 1,
                    j: s.j + 1,
                    k: s.k,
                },
                stay,
            ),
        ])
    }

    /// One transition using a single `(0,1]` draw against `(p₁, p₁+p₂)`,
    /// ties to the lower branch.
    pub fn ce_step(&self, s: &SeqState, rng: &mut RandomStream) -> Result<SeqState> {
        let k =
            s.k.finite()
                .ok_or_else(|| Error::InfiniteLevel(s.to_string()))?;
        let [p1, p2, stay] = self.branch_probabilities(s.i, s.k)?;
        let u = rng.uniform_open_closed();
        let second = if stay > 0.0 { p1 + p2 } else { 1.0 };
        Ok(if u <= p1 {
            SeqState {
                i: 1,
                j: s.j + 1,
                k: Level::Finite(1),
            }
        } else if u <= second {
            SeqState {
                i: s.i,
                j: s.j + 1,
                k: Level::Finite(k + 1),
            }
        } else {
            SeqState {
                i: s.i + 1,
                j: s.j + 1,
                k: s.k,
            }
        })
    }

    /// `θ·p₂(1)·…·p₂(k*)`: the lower bound on returns to `B(z, 2^{-k*})` given
    /// a uniform lower bound `θ` on visits to `U₀`.
    pub fn product_lower_bound(&self, theta: f64, k_star: u64) -> f64 {
        (1..=k_star).fold(theta, |acc, k| acc * self.p2(Level::Finite(k)))
    }
}

impl Kernel for CExampleChain {
    fn name(&self) -> &str {
        "COUNTEREXAMPLE"
    }

    fn space(&self) -> Space {
        Space::Seq
    }

    fn step(&self, x: &MetricPoint, rng: &mut RandomStream) -> Result<MetricPoint> {
        let s = x
            .as_seq()
            .ok_or_else(|| Error::SpaceMismatch(Space::Seq.to_string(), x.space().to_string()))?;
        self.ce_step(s, rng).map(MetricPoint::Seq)
    }
}

/// `U₀ = {x(1, j, 1)}`.
pub fn in_u0(s: &SeqState) -> bool {
    s.i == 1 && s.k == Level::Finite(1)
}

fn seq_states(t: &Trajectory) -> Result<Vec<&SeqState>> {
    t.states
        .iter()
        .map(|p| {
            p.as_seq()
                .ok_or_else(|| Error::SpaceMismatch(Space::Seq.to_string(), p.space().to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct U0Frequency {
    /// Hit frequency of `U₀` at steps `1..=n`.
    pub per_step: Vec<ProbabilityEstimate>,
    /// Running Cesàro average of `per_step`.
    pub cesaro: Vec<f64>,
    /// Infimum of `per_step` over steps `≥ burn_in`, with that step's interval.
    pub theta_hat: ProbabilityEstimate,
    pub theta_step: usize,
    pub burn_in: usize,
}

/// Per-step frequencies of `U₀` across an ensemble and the empirical `θ̂`.
pub fn u0_visit_frequency(
    trajectories: &[Trajectory],
    burn_in: usize,
    confidence: f64,
) -> Result<U0Frequency> {
    let first = trajectories.first().ok_or(Error::EmptyMeasure)?;
    let n = trajectories
        .iter()
        .map(|t| t.states.len())
        .min()
        .unwrap_or(0);
    if n == 0 {
        return Err(Error::param("trajectories are empty"));
    }
    if first.start.as_seq().and_then(|s| s.k.finite()).is_none() {
        return Err(Error::param(
            "u0_visit_frequency needs a sequence start with finite k",
        ));
    }
    let burn_in = burn_in.clamp(1, n);
    let m = trajectories.len() as u64;
    let mut counts = vec![0u64; n];
    for t in trajectories {
        for (step, s) in seq_states(t)?.into_iter().take(n).enumerate() {
            if in_u0(s) {
                counts[step] += 1;
            }
        }
    }
    let per_step = counts
        .iter()
        .map(|c| ProbabilityEstimate::wilson(*c, m, confidence))
        .collect::<Result<Vec<_>>>()?;
    let mut cesaro = Vec::with_capacity(n);
    let mut acc = 0.0;
    for (step, p) in per_step.iter().enumerate() {
        acc += p.p_hat;
        cesaro.push(acc / (step + 1) as f64);
    }
    let (idx, theta_hat) = per_step
        .iter()
        .enumerate()
        .skip(burn_in - 1)
        .min_by(|a, b| a.1.p_hat.total_cmp(&b.1.p_hat))
        .map(|(i, p)| (i, *p))
        .expect("nonempty window");
    Ok(U0Frequency {
        per_step,
        cesaro,
        theta_hat,
        theta_step: idx + 1,
        burn_in,
    })
}

/// Checks `j_n = j₀ + n` on every trajectory and tracks the Cesàro mass of the
/// first `j_window` levels above the start, `{j ≤ j₀ + j_window}`, which is
/// exactly `min(1, j_window/n)`.
pub fn escape_statistics(trajectories: &[Trajectory], j_window: u64) -> Result<DiagnosticReport> {
    let n = trajectories
        .iter()
        .map(|t| t.states.len())
        .min()
        .ok_or(Error::EmptyMeasure)?;
    let m = trajectories.len();
    let mut report = DiagnosticReport::new("escape_statistics")
        .input("trajectories", m)
        .input("horizon", n)
        .input("j_window", j_window);
    let mut j_violations = 0usize;
    let mut in_window = vec![0u64; n];
    for t in trajectories {
        let j0 = t
            .start
            .as_seq()
            .ok_or_else(|| {
                Error::SpaceMismatch(Space::Seq.to_string(), t.start.space().to_string())
            })?
            .j;
        for (step, s) in seq_states(t)?.into_iter().take(n).enumerate() {
            let expected = j0 + step as u64 + 1;
            if s.j != expected {
                j_violations += 1;
                if report.witnesses.len() < 16 {
                    report.witness("j increment", json!({"stream": t.stream_id, "step": step + 1, "j": s.j, "expected": expected}));
                }
            }
            if s.j <= j0 + j_window {
                in_window[step] += 1;
            }
        }
    }
    let mut cumulative = 0u64;
    for (step, c) in in_window.iter().enumerate() {
        cumulative += c;
        let mass = cumulative as f64 / ((step + 1) * m) as f64;
        report
            .series
            .push(SeriesPoint::exact(step as u64 + 1, mass));
    }
    let final_mass = report.series.last().map_or(1.0, |p| p.estimate);
    report.statistic = Some(Statistic::exact(final_mass));
    report.threshold = Some(Threshold::new("<", 1.0));
    report.verdict = if j_violations > 0 {
        Verdict::Fail
    } else if final_mass < 1.0 {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    report.note("window is relative to the start level: {j <= j0 + j_window}");
    report.note(TAIL_CONVENTION);
    report.note(
        "every compact set meets finitely many j-levels (distinct U0 points are 1/2 apart), \
         so Cesàro mass on any fixed window decays like j_window/n",
    );
    report.details = json!({"j_increment_violations": j_violations});
    Ok(report)
}

/// Pilot trajectories used to estimate `θ̂` for the product lower bound.
const THETA_PILOT: usize = 1000;

/// Running Cesàro averages of hits of `B(z, radius)` with `z = x(1, 1, ∞)`; a hit
/// means `i = 1` and `2^{-k} < radius`. Compared against `θ̂·p₂(1)…p₂(k*)`, where
/// `k*` is the largest level with `2^{-k*} ≥ radius` and `θ̂` is the measured
/// frequency of `U₀` (minimum over the final quarter of a pilot run).
pub fn z_return_probe(
    chain: &CExampleChain,
    start: &SeqState,
    radius: f64,
    n: usize,
    m: usize,
    seed: u64,
    opts: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let x = MetricPoint::Seq(*start);
    let z = MetricPoint::Seq(SeqState::z());
    let mut report = estimate_condition_e(chain, &x, &z, radius, n, m, seed, opts)?;
    report.condition_name = "z_return_probe".to_string();
    report.set_input("mode", chain.mode());
    report.set_input("p2_offset", chain.p2_offset());
    report.set_input("radius", radius);

    let k_star = (0u64..)
        .take_while(|k| *k < 1075 && Level::Finite(k + 1).tail_value() >= radius)
        .last()
        .map_or(0, |k| k + 1);
    let pilot = ensemble(
        chain,
        &x,
        n,
        m.min(THETA_PILOT),
        derive_seed(seed, "z_return_theta", 0),
    )?;
    let freq = u0_visit_frequency(&pilot, 3 * n / 4 + 1, opts.confidence)?;
    let product: f64 = chain.product_lower_bound(1.0, k_star);
    let bound = chain.product_lower_bound(freq.theta_hat.p_hat, k_star);
    report.note(TAIL_CONVENTION);
    report.note(format!(
        "product lower bound theta_hat * p2(1)...p2({k_star}) = {bound:e} with theta_hat = {} (pilot of {} trajectories)",
        freq.theta_hat.p_hat,
        pilot.len()
    ));
    if let serde_json::Value::Object(map) = &mut report.details {
        map.insert("k_star".into(), json!(k_star));
        map.insert("p2_product".into(), json!(product));
        map.insert("theta_hat".into(), json!(freq.theta_hat));
        map.insert("product_lower_bound".into(), json!(bound));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::ensemble;
    use crate::metric::{Metric, TestFunction};
    use proptest::prelude::*;

    fn st(i: u64, j: u64, k: u64) -> SeqState {
        SeqState::new(i, j, k).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(seq_distance(&st(1, 2, 3), &st(1, 2, 3)), 0.0);
        for j in 1..50 {
            for k in 1..40 {
                assert_eq!(
                    seq_distance(&st(1, j, k), &SeqState::z()),
                    2f64.powi(-(k as i32))
                );
            }
        }
        assert_eq!(seq_distance(&st(1, 3, 1), &st(1, 7, 1)), 0.5);
        assert_eq!(seq_distance(&st(4, 3, 2), &st(1, 3, 2)), 3.0);
    }

    /// Brute force on a truncated coordinate vector, long enough to reach the tail.
    fn embed(s: &SeqState, len: usize) -> Vec<f64> {
        let mut v = vec![s.i as f64];
        for pos in 1..len {
            v.push(if (pos as u64) <= s.j {
                0.0
            } else {
                s.k.tail_value()
            });
        }
        v
    }

    fn level() -> impl Strategy<Value = Level> {
        prop_oneof![9 => (1u64..12).prop_map(Level::Finite), 1 => Just(Level::Infinite)]
    }

    fn state() -> impl Strategy<Value = SeqState> {
        (1u64..6, 1u64..20, level()).prop_map(|(i, j, k)| SeqState { i, j, k })
    }

    proptest! {
        #[test]
        fn closed_form_matches_embedding(a in state(), b in state()) {
            let va = embed(&a, 32);
            let vb = embed(&b, 32);
            let brute = va.iter().zip(&vb).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            prop_assert_eq!(seq_distance(&a, &b), brute);
        }

        #[test]
        fn metric_axioms(a in state(), b in state(), c in state()) {
            prop_assert_eq!(seq_distance(&a, &a), 0.0);
            prop_assert_eq!(seq_distance(&a, &b), seq_distance(&b, &a));
            prop_assert!(seq_distance(&a, &c) <= seq_distance(&a, &b) + seq_distance(&b, &c) + 1e-12);
            prop_assert_eq!(seq_distance(&a, &b) == 0.0, a.same_point(&b));
        }
    }

    #[test]
    fn branch_examples() {
        let c = CExampleChain::default();
        let [p1, p2, stay] = c.branch_probabilities(2, Level::Finite(3)).unwrap();
        assert_eq!((p1, p2, stay), (1.0 / 256.0, 1.0 / 256.0, 127.0 / 128.0));
        let [p1, p2, stay] = c.branch_probabilities(3, Level::Finite(2)).unwrap();
        assert!((p1 - 80.0 / 81.0).abs() < 1e-15);
        assert!((p2 - 1.0 / 81.0).abs() < 1e-15);
        assert!(stay.abs() < 1e-15);
    }

    #[test]
    fn patched_branches_are_stochastic() {
        let c = CExampleChain::default();
        for i in 1..=20 {
            for k in 1..=64 {
                let p = c.branch_probabilities(i, Level::Finite(k)).unwrap();
                assert!(p.iter().all(|v| (0.0..=1.0).contains(v)), "({i},{k}) {p:?}");
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(p[0] > 0.0);
            }
        }
    }

    #[test]
    fn literal_mode_invalid_only_at_one_one() {
        let c = CExampleChain::literal();
        assert!(matches!(
            c.branch_probabilities(1, Level::Finite(1)),
            Err(Error::InvalidCell { i: 1, k: 1, .. })
        ));
        assert!(c.branch_probabilities(2, Level::Finite(1)).is_ok());
        assert!(c.branch_probabilities(1, Level::Finite(2)).is_ok());
        let err = c
            .ce_step(&st(1, 1, 1), &mut RandomStream::new(0, 0))
            .unwrap_err();
        assert!(err.to_string().contains("parameters invalid at (1,1)"));
        assert!(CExampleChain::patched(0).is_err());
    }

    #[test]
    fn j_always_increments() {
        let c = CExampleChain::default();
        let mut rng = RandomStream::new(4, 4);
        let mut s = st(1, 1, 1);
        for _ in 0..5000 {
            let t = c.ce_step(&s, &mut rng).unwrap();
            assert_eq!(t.j, s.j + 1);
            s = t;
        }
        for law in [
            c.one_step_law(&st(3, 5, 2)).unwrap(),
            c.one_step_law(&st(1, 5, 9)).unwrap(),
        ] {
            assert!(law.iter().all(|(t, _)| t.j == 6));
        }
    }

    #[test]
    fn infinite_level_is_not_a_start() {
        let c = CExampleChain::default();
        let s = SeqState::with_level(2, 1, Level::Infinite).unwrap();
        assert!(matches!(
            c.ce_step(&s, &mut RandomStream::new(0, 0)),
            Err(Error::InfiniteLevel(_))
        ));
        let law = c.one_step_law(&s).unwrap();
        assert_eq!(
            law[2],
            (SeqState::with_level(3, 2, Level::Infinite).unwrap(), 1.0)
        );
    }

    #[test]
    fn below_factorial_cases() {
        assert!(!below_factorial(1, 1));
        assert!(below_factorial(1, 2));
        assert!(!below_factorial(2, 2));
        assert!(below_factorial(5, 3));
        assert!(!below_factorial(6, 3));
        assert!(below_factorial(u64::MAX, 30));
    }

    #[test]
    fn feller_probe_with_exact_law() {
        // x_n = x(i,1,k_n) → x(i,1,∞); P f(x_n) → P f(x(i,1,∞)) for Lipschitz f.
        let c = CExampleChain::default();
        let fs: Vec<TestFunction> = [st(3, 2, 1), st(1, 2, 1), st(3, 2, 4)]
            .into_iter()
            .map(|center| TestFunction::bump(MetricPoint::Seq(center), 0.75, Metric::Sup).unwrap())
            .collect();
        let pf = |s: &SeqState, f: &TestFunction| -> f64 {
            c.one_step_law(s)
                .unwrap()
                .iter()
                .map(|(t, w)| w * f.eval(&MetricPoint::Seq(*t)))
                .sum()
        };
        for i in 1..4u64 {
            let limit = SeqState::with_level(i, 1, Level::Infinite).unwrap();
            for f in &fs {
                let mut prev = f64::INFINITY;
                for k in [4u64, 8, 16, 32, 60] {
                    let gap = (pf(&st(i, 1, k), f) - pf(&limit, f)).abs();
                    assert!(gap <= prev + 1e-15, "i={i} k={k}");
                    prev = gap;
                }
                // branch masses decay like (k+1)^-4, so the gap does too
                assert!(prev < 4.0 * 61f64.powi(-4), "i={i} gap={prev}");
            }
        }
    }

    #[test]
    fn u0_frequency_examples() {
        let c = CExampleChain::default();
        let start = MetricPoint::Seq(st(1, 1, 1));
        let tr = ensemble(&c, &start, 400, 1000, 8).unwrap();
        let f = u0_visit_frequency(&tr, 100, 0.95).unwrap();
        assert!(f.theta_hat.ci_low > 0.0, "{:?}", f.theta_hat);
        assert_eq!(f.cesaro.len(), 400);

        // A start that never enters U₀ within one step.
        let away = vec![Trajectory {
            start: MetricPoint::Seq(st(5, 1, 200)),
            states: vec![MetricPoint::Seq(st(6, 2, 200))],
            stream_id: 0,
        }];
        assert_eq!(
            u0_visit_frequency(&away, 1, 0.95).unwrap().theta_hat.p_hat,
            0.0
        );
    }

    #[test]
    fn escape_examples() {
        let c = CExampleChain::default();
        let tr = ensemble(&c, &MetricPoint::Seq(st(1, 1, 1)), 1000, 20, 3).unwrap();
        let rep = escape_statistics(&tr, 100).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        for p in &rep.series {
            assert_eq!(p.estimate, (p.n.min(100)) as f64 / p.n as f64);
        }
        assert_eq!(rep.series[999].estimate, 100.0 / 1000.0);
    }

    #[test]
    fn product_bound() {
        let c = CExampleChain::default();
        let b = c.product_lower_bound(0.5, 3);
        assert!((b - 0.5 / 16.0 / 81.0 / 256.0).abs() < 1e-18);
    }

    #[test]
    fn z_return_wide_ball_counts_u0_visits() {
        let c = CExampleChain::default();
        let opts = DiagnosticOptions::default();
        let r = z_return_probe(&c, &st(1, 1, 1), 0.75, 200, 400, 5, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let theta = r.details["theta_hat"]["p_hat"].as_f64().unwrap();
        assert_eq!(r.details["k_star"], 0);
        let stat = r.statistic.unwrap();
        assert!(stat.ci_high >= theta - 0.05, "{stat:?} vs {theta}");
        assert!(r.notes.iter().any(|n| n.starts_with("tail convention")));
    }

    #[test]
    fn z_return_small_ball_needs_deep_levels() {
        let c = CExampleChain::default();
        let opts = DiagnosticOptions::default();
        let r = z_return_probe(&c, &st(1, 1, 1), 0.25, 400, 2000, 6, &opts).unwrap();
        assert_eq!(r.details["k_star"], 2);
        assert!(r.statistic.unwrap().estimate > 0.0);
        let bound = r.details["product_lower_bound"].as_f64().unwrap();
        assert!(
            (bound - r.details["theta_hat"]["p_hat"].as_f64().unwrap() / (16.0 * 81.0)).abs()
                < 1e-15
        );
        assert!(z_return_probe(&c, &st(1, 1, 1), 0.0, 10, 10, 0, &opts).is_err());
    }

    #[test]
    fn z_return_half_ensembles_agree() {
        let c = CExampleChain::default();
        let opts = DiagnosticOptions::default();
        let a = z_return_probe(&c, &st(1, 1, 1), 0.75, 100, 500, 11, &opts)
            .unwrap()
            .statistic
            .unwrap();
        let b = z_return_probe(&c, &st(1, 1, 1), 0.75, 100, 500, 12, &opts)
            .unwrap()
            .statistic
            .unwrap();
        assert!(a.ci_low.min(b.ci_low) <= a.ci_high.min(b.ci_high));
        assert!((a.estimate - b.estimate).abs() <= (a.ci_high - a.ci_low) + (b.ci_high - b.ci_low));
    }
}
