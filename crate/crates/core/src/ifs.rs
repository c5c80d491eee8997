//! Iterated function systems driven by a semigroup between exponential jumps.
//!
//! Between jumps the state flows along `S(t)`; jump times are exponential with
//! rate `γ`; at a jump, map `w_i` is applied with place-dependent probability
//! `p_i` evaluated at the pre-jump point. The chain observed at jump times has
//! kernel
//!
//! ```text
//! P(x, A) = Σ_i ∫_0^∞ γ e^{-γt} p_i(S(t)x) 1_A(w_i(S(t)x)) dt
//! ```
//!
//! and is what [`IfsJumpProcess`] simulates. Maps are affine and the semigroup
//! is either the identity or an exponential flow toward (or away from) a centre.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metric::{Metric, MetricPoint, Space};
use crate::report::{DiagnosticReport, Statistic, Threshold, Verdict};
use crate::rng::RandomStream;

const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Semigroup {
    Identity,
    /// `S(t)x = c + e^{-rate·t}(x − c)`; a negative rate expands.
    ExpDecay {
        rate: f64,
        center: Vec<f64>,
    },
}

impl Semigroup {
    pub fn apply(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match self {
            Semigroup::Identity => x.to_vec(),
            Semigroup::ExpDecay { rate, center } => {
                let f = (-rate * t).exp();
                x.iter()
                    .zip(center)
                    .map(|(xi, ci)| ci + f * (xi - ci))
                    .collect()
            }
        }
    }

    /// `lim_{t→∞} S(t)x`, if it exists.
    pub fn limit(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            Semigroup::Identity => Some(x.to_vec()),
            Semigroup::ExpDecay { rate, center } if *rate > 0.0 => Some(center.clone()),
            Semigroup::ExpDecay { rate, .. } if *rate == 0.0 => Some(x.to_vec()),
            Semigroup::ExpDecay { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// Row-major `d × d` matrix.
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Self {
        Self { matrix, offset }
    }

    pub fn scaled_identity(dim: usize, scale: f64, offset: Vec<f64>) -> Self {
        let matrix = (0..dim)
            .map(|r| (0..dim).map(|c| if r == c { scale } else { 0.0 }).collect())
            .collect();
        Self { matrix, offset }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| row.iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>() + b)
            .collect()
    }

    fn check(&self, dim: usize) -> Result<()> {
        if self.offset.len() != dim {
            return Err(Error::DimensionMismatch(self.offset.len(), dim));
        }
        if self.matrix.len() != dim || self.matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::param(format!(
                "affine map matrix must be {dim}x{dim}"
            )));
        }
        if self
            .matrix
            .iter()
            .flatten()
            .chain(&self.offset)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbFn {
    Constant {
        value: f64,
    },
    /// `clamp(bias + weights·x, lo, hi)`.
    ClampedAffine {
        bias: f64,
        weights: Vec<f64>,
        lo: f64,
        hi: f64,
    },
}

impl ProbFn {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ProbFn::Constant { value } => *value,
            ProbFn::ClampedAffine {
                bias,
                weights,
                lo,
                hi,
            } => (bias + weights.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()).clamp(*lo, *hi),
        }
    }
}

/// Constants the user asserts for the process: contraction `r`, probability
/// Lipschitz sum `a`, semigroup expansivity `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclaredConstants {
    pub r: f64,
    pub a: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsJumpProcess {
    pub name: String,
    pub dim: usize,
    pub semigroup: Semigroup,
    pub maps: Vec<AffineMap>,
    pub probs: Vec<ProbFn>,
    pub gamma: f64,
    pub declared: DeclaredConstants,
}

impl IfsJumpProcess {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        semigroup: Semigroup,
        maps: Vec<AffineMap>,
        probs: Vec<ProbFn>,
        gamma: f64,
        declared: DeclaredConstants,
    ) -> Result<Self> {
        let p = Self {
            name: name.into(),
            dim,
            semigroup,
            maps,
            probs,
            gamma,
            declared,
        };
        p.check()?;
        Ok(p)
    }

    /// Structural validation (used after deserializing user definitions too).
    pub fn check(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        if self.maps.is_empty() {
            return Err(Error::param("an IFS needs at least one map"));
        }
        if self.maps.len() != self.probs.len() {
            return Err(Error::param(format!(
                "{} maps but {} probability functions",
                self.maps.len(),
                self.probs.len()
            )));
        }
        for m in &self.maps {
            m.check(self.dim)?;
        }
        for p in &self.probs {
            if let ProbFn::ClampedAffine { weights, .. } = p {
                if weights.len() != self.dim {
                    return Err(Error::DimensionMismatch(weights.len(), self.dim));
                }
            }
        }
        if let Semigroup::ExpDecay { rate, center } = &self.semigroup {
            if center.len() != self.dim {
                return Err(Error::DimensionMismatch(center.len(), self.dim));
            }
            if !rate.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::param(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        let DeclaredConstants { r, a, kappa } = self.declared;
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::param(format!(
                "declared r must lie in (0,1), got {r}"
            )));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::param(format!(
                "declared a must be nonnegative, got {a}"
            )));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::param(format!(
                "declared kappa must be nonnegative, got {kappa}"
            )));
        }
        Ok(())
    }

    pub fn n_maps(&self) -> usize {
        self.maps.len()
    }

    /// Selection probabilities at `x`, validated to be a probability vector.
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p: Vec<f64> = self.probs.iter().map(|f| f.eval(x)).collect();
        let sum: f64 = p.iter().sum();
        if p.iter().any(|v| v.is_nan() || *v < 0.0) || (sum - 1.0).abs() > REL_TOL {
            return Err(Error::ProbabilityVector {
                at: MetricPoint::Real(x.to_vec()),
                sum,
            });
        }
        Ok(p)
    }

    /// One jump: `t = −ln(u₁)/γ`, `ξ = S(t)x`, pick `i` with `u₂` against the
    /// cumulative probabilities at `ξ` (ties to the lower index), return `w_i(ξ)`.
    pub fn jump_step(&self, x: &MetricPoint, rng: &mut RandomStream) -> Result<MetricPoint> {
        let coords = x.as_real().filter(|c| c.len() == self.dim).ok_or_else(|| {
            Error::SpaceMismatch(Space::Real(self.dim).to_string(), x.space().to_string())
        })?;
        let t = -rng.uniform_open_closed().ln() / self.gamma;
        let u = rng.uniform_open_closed();
        let xi = self.semigroup.apply(t, coords);
        let p = self.probabilities(&xi)?;
        let mut cum = 0.0;
        let mut chosen = None;
        for (i, pi) in p.iter().enumerate() {
            cum += pi;
            if *pi > 0.0 && u <= cum {
                chosen = Some(i);
                break;
            }
        }
        // Rounding can leave `cum` a hair below 1.
        let i = chosen
            .or_else(|| p.iter().rposition(|v| *v > 0.0))
            .expect("probability vector has a positive entry");
        MetricPoint::real(self.maps[i].apply(&xi))
    }

    /// Numerical check of the declared constants on sample pairs and times.
    pub fn validate_params(
        &self,
        pairs: &[(MetricPoint, MetricPoint)],
        ts: &[f64],
    ) -> Result<DiagnosticReport> {
        validate_params(self, pairs, ts)
    }
}

impl Kernel for IfsJumpProcess {
    fn name(&self) -> &str {
        &self.name
    }

    fn space(&self) -> Space {
        Space::Real(self.dim)
    }

    fn step(&self, x: &MetricPoint, rng: &mut RandomStream) -> Result<MetricPoint> {
        self.jump_step(x, rng)
    }
}

fn sup(x: &[f64], y: &[f64]) -> f64 {
    Metric::Sup.real_distance(x, y)
}

/// Checks the contraction-on-average, probability-Lipschitz and semigroup
/// expansivity inequalities on every supplied pair (and pair × time), plus the
/// exact condition `r + κ/γ < 1` on the declared constants. Violations become
/// witnesses; the verdict is PASS only when nothing is violated.
pub fn validate_params(
    proc: &IfsJumpProcess,
    pairs: &[(MetricPoint, MetricPoint)],
    ts: &[f64],
) -> Result<DiagnosticReport> {
    let DeclaredConstants { r, a, kappa } = proc.declared;
    let mut report = DiagnosticReport::new("validate_params")
        .input("kernel", &proc.name)
        .input("declared", proc.declared)
        .input("gamma", proc.gamma)
        .input("pairs", pairs.len())
        .input("ts", ts);
    let mut violations = 0usize;
    let mut r_hat: f64 = 0.0;
    let mut a_hat: f64 = 0.0;
    let mut kappa_hat: f64 = 0.0;
    for (x, y) in pairs {
        let (xs, ys) = match (x.as_real(), y.as_real()) {
            (Some(xs), Some(ys)) if xs.len() == proc.dim && ys.len() == proc.dim => (xs, ys),
            _ => {
                return Err(Error::SpaceMismatch(
                    Space::Real(proc.dim).to_string(),
                    x.space().to_string(),
                ))
            }
        };
        let d = sup(xs, ys);
        if d == 0.0 {
            continue;
        }
        for (u, v) in [(xs, ys), (ys, xs)] {
            let pu = proc.probabilities(u)?;
            let lhs: f64 = pu
                .iter()
                .zip(&proc.maps)
                .map(|(p, w)| p * sup(&w.apply(u), &w.apply(v)))
                .sum();
            r_hat = r_hat.max(lhs / d);
            if lhs > r * d * (1.0 + REL_TOL) {
                violations += 1;
                report.witness(
                    "contraction on average",
                    json!({"x": MetricPoint::Real(u.to_vec()), "y": MetricPoint::Real(v.to_vec()), "lhs": lhs, "rhs": r * d}),
                );
            }
        }
        let pv = proc.probabilities(ys)?;
        let lhs: f64 = proc
            .probabilities(xs)?
            .iter()
            .zip(&pv)
            .map(|(p, q)| (p - q).abs())
            .sum();
        a_hat = a_hat.max(lhs / d);
        if lhs > a * d * (1.0 + REL_TOL) {
            violations += 1;
            report.witness(
                "probability Lipschitz sum",
                json!({"x": x, "y": y, "lhs": lhs, "rhs": a * d}),
            );
        }
        for &t in ts {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::param(format!(
                    "semigroup times must be nonnegative, got {t}"
                )));
            }
            let ds = sup(&proc.semigroup.apply(t, xs), &proc.semigroup.apply(t, ys));
            let rhs = (kappa * t).exp() * d;
            if t > 0.0 {
                kappa_hat = kappa_hat.max((ds / d).ln() / t);
            }
            if ds > rhs * (1.0 + REL_TOL) {
                violations += 1;
                report.witness(
                    "semigroup expansivity",
                    json!({"x": x, "y": y, "t": t, "lhs": ds, "rhs": rhs}),
                );
            }
        }
    }
    let margin = 1.0 - r - kappa / proc.gamma;
    if margin <= 0.0 {
        violations += 1;
        report.witness(
            "r + kappa/gamma < 1",
            json!({"r": r, "kappa": kappa, "gamma": proc.gamma, "margin": margin}),
        );
    }
    report.statistic = Some(Statistic::exact(margin));
    report.threshold = Some(Threshold::new(">", 0.0));
    report.verdict = if violations == 0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    report.details = json!({
        "violations": violations,
        "observed_r_lower_bound": r_hat,
        "observed_a_lower_bound": a_hat,
        "observed_kappa_lower_bound": kappa_hat,
        "margin_r_plus_kappa_over_gamma": margin,
    });
    Ok(report)
}

/// Least `L` with `(L·r + a)·γ/(γ − κ) ≤ L`, i.e. `L* = aγ / (γ(1 − r) − κ)`.
pub fn lipschitz_bound_l(r: f64, a: f64, gamma: f64, kappa: f64) -> Result<f64> {
    let lhs = gamma * (1.0 - r);
    if lhs.is_nan() || lhs <= kappa {
        return Err(Error::NoLipschitzConstant { lhs, kappa });
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(a * gamma / (lhs - kappa))
}

/// The constant `aγ(κ − γ(1 + r))^{-1}` exactly as it is printed in the
/// equicontinuity argument; negative whenever `r + κ/γ < 1` and `a > 0`.
pub fn printed_lipschitz_constant(r: f64, a: f64, gamma: f64, kappa: f64) -> f64 {
    a * gamma / (kappa - gamma * (1.0 + r))
}

pub fn lipschitz_report(r: f64, a: f64, gamma: f64, kappa: f64) -> Result<DiagnosticReport> {
    let l_star = lipschitz_bound_l(r, a, gamma, kappa)?;
    let printed = printed_lipschitz_constant(r, a, gamma, kappa);
    let residual = if l_star == 0.0 {
        0.0
    } else {
        (l_star * r + a) * gamma / (gamma - kappa) - l_star
    };
    let mut report = DiagnosticReport::new("lipschitz_bound_L")
        .input("r", r)
        .input("a", a)
        .input("gamma", gamma)
        .input("kappa", kappa);
    report.statistic = Some(Statistic::exact(l_star));
    report.verdict = Verdict::Pass;
    report.note(format!(
        "L* = a*gamma/(gamma*(1-r)-kappa) = {l_star} is the least L with (L*r+a)*gamma/(gamma-kappa) <= L \
         (fixed-point residual {residual:e})"
    ));
    report.note(format!(
        "sign discrepancy: the printed constant a*gamma*(kappa-gamma*(1+r))^-1 evaluates to {printed}, \
         which is {} under r + kappa/gamma < 1; L* is used instead",
        if printed < 0.0 { "negative" } else { "nonnegative" }
    ));
    report.details =
        json!({"l_star": l_star, "printed_constant": printed, "fixed_point_residual": residual});
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftCoefficients {
    pub lambda0: f64,
    pub b: f64,
    /// `λ₀ < 1`, equivalent to `r + κ/γ < 1`.
    pub contracts: bool,
}

/// `λ₀ = rγ/(γ − κ)` and `b = N·b̃` from the drift bound `PV ≤ λ₀V + N b̃`.
pub fn drift_coefficients(
    r: f64,
    gamma: f64,
    kappa: f64,
    n_maps: usize,
    b_tilde: f64,
) -> Result<DriftCoefficients> {
    if gamma.is_nan() || gamma <= kappa {
        return Err(Error::param(format!(
            "drift coefficients need gamma > kappa (gamma={gamma}, kappa={kappa})"
        )));
    }
    let lambda0 = r * gamma / (gamma - kappa);
    Ok(DriftCoefficients {
        lambda0,
        b: n_maps as f64 * b_tilde,
        contracts: lambda0 < 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BTildeEstimate {
    /// `None` when the semigroup orbit of `x₀` diverges.
    pub value: Option<f64>,
    pub t_max: f64,
    pub grid_points: usize,
    pub includes_limit: bool,
}

const B_TILDE_GRID: usize = 200;

/// Estimate of `b̃ = sup_{t ≥ 0, i} ρ(w_i(S(t)x₀), x₀)` on a geometric time grid
/// in `[t_max·2^{-20}, t_max]` plus `t = 0` and the `t → ∞` limit point.
pub fn estimate_b_tilde(
    proc: &IfsJumpProcess,
    x0: &[f64],
    t_max: Option<f64>,
) -> Result<BTildeEstimate> {
    if x0.len() != proc.dim {
        return Err(Error::DimensionMismatch(x0.len(), proc.dim));
    }
    let t_max = t_max.unwrap_or(50.0 / proc.gamma);
    let ratio = 2f64.powf(-20.0 / (B_TILDE_GRID - 1) as f64);
    let mut times = vec![0.0];
    let mut t = t_max;
    for _ in 0..B_TILDE_GRID {
        times.push(t);
        t *= ratio;
    }
    let limit = proc.semigroup.limit(x0);
    let mut states: Vec<Vec<f64>> = times.iter().map(|t| proc.semigroup.apply(*t, x0)).collect();
    let includes_limit = limit.is_some();
    match limit {
        Some(l) => states.push(l),
        None => {
            return Ok(BTildeEstimate {
                value: None,
                t_max,
                grid_points: times.len(),
                includes_limit,
            })
        }
    }
    let value = states
        .iter()
        .flat_map(|s| proc.maps.iter().map(move |w| sup(&w.apply(s), x0)))
        .fold(0.0, f64::max);
    Ok(BTildeEstimate {
        value: Some(value),
        t_max,
        grid_points: times.len() + 1,
        includes_limit,
    })
}

/// A Lyapunov function `V`.
#[derive(Clone)]
pub struct LyapunovFn {
    f: Arc<dyn Fn(&MetricPoint) -> f64 + Send + Sync>,
    description: String,
}

impl LyapunovFn {
    pub fn new(
        description: impl Into<String>,
        f: impl Fn(&MetricPoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            description: description.into(),
        }
    }

    /// `V(x) = ρ(x, x₀)`.
    pub fn distance_from(x0: MetricPoint, metric: Metric) -> Self {
        let description = format!("distance to {x0}");
        Self::new(description, move |x| metric.dist_unchecked(x, &x0))
    }

    pub fn eval(&self, x: &MetricPoint) -> f64 {
        (self.f)(x)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

impl fmt::Debug for LyapunovFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.description)
    }
}

/// `PV(x) ≤ λV(x) + b·1_{B(x₀,R)}(x)` with `λ ∈ (0, 1)`.
#[derive(Debug, Clone)]
pub struct LyapunovCertificate {
    pub v: LyapunovFn,
    pub lambda: f64,
    pub b: f64,
    pub radius: f64,
    pub x0: MetricPoint,
}

impl LyapunovCertificate {
    pub fn new(v: LyapunovFn, lambda: f64, b: f64, radius: f64, x0: MetricPoint) -> Result<Self> {
        let c = Self {
            v,
            lambda,
            b,
            radius,
            x0,
        };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::param(format!(
                "certificate lambda must lie in (0,1), got {}",
                self.lambda
            )));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::param(format!(
                "certificate b must be nonnegative, got {}",
                self.b
            )));
        }
        if self.radius.is_nan() || self.radius <= 0.0 {
            return Err(Error::param(format!(
                "certificate R must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Certificate with `V = ρ(·, x₀)` built from a global bound `PV ≤ λ₀V + b`:
    /// for `λ ∈ (λ₀, 1)` the constant part is absorbed outside `B(x₀, R)` with
    /// `R = b/(λ − λ₀)`.
    pub fn from_drift(
        x0: MetricPoint,
        coeffs: DriftCoefficients,
        lambda: f64,
        metric: Metric,
    ) -> Result<Self> {
        if !(lambda > coeffs.lambda0 && lambda < 1.0) {
            return Err(Error::param(format!(
                "lambda must lie in (lambda0, 1) = ({}, 1), got {lambda}",
                coeffs.lambda0
            )));
        }
        let radius = if coeffs.b > 0.0 {
            coeffs.b / (lambda - coeffs.lambda0)
        } else {
            1.0
        };
        Self::new(
            LyapunovFn::distance_from(x0.clone(), metric),
            lambda,
            coeffs.b,
            radius,
            x0,
        )
    }

    /// The right-hand side `λV(x) + b·1[ρ(x, x₀) < R]`.
    pub fn bound(&self, x: &MetricPoint, metric: Metric) -> f64 {
        let inside = metric.dist_unchecked(x, &self.x0) < self.radius;
        self.lambda * self.v.eval(x) + if inside { self.b } else { 0.0 }
    }
}

/// Built-in process fixtures.
pub fn builtin_processes() -> Vec<IfsJumpProcess> {
    vec![dyadic(), decay2d(), point(0.5)]
}

pub fn builtin_process(name: &str) -> Option<IfsJumpProcess> {
    builtin_processes()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
}

/// `x/2` and `x/2 + ½` with probability ½ each; invariant law uniform on `[0,1]`.
pub fn dyadic() -> IfsJumpProcess {
    IfsJumpProcess::new(
        "DYADIC",
        1,
        Semigroup::Identity,
        vec![
            AffineMap::scaled_identity(1, 0.5, vec![0.0]),
            AffineMap::scaled_identity(1, 0.5, vec![0.5]),
        ],
        vec![
            ProbFn::Constant { value: 0.5 },
            ProbFn::Constant { value: 0.5 },
        ],
        1.0,
        DeclaredConstants {
            r: 0.5,
            a: 0.0,
            kappa: 0.0,
        },
    )
    .expect("DYADIC is well formed")
}

/// Planar process: flow `e^{-t}x`, jump rate 2, three maps `x/2 + o_i` with
/// `o ∈ {(0,0), (⅔,0), (0,⅔)}` and probabilities `⅓ ± 0.1·clamp(x₁,−1,1)`, `⅓`.
/// Declared constants `r = ½`, `a = 0.2`, `κ = ½` give `λ₀ = ⅔` and, with
/// `b̃ = ⅔` at `x₀ = 0`, `b = 2`.
pub fn decay2d() -> IfsJumpProcess {
    let third = 1.0 / 3.0;
    let two_thirds = 2.0 / 3.0;
    IfsJumpProcess::new(
        "DECAY2D",
        2,
        Semigroup::ExpDecay {
            rate: 1.0,
            center: vec![0.0, 0.0],
        },
        vec![
            AffineMap::scaled_identity(2, 0.5, vec![0.0, 0.0]),
            AffineMap::scaled_identity(2, 0.5, vec![two_thirds, 0.0]),
            AffineMap::scaled_identity(2, 0.5, vec![0.0, two_thirds]),
        ],
        vec![
            ProbFn::ClampedAffine {
                bias: third,
                weights: vec![0.1, 0.0],
                lo: third - 0.1,
                hi: third + 0.1,
            },
            ProbFn::ClampedAffine {
                bias: third,
                weights: vec![-0.1, 0.0],
                lo: third - 0.1,
                hi: third + 0.1,
            },
            ProbFn::Constant { value: third },
        ],
        2.0,
        DeclaredConstants {
            r: 0.5,
            a: 0.2,
            kappa: 0.5,
        },
    )
    .expect("DECAY2D is well formed")
}

/// Single map `x ↦ r·x`; invariant law `δ₀`.
pub fn point(r: f64) -> IfsJumpProcess {
    IfsJumpProcess::new(
        "POINT",
        1,
        Semigroup::Identity,
        vec![AffineMap::scaled_identity(1, r, vec![0.0])],
        vec![ProbFn::Constant { value: 1.0 }],
        1.0,
        DeclaredConstants {
            r,
            a: 0.0,
            kappa: 0.0,
        },
    )
    .expect("POINT needs r in (0,1)")
}
