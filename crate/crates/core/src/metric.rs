//! Metric-space points, empirical measures and a bounded-Lipschitz distance.
//!
//! Two state spaces are supported: finite-dimensional real vectors (sup-norm by
//! default, Euclidean on request) and the `(i, j, k)` index space of the
//! sequence-space counterexample chain, whose metric is the ℓ∞ distance of the
//! embedded sequences (see [`crate::counterexample::seq_distance`]).
//!
//! Weak convergence is measured through a finite [`TestFunctionDictionary`] of
//! functions with `‖f‖∞ ≤ 1` and `Lip(f) ≤ 1`; the resulting [`bl_distance`] is a
//! lower bound on the Dudley bounded-Lipschitz distance.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::counterexample::seq_distance;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Level `k` of a sequence state; `Infinite` encodes the tail `2^{-∞} = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Finite(u64),
    Infinite,
}

impl Level {
    /// `2^{-k}`, exact for every representable finite `k`.
    pub fn tail_value(self) -> f64 {
        match self {
            Level::Infinite => 0.0,
            Level::Finite(k) if k <= 1022 => f64::from_bits((1023 - k) << 52),
            Level::Finite(k) if k <= 1074 => f64::from_bits(1u64 << (1074 - k)),
            Level::Finite(_) => 0.0,
        }
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Level::Finite(k) => Some(k),
            Level::Infinite => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(k) => write!(f, "{k}"),
            Level::Infinite => f.write_str("inf"),
        }
    }
}

/// Index `(i, j, k)` of the sequence `x(i,j,k) = (i, 0 (j times), 2^{-k}, 2^{-k}, ...)`.
///
/// Equality is on labels. With `k = ∞` the tail vanishes, so `(i, j, ∞)` names
/// the same sequence for every `j`; see [`SeqState::same_point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeqState {
    pub i: u64,
    pub j: u64,
    pub k: Level,
}

impl SeqState {
    /// Whether both labels denote the same sequence.
    pub fn same_point(&self, other: &SeqState) -> bool {
        self == other
            || (self.i == other.i && self.k == Level::Infinite && other.k == Level::Infinite)
    }

    pub fn new(i: u64, j: u64, k: u64) -> Result<Self> {
        Self::with_level(i, j, Level::Finite(k))
    }

    pub fn with_level(i: u64, j: u64, k: Level) -> Result<Self> {
        if i == 0 || j == 0 || k == Level::Finite(0) {
            return Err(Error::param(format!(
                "sequence state indices must be >= 1, got ({i},{j},{k})"
            )));
        }
        Ok(Self { i, j, k })
    }

    /// The limit point `z = x(1, 1, ∞) = (1, 0, 0, ...)`.
    pub fn z() -> Self {
        Self {
            i: 1,
            j: 1,
            k: Level::Infinite,
        }
    }
}

impl fmt::Display for SeqState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.i, self.j, self.k)
    }
}

impl FromStr for SeqState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::param(format!(
                "cannot parse sequence state {s:?}; expected \"(i,j,k)\""
            ))
        };
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(bad)?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let i = parts[0].parse().map_err(|_| bad())?;
        let j = parts[1].parse().map_err(|_| bad())?;
        let k = match parts[2] {
            "inf" | "infinity" | "∞" => Level::Infinite,
            t => Level::Finite(t.parse().map_err(|_| bad())?),
        };
        SeqState::with_level(i, j, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Real(usize),
    Seq,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Real(d) => write!(f, "R^{d}"),
            Space::Seq => f.write_str("seq(i,j,k)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricPoint {
    Real(Vec<f64>),
    Seq(SeqState),
}

impl MetricPoint {
    pub fn real(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let coords = coords.into();
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        if coords.is_empty() {
            return Err(Error::param(
                "real vector must have at least one coordinate",
            ));
        }
        Ok(MetricPoint::Real(coords))
    }

    /// One-dimensional point; panics on non-finite input.
    pub fn scalar(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite scalar {x}");
        MetricPoint::Real(vec![x])
    }

    pub fn seq(i: u64, j: u64, k: u64) -> Result<Self> {
        SeqState::new(i, j, k).map(MetricPoint::Seq)
    }

    pub fn space(&self) -> Space {
        match self {
            MetricPoint::Real(v) => Space::Real(v.len()),
            MetricPoint::Seq(_) => Space::Seq,
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            MetricPoint::Real(v) => Some(v),
            MetricPoint::Seq(_) => None,
        }
    }

    pub fn as_seq(&self) -> Option<&SeqState> {
        match self {
            MetricPoint::Seq(s) => Some(s),
            MetricPoint::Real(_) => None,
        }
    }

    /// First coordinate of a real point; `None` for sequence states.
    pub fn x0(&self) -> Option<f64> {
        self.as_real().map(|v| v[0])
    }
}

impl fmt::Display for MetricPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricPoint::Real(v) => {
                f.write_str("(")?;
                for (n, c) in v.iter().enumerate() {
                    if n > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
            MetricPoint::Seq(s) => s.fmt(f),
        }
    }
}

impl Serialize for MetricPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MetricPoint::Real(v) => v.serialize(serializer),
            MetricPoint::Seq(s) => serializer.collect_str(s),
        }
    }
}

impl<'de> Deserialize<'de> for MetricPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Scalar(f64),
            Vector(Vec<f64>),
            Seq(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Scalar(x) => MetricPoint::real(vec![x]).map_err(serde::de::Error::custom),
            Repr::Vector(v) => MetricPoint::real(v).map_err(serde::de::Error::custom),
            Repr::Seq(s) => s
                .parse()
                .map(MetricPoint::Seq)
                .map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Supremum norm of coordinate differences.
    #[default]
    Sup,
    Euclidean,
}

impl Metric {
    pub fn distance(self, a: &MetricPoint, b: &MetricPoint) -> Result<f64> {
        match (a, b) {
            (MetricPoint::Real(x), MetricPoint::Real(y)) => {
                if x.len() != y.len() {
                    return Err(Error::DimensionMismatch(x.len(), y.len()));
                }
                Ok(self.real_distance(x, y))
            }
            (MetricPoint::Seq(s), MetricPoint::Seq(t)) => Ok(seq_distance(s, t)),
            _ => Err(Error::SpaceMismatch(
                a.space().to_string(),
                b.space().to_string(),
            )),
        }
    }

    pub(crate) fn real_distance(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Metric::Sup => x
                .iter()
                .zip(y)
                .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs())),
            Metric::Euclidean => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Distance with the same space checked by the caller.
    pub(crate) fn dist_unchecked(self, a: &MetricPoint, b: &MetricPoint) -> f64 {
        match (a, b) {
            (MetricPoint::Real(x), MetricPoint::Real(y)) => self.real_distance(x, y),
            (MetricPoint::Seq(s), MetricPoint::Seq(t)) => seq_distance(s, t),
            _ => f64::INFINITY,
        }
    }

    pub fn dist_to_finite_set(self, x: &MetricPoint, points: &[MetricPoint]) -> Result<f64> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let mut best = f64::INFINITY;
        for p in points {
            best = best.min(self.distance(x, p)?);
        }
        Ok(best)
    }
}

/// Sup-norm distance (or the sequence-space ℓ∞ distance).
pub fn distance(a: &MetricPoint, b: &MetricPoint) -> Result<f64> {
    Metric::Sup.distance(a, b)
}

/// `inf_{y ∈ points} ρ(x, y)`; `x` lies in the open ε-fattening iff the result is `< ε`.
pub fn dist_to_finite_set(x: &MetricPoint, points: &[MetricPoint]) -> Result<f64> {
    Metric::Sup.dist_to_finite_set(x, points)
}

/// Finite, normalized, weighted point cloud on a single state space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<(MetricPoint, f64)>,
    total_weight: f64,
}

impl EmpiricalMeasure {
    pub fn uniform(points: Vec<MetricPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let w = 1.0 / points.len() as f64;
        Self::weighted(points.into_iter().map(|p| (p, w)).collect())
    }

    pub fn dirac(point: MetricPoint) -> Self {
        Self {
            atoms: vec![(point, 1.0)],
            total_weight: 1.0,
        }
    }

    pub fn weighted(atoms: Vec<(MetricPoint, f64)>) -> Result<Self> {
        let first = atoms.first().ok_or(Error::EmptyMeasure)?.0.space();
        let mut total = 0.0;
        for (p, w) in &atoms {
            if p.space() != first {
                return Err(Error::SpaceMismatch(
                    first.to_string(),
                    p.space().to_string(),
                ));
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::param(format!(
                    "atom weight {w} is not a nonnegative real"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 * atoms.len().max(1) as f64 {
            return Err(Error::param(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            atoms,
            total_weight: total,
        })
    }

    pub fn atoms(&self) -> &[(MetricPoint, f64)] {
        &self.atoms
    }

    pub fn points(&self) -> impl Iterator<Item = &MetricPoint> {
        self.atoms.iter().map(|(p, _)| p)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn space(&self) -> Space {
        self.atoms[0].0.space()
    }

    pub fn integrate(&self, f: impl Fn(&MetricPoint) -> f64) -> f64 {
        self.atoms.iter().map(|(p, w)| w * f(p)).sum()
    }

    /// Weighted mean and variance of a real coordinate.
    pub fn coordinate_moments(&self, coord: usize) -> Option<(f64, f64)> {
        let mut mean = 0.0;
        for (p, w) in &self.atoms {
            mean += w * p.as_real()?.get(coord)?;
        }
        let var = self.integrate(|p| {
            let d = p.as_real().map_or(0.0, |v| v[coord]) - mean;
            d * d
        });
        Some((mean, var))
    }

    /// Mass of the atoms satisfying `pred`.
    pub fn mass(&self, pred: impl Fn(&MetricPoint) -> bool) -> f64 {
        self.atoms
            .iter()
            .filter(|(p, _)| pred(p))
            .map(|(_, w)| w)
            .sum()
    }
}

type ScalarFn = Arc<dyn Fn(&MetricPoint) -> f64 + Send + Sync>;

#[derive(Clone)]
enum TestFnKind {
    Bump {
        center: MetricPoint,
        scale: f64,
        metric: Metric,
    },
    Custom {
        f: ScalarFn,
        description: String,
    },
}

/// A bounded Lipschitz test function, rescaled so that `‖f‖∞ ≤ 1` and `Lip(f) ≤ 1`.
#[derive(Clone)]
pub struct TestFunction {
    kind: TestFnKind,
    factor: f64,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl TestFunction {
    /// `clamp(1 - ρ(x, c)/s, 0, 1)`, multiplied by `min(1, s)`.
    pub fn bump(center: MetricPoint, scale: f64, metric: Metric) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::param(format!(
                "bump scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            kind: TestFnKind::Bump {
                center,
                scale,
                metric,
            },
            factor: scale.min(1.0),
        })
    }

    /// User function with declared sup-norm and Lipschitz bounds; rescaled by
    /// `1 / max(1, sup_bound, lipschitz)`.
    pub fn custom(
        description: impl Into<String>,
        sup_bound: f64,
        lipschitz: f64,
        f: impl Fn(&MetricPoint) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(sup_bound >= 0.0 && lipschitz >= 0.0 && sup_bound.is_finite() && lipschitz.is_finite())
        {
            return Err(Error::param(
                "declared bounds must be finite and nonnegative",
            ));
        }
        Ok(Self {
            kind: TestFnKind::Custom {
                f: Arc::new(f),
                description: description.into(),
            },
            factor: 1.0 / sup_bound.max(lipschitz).max(1.0),
        })
    }

    pub fn eval(&self, x: &MetricPoint) -> f64 {
        let raw = match &self.kind {
            TestFnKind::Bump {
                center,
                scale,
                metric,
            } => (1.0 - metric.dist_unchecked(x, center) / scale).clamp(0.0, 1.0),
            TestFnKind::Custom { f, .. } => f(x),
        };
        self.factor * raw
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            TestFnKind::Bump { center, scale, .. } => {
                format!("{}*bump(center={center}, scale={scale})", self.factor)
            }
            TestFnKind::Custom { description, .. } => format!("{}*{description}", self.factor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DictionaryProvenance {
    SeededBumps {
        seed: u64,
        size: usize,
        pooled_atoms: usize,
        metric: Metric,
    },
    UserSupplied {
        description: String,
    },
}

#[derive(Debug, Clone)]
pub struct TestFunctionDictionary {
    functions: Vec<TestFunction>,
    provenance: DictionaryProvenance,
}

pub const DEFAULT_DICTIONARY_SIZE: usize = 64;
const SCALE_PAIRS: usize = 256;

impl TestFunctionDictionary {
    pub fn user(functions: Vec<TestFunction>, description: impl Into<String>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        Ok(Self {
            functions,
            provenance: DictionaryProvenance::UserSupplied {
                description: description.into(),
            },
        })
    }

    /// `size` bumps with centers drawn from the pooled atoms of `measures` and
    /// scales drawn from the empirical quantiles of pooled pairwise distances.
    pub fn seeded(
        measures: &[&EmpiricalMeasure],
        size: usize,
        seed: u64,
        metric: Metric,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyDictionary);
        }
        let pooled: Vec<&MetricPoint> = measures.iter().flat_map(|m| m.points()).collect();
        if pooled.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let space = pooled[0].space();
        if let Some(p) = pooled.iter().find(|p| p.space() != space) {
            return Err(Error::SpaceMismatch(
                space.to_string(),
                p.space().to_string(),
            ));
        }
        let n = pooled.len() as u64;
        let mut rng = RandomStream::new(seed, 0);
        let mut dists: Vec<f64> = (0..SCALE_PAIRS)
            .map(|_| {
                let a = pooled[rng.below(n) as usize];
                let b = pooled[rng.below(n) as usize];
                metric.dist_unchecked(a, b)
            })
            .filter(|d| *d > 0.0 && d.is_finite())
            .collect();
        dists.sort_by(f64::total_cmp);
        let mut functions = Vec::with_capacity(size);
        for _ in 0..size {
            let center = pooled[rng.below(n) as usize].clone();
            let u = rng.uniform();
            let scale = if dists.is_empty() {
                1.0
            } else {
                dists[((u * dists.len() as f64) as usize).min(dists.len() - 1)]
            };
            functions.push(TestFunction::bump(center, scale, metric)?);
        }
        Ok(Self {
            functions,
            provenance: DictionaryProvenance::SeededBumps {
                seed,
                size,
                pooled_atoms: pooled.len(),
                metric,
            },
        })
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }

    pub fn provenance(&self) -> &DictionaryProvenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

/// `max_f |∫f dμ − ∫f dν|` over the dictionary.
pub fn bl_distance(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    dict: &TestFunctionDictionary,
) -> Result<f64> {
    if mu.space() != nu.space() {
        return Err(Error::SpaceMismatch(
            mu.space().to_string(),
            nu.space().to_string(),
        ));
    }
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    let gaps: Vec<f64> = dict
        .functions
        .par_iter()
        .map(|f| (mu.integrate(|x| f.eval(x)) - nu.integrate(|x| f.eval(x))).abs())
        .collect();
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// Largest observed difference quotient `|f(a) − f(b)| / ρ(a, b)`: a lower bound on `Lip(f)`.
/// Pairs at distance zero are skipped.
pub fn lipschitz_estimate(
    f: impl Fn(&MetricPoint) -> f64,
    pairs: &[(MetricPoint, MetricPoint)],
    metric: Metric,
) -> Result<f64> {
    let mut best: Option<f64> = None;
    for (a, b) in pairs {
        let d = metric.distance(a, b)?;
        if d == 0.0 {
            continue;
        }
        let q = (f(a) - f(b)).abs() / d;
        best = Some(best.map_or(q, |v: f64| v.max(q)));
    }
    best.ok_or(Error::DegeneratePairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> MetricPoint {
        MetricPoint::real(v.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&p(&[1.0, 2.0]), &p(&[1.0, 2.0])).unwrap(), 0.0);
        assert_eq!(distance(&p(&[0.0, 0.0]), &p(&[3.0, -4.0])).unwrap(), 4.0);
        assert_eq!(distance(&p(&[0.25]), &p(&[-1.5])).unwrap(), 1.75);
        assert_eq!(
            Metric::Euclidean
                .distance(&p(&[0.0, 0.0]), &p(&[3.0, -4.0]))
                .unwrap(),
            5.0
        );
    }

    #[test]
    fn distance_errors() {
        assert_eq!(
            distance(&p(&[0.0]), &p(&[0.0, 1.0])),
            Err(Error::DimensionMismatch(1, 2))
        );
        assert!(matches!(
            distance(&p(&[0.0]), &MetricPoint::seq(1, 1, 1).unwrap()),
            Err(Error::SpaceMismatch(..))
        ));
        assert_eq!(MetricPoint::real(vec![f64::NAN]), Err(Error::NonFinite));
    }

    #[test]
    fn finite_set_examples() {
        let k = [p(&[1.0]), p(&[3.0])];
        assert_eq!(dist_to_finite_set(&p(&[0.0]), &k).unwrap(), 1.0);
        assert_eq!(dist_to_finite_set(&p(&[1.0]), &[p(&[1.0])]).unwrap(), 0.0);
        let k2 = [p(&[0.0, 2.0]), p(&[5.0, 0.0])];
        assert_eq!(dist_to_finite_set(&p(&[0.0, 0.0]), &k2).unwrap(), 2.0);
        assert_eq!(
            dist_to_finite_set(&p(&[0.0]), &[]),
            Err(Error::EmptyPointSet)
        );
    }

    fn clamp01() -> TestFunction {
        TestFunction::custom("clamp(x,0,1)", 1.0, 1.0, |x| {
            x.x0().unwrap().clamp(0.0, 1.0)
        })
        .unwrap()
    }

    #[test]
    fn bl_examples() {
        let dict = TestFunctionDictionary::user(vec![clamp01()], "clamp").unwrap();
        let d0 = EmpiricalMeasure::dirac(p(&[0.0]));
        let d1 = EmpiricalMeasure::dirac(p(&[1.0]));
        assert_eq!(bl_distance(&d0, &d0, &dict).unwrap(), 0.0);
        assert_eq!(bl_distance(&d0, &d1, &dict).unwrap(), 1.0);
        let s = EmpiricalMeasure::dirac(MetricPoint::seq(1, 1, 1).unwrap());
        assert!(matches!(
            bl_distance(&d0, &s, &dict),
            Err(Error::SpaceMismatch(..))
        ));
    }

    #[test]
    fn seeded_dictionary_is_admissible_and_reproducible() {
        let mu =
            EmpiricalMeasure::uniform((0..50).map(|i| p(&[i as f64 * 0.37])).collect()).unwrap();
        let a = TestFunctionDictionary::seeded(&[&mu], 64, 9, Metric::Sup).unwrap();
        let b = TestFunctionDictionary::seeded(&[&mu], 64, 9, Metric::Sup).unwrap();
        assert_eq!(a.len(), 64);
        for (f, g) in a.functions().iter().zip(b.functions()) {
            assert_eq!(f.describe(), g.describe());
        }
        let pairs: Vec<_> = (0..200)
            .map(|i| (p(&[i as f64 * 0.1 - 3.0]), p(&[i as f64 * 0.1 - 2.95])))
            .collect();
        for f in a.functions() {
            for (x, _) in &pairs {
                assert!(f.eval(x).abs() <= 1.0);
            }
            assert!(lipschitz_estimate(|x| f.eval(x), &pairs, Metric::Sup).unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn degenerate_measure_is_fine() {
        let mu = EmpiricalMeasure::dirac(p(&[2.0]));
        let dict = TestFunctionDictionary::seeded(&[&mu], 8, 1, Metric::Sup).unwrap();
        assert_eq!(bl_distance(&mu, &mu, &dict).unwrap(), 0.0);
    }

    #[test]
    fn measure_validation() {
        assert_eq!(EmpiricalMeasure::uniform(vec![]), Err(Error::EmptyMeasure));
        assert!(EmpiricalMeasure::weighted(vec![(p(&[0.0]), 0.4), (p(&[1.0]), 0.4)]).is_err());
        assert!(EmpiricalMeasure::weighted(vec![
            (p(&[0.0]), 0.5),
            (MetricPoint::seq(1, 1, 1).unwrap(), 0.5)
        ])
        .is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let f = |x: &MetricPoint| 2.0 * x.x0().unwrap();
        let pairs = [(p(&[0.0]), p(&[1.0])), (p(&[1.0]), p(&[3.0]))];
        assert_eq!(lipschitz_estimate(f, &pairs, Metric::Sup).unwrap(), 2.0);
        assert_eq!(
            lipschitz_estimate(|_| 3.0, &pairs, Metric::Sup).unwrap(),
            0.0
        );
        let abs = |x: &MetricPoint| x.x0().unwrap().abs();
        assert_eq!(
            lipschitz_estimate(abs, &[(p(&[-1.0]), p(&[1.0]))], Metric::Sup).unwrap(),
            0.0
        );
        assert_eq!(
            lipschitz_estimate(abs, &[(p(&[1.0]), p(&[1.0]))], Metric::Sup),
            Err(Error::DegeneratePairs)
        );
    }

    #[test]
    fn seq_state_parse_and_display() {
        let s: SeqState = "(3, 2, inf)".parse().unwrap();
        assert_eq!(s, SeqState::with_level(3, 2, Level::Infinite).unwrap());
        assert_eq!(s.to_string(), "(3,2,inf)");
        assert!("(0,1,1)".parse::<SeqState>().is_err());
        assert!("1,1,1".parse::<SeqState>().is_err());
    }

    #[test]
    fn tail_values_are_exact_powers() {
        let mut expected = 1.0f64;
        for k in 1..=1080u64 {
            expected /= 2.0;
            assert_eq!(Level::Finite(k).tail_value(), expected, "k={k}");
        }
        assert_eq!(Level::Infinite.tail_value(), 0.0);
    }

    fn vec3() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..5).prop_flat_map(|d| {
            let c = || proptest::collection::vec(-1e3f64..1e3, d);
            (c(), c(), c())
        })
    }

    proptest! {
        #[test]
        fn metric_axioms((a, b, c) in vec3()) {
            for metric in [Metric::Sup, Metric::Euclidean] {
                let (a, b, c) = (p(&a), p(&b), p(&c));
                let ab = metric.distance(&a, &b).unwrap();
                prop_assert_eq!(metric.distance(&a, &a).unwrap(), 0.0);
                prop_assert_eq!(ab, metric.distance(&b, &a).unwrap());
                let ac = metric.distance(&a, &c).unwrap();
                let bc = metric.distance(&b, &c).unwrap();
                prop_assert!(ac <= ab + bc + 1e-12 * (1.0 + ab + bc));
            }
        }

        #[test]
        fn finite_set_zero_iff_member(x in -10i32..10, ks in proptest::collection::vec(-10i32..10, 1..6)) {
            let pts: Vec<_> = ks.iter().map(|k| p(&[*k as f64 * 0.5])).collect();
            let xp = p(&[x as f64 * 0.5]);
            let d = dist_to_finite_set(&xp, &pts).unwrap();
            prop_assert_eq!(d == 0.0, pts.contains(&xp));
        }
    }
}
