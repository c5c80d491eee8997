//! Markov kernels and Monte Carlo access to their iterates.
//!
//! A [`Kernel`] draws one transition `x ↦ P(x, ·)`; `P^n` is obtained only by
//! iterating it. Trajectory `t` of an ensemble always reads stream `t` of the
//! master seed and results are collected in stream order, so every function
//! here returns the same bits regardless of the rayon pool it runs in.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{bl_distance, EmpiricalMeasure, MetricPoint, Space, TestFunctionDictionary};
use crate::rng::RandomStream;
use crate::stats::{MeanEstimate, ProbabilityEstimate};

pub const DEFAULT_HORIZON: usize = 10_000;
pub const DEFAULT_ENSEMBLE: usize = 1_000;

pub trait Kernel: Send + Sync {
    fn name(&self) -> &str;

    fn space(&self) -> Space;

    /// One draw from `P(x, ·)`. Must be a pure function of `x` and the
    /// stream position.
    fn step(&self, x: &MetricPoint, rng: &mut RandomStream) -> Result<MetricPoint>;
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn space(&self) -> Space {
        (**self).space()
    }
    fn step(&self, x: &MetricPoint, rng: &mut RandomStream) -> Result<MetricPoint> {
        (**self).step(x, rng)
    }
}

impl<K: Kernel + ?Sized> Kernel for Box<K> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn space(&self) -> Space {
        (**self).space()
    }
    fn step(&self, x: &MetricPoint, rng: &mut RandomStream) -> Result<MetricPoint> {
        (**self).step(x, rng)
    }
}

pub(crate) fn check_space(kernel: &dyn Kernel, x: &MetricPoint) -> Result<()> {
    if kernel.space() != x.space() {
        return Err(Error::SpaceMismatch(
            kernel.space().to_string(),
            x.space().to_string(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub start: MetricPoint,
    /// `states[t]` is the state after `t + 1` steps.
    pub states: Vec<MetricPoint>,
    pub stream_id: u64,
}

/// Run `n` steps from `x0`, handing each state to `visit(t, state)`, and return
/// the final state. Nothing is stored.
pub fn walk(
    kernel: &dyn Kernel,
    x0: &MetricPoint,
    n: usize,
    stream: &mut RandomStream,
    mut visit: impl FnMut(usize, &MetricPoint),
) -> Result<MetricPoint> {
    check_space(kernel, x0)?;
    let mut x = x0.clone();
    for t in 0..n {
        x = kernel.step(&x, stream)?;
        visit(t, &x);
    }
    Ok(x)
}

pub fn simulate(
    kernel: &dyn Kernel,
    x0: &MetricPoint,
    n: usize,
    mut stream: RandomStream,
) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::param("horizon must be at least 1"));
    }
    let mut states = Vec::with_capacity(n);
    walk(kernel, x0, n, &mut stream, |_, s| states.push(s.clone()))?;
    Ok(Trajectory {
        start: x0.clone(),
        states,
        stream_id: stream.stream_id(),
    })
}

/// Apply `task` to stream ids `0..m` in parallel; results come back in id order.
pub fn par_tasks<T: Send>(m: usize, task: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..m as u64).into_par_iter().map(&task).collect()
}

/// Run `f` inside a dedicated pool with `threads` workers (`0` = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn ensemble(
    kernel: &dyn Kernel,
    x0: &MetricPoint,
    n: usize,
    m: usize,
    master_seed: u64,
) -> Result<Vec<Trajectory>> {
    if m == 0 {
        return Err(Error::param("ensemble size must be at least 1"));
    }
    par_tasks(m, |id| {
        simulate(kernel, x0, n, RandomStream::new(master_seed, id))
    })
}

fn check_horizon(trajectories: &[Trajectory], n: usize) -> Result<()> {
    if trajectories.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if n == 0 {
        return Err(Error::param("horizon must be at least 1"));
    }
    let available = trajectories
        .iter()
        .map(|t| t.states.len())
        .min()
        .unwrap_or(0);
    if n > available {
        return Err(Error::HorizonExceeded {
            requested: n,
            available,
        });
    }
    Ok(())
}

/// Empirical `P^n(x0, ·)`: the `n`-th state of every trajectory, weight `1/m`.
pub fn endpoint_measure(trajectories: &[Trajectory], n: usize) -> Result<EmpiricalMeasure> {
    check_horizon(trajectories, n)?;
    EmpiricalMeasure::uniform(
        trajectories
            .iter()
            .map(|t| t.states[n - 1].clone())
            .collect(),
    )
}

/// Empirical Cesàro average `(1/n) Σ_{i=1}^n P^i(x0, ·)`.
pub fn cesaro_measure(trajectories: &[Trajectory], n: usize) -> Result<EmpiricalMeasure> {
    check_horizon(trajectories, n)?;
    EmpiricalMeasure::uniform(
        trajectories
            .iter()
            .flat_map(|t| t.states[..n].iter().cloned())
            .collect(),
    )
}

/// Monte Carlo `P^n f(x)` over `m` trajectories.
pub fn pn_f(
    kernel: &dyn Kernel,
    x: &MetricPoint,
    n: usize,
    f: impl Fn(&MetricPoint) -> f64 + Sync,
    m: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    if m < 2 {
        return Err(Error::param("pn_f needs m >= 2"));
    }
    let values = par_tasks(m, |id| {
        let end = walk(kernel, x, n, &mut RandomStream::new(seed, id), |_, _| {})?;
        Ok(f(&end))
    })?;
    MeanEstimate::from_samples(&values)
}

/// Monte Carlo `P^n(x, A)` with a Wilson interval.
pub fn pn_set(
    kernel: &dyn Kernel,
    x: &MetricPoint,
    n: usize,
    indicator: impl Fn(&MetricPoint) -> bool + Sync,
    m: usize,
    seed: u64,
    confidence: f64,
) -> Result<ProbabilityEstimate> {
    if m < 2 {
        return Err(Error::param("pn_set needs m >= 2"));
    }
    let hits = par_tasks(m, |id| {
        let end = walk(kernel, x, n, &mut RandomStream::new(seed, id), |_, _| {})?;
        Ok(indicator(&end))
    })?;
    ProbabilityEstimate::wilson(
        hits.iter().filter(|h| **h).count() as u64,
        m as u64,
        confidence,
    )
}

/// Push `mu` forward along `m_per_atom` continuations per atom and return the
/// empirical `μP^t` at each checkpoint `t` (checkpoint 0 is `mu` itself).
///
/// Continuation `c` of atom `a` reads stream `a·m_per_atom + c`, so two measures
/// with the same atom count are propagated with common random numbers.
pub fn propagate_measure(
    kernel: &dyn Kernel,
    mu: &EmpiricalMeasure,
    checkpoints: &[usize],
    m_per_atom: usize,
    seed: u64,
) -> Result<Vec<EmpiricalMeasure>> {
    if m_per_atom == 0 {
        return Err(Error::param("m_per_atom must be at least 1"));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("checkpoints must be strictly increasing"));
    }
    for (p, _) in mu.atoms() {
        check_space(kernel, p)?;
    }
    let horizon = checkpoints.last().copied().unwrap_or(0);
    let per_atom = mu.len();
    let total = per_atom * m_per_atom;
    // paths[task][checkpoint]
    let paths: Vec<Vec<MetricPoint>> = par_tasks(total, |id| {
        let (atom, _) = &mu.atoms()[id as usize / m_per_atom];
        let mut rng = RandomStream::new(seed, id);
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut x = atom.clone();
        let mut next = 0;
        for t in 0..=horizon {
            if t > 0 {
                x = kernel.step(&x, &mut rng)?;
            }
            if next < checkpoints.len() && checkpoints[next] == t {
                out.push(x.clone());
                next += 1;
            }
        }
        Ok(out)
    })?;
    (0..checkpoints.len())
        .map(|c| {
            let atoms = paths
                .iter()
                .enumerate()
                .map(|(id, path)| {
                    let w = mu.atoms()[id / m_per_atom].1 / m_per_atom as f64;
                    (path[c].clone(), w)
                })
                .collect();
            EmpiricalMeasure::weighted(atoms)
        })
        .collect()
}

/// `bl_distance(μ, μP̂)` with `μP̂` built from `m_per_atom` one-step draws per atom.
pub fn invariance_residual(
    kernel: &dyn Kernel,
    mu: &EmpiricalMeasure,
    dict: &TestFunctionDictionary,
    m_per_atom: usize,
    seed: u64,
) -> Result<f64> {
    let pushed = propagate_measure(kernel, mu, &[1], m_per_atom, seed)?;
    bl_distance(mu, &pushed[0], dict)
}

/// Small kernels used as fixtures, examples and sanity checks.
pub mod toy {
    use super::*;

    /// `P(x, ·) = δ_x`.
    #[derive(Debug, Clone)]
    pub struct Identity {
        pub space: Space,
    }

    impl Kernel for Identity {
        fn name(&self) -> &str {
            "IDENTITY"
        }
        fn space(&self) -> Space {
            self.space
        }
        fn step(&self, x: &MetricPoint, _rng: &mut RandomStream) -> Result<MetricPoint> {
            Ok(x.clone())
        }
    }

    /// `x ↦ x + by` on the real line.
    #[derive(Debug, Clone)]
    pub struct Shift {
        pub by: f64,
    }

    impl Kernel for Shift {
        fn name(&self) -> &str {
            "SHIFT"
        }
        fn space(&self) -> Space {
            Space::Real(1)
        }
        fn step(&self, x: &MetricPoint, _rng: &mut RandomStream) -> Result<MetricPoint> {
            MetricPoint::real(vec![x.x0().ok_or(Error::NonFinite)? + self.by])
        }
    }

    /// `x ↦ factor · x` on the real line.
    #[derive(Debug, Clone)]
    pub struct Scale {
        pub factor: f64,
    }

    impl Kernel for Scale {
        fn name(&self) -> &str {
            "SCALE"
        }
        fn space(&self) -> Space {
            Space::Real(1)
        }
        fn step(&self, x: &MetricPoint, _rng: &mut RandomStream) -> Result<MetricPoint> {
            MetricPoint::real(vec![x.x0().ok_or(Error::NonFinite)? * self.factor])
        }
    }

    /// Deterministic period-2 cycle between `a` and `b`.
    #[derive(Debug, Clone)]
    pub struct Flip {
        pub a: f64,
        pub b: f64,
    }

    impl Kernel for Flip {
        fn name(&self) -> &str {
            "FLIP"
        }
        fn space(&self) -> Space {
            Space::Real(1)
        }
        fn step(&self, x: &MetricPoint, _rng: &mut RandomStream) -> Result<MetricPoint> {
            let v = x.x0().ok_or(Error::NonFinite)?;
            Ok(MetricPoint::scalar(if v == self.a {
                self.b
            } else {
                self.a
            }))
        }
    }

    /// Jumps to `a` or `b` with probability ½ each, whatever the state.
    #[derive(Debug, Clone)]
    pub struct Coin {
        pub a: f64,
        pub b: f64,
    }

    impl Kernel for Coin {
        fn name(&self) -> &str {
            "COIN"
        }
        fn space(&self) -> Space {
            Space::Real(1)
        }
        fn step(&self, _x: &MetricPoint, rng: &mut RandomStream) -> Result<MetricPoint> {
            Ok(MetricPoint::scalar(if rng.uniform() < 0.5 {
                self.a
            } else {
                self.b
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::toy::*;
    use super::*;
    use crate::metric::{Metric, TestFunction};

    fn s(x: f64) -> MetricPoint {
        MetricPoint::scalar(x)
    }

    fn xs(t: &Trajectory) -> Vec<f64> {
        t.states.iter().map(|p| p.x0().unwrap()).collect()
    }

    #[test]
    fn simulate_examples() {
        let id = Identity {
            space: Space::Real(1),
        };
        let t = simulate(&id, &s(7.0), 3, RandomStream::new(1, 0)).unwrap();
        assert_eq!(xs(&t), vec![7.0, 7.0, 7.0]);
        let t = simulate(&Shift { by: 1.0 }, &s(0.0), 3, RandomStream::new(1, 0)).unwrap();
        assert_eq!(xs(&t), vec![1.0, 2.0, 3.0]);
        let coin = Coin { a: 0.0, b: 1.0 };
        let a = simulate(&coin, &s(0.0), 50, RandomStream::new(5, 2)).unwrap();
        let b = simulate(&coin, &s(0.0), 50, RandomStream::new(5, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn simulate_errors() {
        let seq = MetricPoint::seq(1, 1, 1).unwrap();
        assert!(matches!(
            simulate(&Shift { by: 1.0 }, &seq, 3, RandomStream::new(1, 0)),
            Err(Error::SpaceMismatch(..))
        ));
        assert!(simulate(&Shift { by: 1.0 }, &s(0.0), 0, RandomStream::new(1, 0)).is_err());
    }

    #[test]
    fn ensemble_examples() {
        let shift = Shift { by: 1.0 };
        let one = ensemble(&shift, &s(0.0), 4, 1, 3).unwrap();
        assert_eq!(
            one[0],
            simulate(&shift, &s(0.0), 4, RandomStream::new(3, 0)).unwrap()
        );
        let many = ensemble(&shift, &s(0.0), 4, 1000, 3).unwrap();
        assert!(many.iter().all(|t| t.states == many[0].states));
        assert!(many
            .iter()
            .enumerate()
            .all(|(i, t)| t.stream_id == i as u64));
        let coin = Coin { a: 0.0, b: 1.0 };
        let t1 = with_threads(1, || ensemble(&coin, &s(0.0), 20, 1000, 11).unwrap());
        let t8 = with_threads(8, || ensemble(&coin, &s(0.0), 20, 1000, 11).unwrap());
        assert_eq!(t1, t8);
    }

    #[test]
    fn endpoint_examples() {
        let id = Identity {
            space: Space::Real(1),
        };
        let tr = ensemble(&id, &s(3.0), 2, 4, 0).unwrap();
        let mu = endpoint_measure(&tr, 2).unwrap();
        assert_eq!(mu.len(), 4);
        assert!(mu.atoms().iter().all(|(p, w)| *p == s(3.0) && *w == 0.25));
        let tr = ensemble(&Shift { by: 1.0 }, &s(0.0), 3, 2, 0).unwrap();
        let mu = endpoint_measure(&tr, 2).unwrap();
        assert!(mu.points().all(|p| *p == s(2.0)));
        assert_eq!(
            endpoint_measure(&tr, 4),
            Err(Error::HorizonExceeded {
                requested: 4,
                available: 3
            })
        );
    }

    #[test]
    fn cesaro_examples() {
        let id = Identity {
            space: Space::Real(1),
        };
        let tr = ensemble(&id, &s(2.0), 5, 3, 0).unwrap();
        let mu = cesaro_measure(&tr, 5).unwrap();
        assert!((mu.mass(|p| *p == s(2.0)) - 1.0).abs() < 1e-15);
        let tr = ensemble(&Shift { by: 1.0 }, &s(0.0), 3, 1, 0).unwrap();
        let mu = cesaro_measure(&tr, 3).unwrap();
        for v in [1.0, 2.0, 3.0] {
            assert!((mu.mass(|p| *p == s(v)) - 1.0 / 3.0).abs() < 1e-15);
        }
        let tr = ensemble(&Flip { a: 0.0, b: 1.0 }, &s(0.0), 2, 1, 0).unwrap();
        let mu = cesaro_measure(&tr, 2).unwrap();
        assert_eq!(mu.mass(|p| *p == s(0.0)), 0.5);
        assert_eq!(mu.mass(|p| *p == s(1.0)), 0.5);
        assert!((mu.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pn_f_examples() {
        let coin = Coin { a: 0.0, b: 1.0 };
        let one = pn_f(&coin, &s(0.0), 7, |_| 1.0, 100, 1).unwrap();
        assert_eq!((one.mean, one.stderr), (1.0, 0.0));
        let id = Identity {
            space: Space::Real(1),
        };
        let e = pn_f(&id, &s(0.3), 4, |p| p.x0().unwrap().sin(), 10, 1).unwrap();
        assert!((e.mean - 0.3f64.sin()).abs() < 1e-15);
        let e = pn_f(&Shift { by: 1.0 }, &s(0.0), 5, |p| p.x0().unwrap(), 10, 1).unwrap();
        assert_eq!((e.mean, e.stderr), (5.0, 0.0));
    }

    #[test]
    fn pn_set_examples() {
        let coin = Coin { a: 0.0, b: 1.0 };
        let t = pn_set(&coin, &s(0.0), 3, |_| true, 50, 1, 0.95).unwrap();
        assert_eq!((t.p_hat, t.ci_high), (1.0, 1.0));
        let f = pn_set(&coin, &s(0.0), 3, |_| false, 50, 1, 0.95).unwrap();
        assert_eq!((f.p_hat, f.ci_low), (0.0, 0.0));
        let e = pn_set(&coin, &s(0.0), 1, |p| p.x0() == Some(0.0), 10_000, 17, 0.95).unwrap();
        assert!((0.48..=0.52).contains(&e.p_hat), "{e:?}");
        assert!(e.ci_low <= 0.5 && 0.5 <= e.ci_high, "{e:?}");
    }

    #[test]
    fn invariance_residual_examples() {
        let id = Identity {
            space: Space::Real(1),
        };
        let mu = EmpiricalMeasure::uniform((0..20).map(|i| s(i as f64)).collect()).unwrap();
        let dict = TestFunctionDictionary::seeded(&[&mu], 16, 2, Metric::Sup).unwrap();
        assert!(invariance_residual(&id, &mu, &dict, 5, 1).unwrap() < 1e-12);

        let tent = TestFunction::custom("clamp(1-|x|,0,1)", 1.0, 1.0, |p| {
            (1.0 - p.x0().unwrap().abs()).clamp(0.0, 1.0)
        })
        .unwrap();
        let dict = TestFunctionDictionary::user(vec![tent], "tent at 0").unwrap();
        let d0 = EmpiricalMeasure::dirac(s(0.0));
        assert_eq!(
            invariance_residual(&Shift { by: 1.0 }, &d0, &dict, 50, 1).unwrap(),
            1.0
        );
    }

    #[test]
    fn chapman_kolmogorov_on_coin() {
        // P^n from x0 versus P^{n-k} from P^k-draws: both laws are the fair coin.
        let coin = Coin { a: 0.0, b: 1.0 };
        let m = 4000;
        let direct = endpoint_measure(&ensemble(&coin, &s(0.0), 5, m, 1).unwrap(), 5).unwrap();
        let first = endpoint_measure(&ensemble(&coin, &s(0.0), 2, m, 2).unwrap(), 2).unwrap();
        let later = propagate_measure(&coin, &first, &[3], 1, 3)
            .unwrap()
            .remove(0);
        let dict = TestFunctionDictionary::seeded(&[&direct, &later], 64, 4, Metric::Sup).unwrap();
        let d = bl_distance(&direct, &later, &dict).unwrap();
        // Per-function MC bound for [0,1]-valued f: sd ≤ ½ per sample.
        let bound = (0.25 / m as f64 + 0.25 / m as f64).sqrt();
        assert!(d <= 3.0 * bound, "d={d} bound={bound}");
    }
}
