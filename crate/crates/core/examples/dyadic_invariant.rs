//! Invariant law of the dyadic IFS: the Cesàro measure from x = 0 approaches
//! the uniform law on [0, 1].

use ergochain::ifs::dyadic;
use ergochain::kernel::{cesaro_measure, ensemble};
use ergochain::metric::{
    bl_distance, EmpiricalMeasure, Metric, MetricPoint, TestFunctionDictionary,
};

fn main() -> ergochain::Result<()> {
    let (n, m) = (1_000, 1_000);
    let trajs = ensemble(&dyadic(), &MetricPoint::scalar(0.0), n, m, 42)?;
    let cesaro = cesaro_measure(&trajs, n)?;
    let (mean, var) = cesaro.coordinate_moments(0).expect("real-valued atoms");
    println!(
        "Cesàro measure: {} atoms, mean {mean:.4} (1/2), variance {var:.4} (1/12 = {:.4})",
        cesaro.len(),
        1.0 / 12.0
    );

    let depth = 12;
    let grid: Vec<_> = (0..1u32 << depth)
        .map(|k| MetricPoint::scalar(k as f64 / (1u32 << depth) as f64))
        .collect();
    let uniform = EmpiricalMeasure::uniform(grid)?;
    let dict = TestFunctionDictionary::seeded(&[&cesaro, &uniform], 64, 7, Metric::Sup)?;
    println!(
        "bl lower bound to the depth-{depth} dyadic grid: {:.4}",
        bl_distance(&cesaro, &uniform, &dict)?
    );
    Ok(())
}
