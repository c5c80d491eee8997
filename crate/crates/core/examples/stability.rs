//! Stability: two point masses pushed through the dyadic IFS with common
//! random numbers merge at rate ½ per step.

use ergochain::diagnostics::stability_probe;
use ergochain::ifs::dyadic;
use ergochain::metric::{EmpiricalMeasure, Metric, MetricPoint, TestFunctionDictionary};

fn main() -> ergochain::Result<()> {
    let mu1 = EmpiricalMeasure::dirac(MetricPoint::scalar(0.0));
    let mu2 = EmpiricalMeasure::dirac(MetricPoint::scalar(1.0));
    let dict = TestFunctionDictionary::seeded(&[&mu1, &mu2], 64, 1, Metric::Sup)?;
    let r = stability_probe(&dyadic(), &mu1, &mu2, 16, 2_000, &dict, 5)?;
    for p in &r.series {
        println!("n = {:>2}  bl >= {:.6}", p.n, p.estimate);
    }
    println!(
        "verdict: {} (slope {:.3e})",
        r.verdict,
        r.details["ls_slope"].as_f64().unwrap_or(f64::NAN)
    );
    Ok(())
}
