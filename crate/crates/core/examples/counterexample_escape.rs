//! The sequence-space chain: valid branch laws, deterministic escape in j,
//! recurrent visits to U₀ and rare returns near z = x(1,1,∞).

use ergochain::counterexample::{
    escape_statistics, u0_visit_frequency, z_return_probe, CExampleChain,
};
use ergochain::diagnostics::DiagnosticOptions;
use ergochain::kernel::ensemble;
use ergochain::metric::{Level, MetricPoint, SeqState};

fn main() -> ergochain::Result<()> {
    let chain = CExampleChain::default();
    println!(
        "branches at (2,·,3): {:?}",
        chain.branch_probabilities(2, Level::Finite(3))?
    );
    match CExampleChain::literal().branch_probabilities(1, Level::Finite(1)) {
        Err(e) => println!("literal mode: {e}"),
        Ok(p) => println!("literal mode unexpectedly valid: {p:?}"),
    }

    let start = SeqState::new(1, 1, 1)?;
    let trajs = ensemble(&chain, &MetricPoint::Seq(start), 1_000, 1_000, 3)?;
    let escape = escape_statistics(&trajs, 100)?;
    println!(
        "escape: {} — Cesàro mass on the first 100 levels at n=1000: {}",
        escape.verdict,
        escape.statistic.unwrap().estimate
    );

    let freq = u0_visit_frequency(&trajs, 250, 0.95)?;
    let t = freq.theta_hat;
    println!(
        "theta_hat = {:.4} [{:.4}, {:.4}]",
        t.p_hat, t.ci_low, t.ci_high
    );

    let opts = DiagnosticOptions::default();
    for (radius, m) in [(0.75, 1_000), (0.25, 10_000), (0.125, 100_000)] {
        let r = z_return_probe(&chain, &start, radius, 1_000, m, 4, &opts)?;
        let s = r.statistic.unwrap();
        println!(
            "z-return radius {radius}: {} cesaro {:.3e} [{:.3e}, {:.3e}], product bound {:.3e}",
            r.verdict,
            s.estimate,
            s.ci_low,
            s.ci_high,
            r.details["product_lower_bound"]
                .as_f64()
                .unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
