//! Tightness: the dyadic IFS keeps its mass on a compact candidate; the
//! sequence-space chain runs away from any candidate built from its past.

use ergochain::counterexample::CExampleChain;
use ergochain::diagnostics::{tightness_probe, DiagnosticOptions};
use ergochain::ifs::dyadic;
use ergochain::MetricPoint;

fn main() -> ergochain::Result<()> {
    let opts = DiagnosticOptions::default();
    let r = tightness_probe(
        &dyadic(),
        &MetricPoint::scalar(0.0),
        0.1,
        1_000,
        500,
        None,
        1,
        &opts,
    )?;
    println!(
        "DYADIC         {} liminf proxy {:.4} |K| = {}",
        r.verdict,
        r.statistic.unwrap().estimate,
        r.details["candidate_size"]
    );
    let start = MetricPoint::seq(1, 1, 1)?;
    let r = tightness_probe(
        &CExampleChain::default(),
        &start,
        0.1,
        1_000,
        200,
        None,
        1,
        &opts,
    )?;
    println!(
        "COUNTEREXAMPLE {} liminf proxy {:.4} |K| = {}",
        r.verdict,
        r.statistic.unwrap().estimate,
        r.details["candidate_size"]
    );
    Ok(())
}
