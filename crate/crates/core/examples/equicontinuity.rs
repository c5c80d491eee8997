//! Equicontinuity: |Pⁿf(z) − Pⁿf(y)| shrinks with ρ(y, z) for the contracting
//! dyadic IFS but not for the doubling map.

use ergochain::diagnostics::{equicontinuity_probe, DiagnosticOptions};
use ergochain::ifs::dyadic;
use ergochain::kernel::toy::Scale;
use ergochain::metric::TestFunction;
use ergochain::MetricPoint;

fn main() -> ergochain::Result<()> {
    let opts = DiagnosticOptions::default();
    let f = TestFunction::custom("clamp(x,0,1)", 1.0, 1.0, |p| {
        p.x0().unwrap_or(0.0).clamp(0.0, 1.0)
    })?;
    let radii = [0.1, 0.01, 0.001];
    let dy = equicontinuity_probe(
        &dyadic(),
        &f,
        &MetricPoint::scalar(0.5),
        &radii,
        20,
        500,
        4,
        1,
        &opts,
    )?;
    let db = equicontinuity_probe(
        &Scale { factor: 2.0 },
        &f,
        &MetricPoint::scalar(0.0),
        &radii,
        20,
        2,
        4,
        1,
        &opts,
    )?;
    for (name, rep) in [("DYADIC", &dy), ("DOUBLING", &db)] {
        println!(
            "{name:<9} moduli {:?} e-chain trend: {}",
            rep.modulus, rep.e_chain_trend
        );
    }
    Ok(())
}
