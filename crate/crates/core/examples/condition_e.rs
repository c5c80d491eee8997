//! Condition (E) and liminf returns: the dyadic IFS passes, a deterministic
//! shift and a period-2 flip fail.

use ergochain::diagnostics::{estimate_condition_e, estimate_liminf_return, DiagnosticOptions};
use ergochain::ifs::dyadic;
use ergochain::kernel::toy::{Flip, Shift};
use ergochain::MetricPoint;

fn main() -> ergochain::Result<()> {
    let opts = DiagnosticOptions::default();
    let s = MetricPoint::scalar;
    let r = estimate_condition_e(&dyadic(), &s(0.0), &s(0.5), 0.1, 10_000, 100, 42, &opts)?;
    println!(
        "DYADIC  E: {} limsup proxy {:.4}",
        r.verdict,
        r.statistic.unwrap().estimate
    );
    let r = estimate_condition_e(
        &Shift { by: 1.0 },
        &s(0.0),
        &s(0.0),
        0.5,
        1_000,
        100,
        42,
        &opts,
    )?;
    println!(
        "SHIFT   E: {} limsup proxy {:.4}",
        r.verdict,
        r.statistic.unwrap().estimate
    );
    let r = estimate_liminf_return(
        &Flip { a: 0.0, b: 1.0 },
        &[s(0.0)],
        &s(0.0),
        0.1,
        100,
        100,
        42,
        &opts,
    )?;
    println!(
        "FLIP liminf: {} alpha-hat {:.4}",
        r.verdict,
        r.statistic.unwrap().estimate
    );
    let r = estimate_liminf_return(
        &dyadic(),
        &[s(0.0), s(1.0)],
        &s(0.5),
        0.1,
        200,
        1_000,
        42,
        &opts,
    )?;
    println!(
        "DYADIC liminf: {} alpha-hat {:.4}",
        r.verdict,
        r.statistic.unwrap().estimate
    );
    Ok(())
}
