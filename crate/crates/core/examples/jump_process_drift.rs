//! Drift certificate for the planar jump process: derive (λ₀, b) from the
//! declared constants, build V = ρ(·, 0) and check PV ≤ λV + b·1_B by simulation.

use ergochain::diagnostics::{drift_check, DiagnosticOptions};
use ergochain::ifs::{
    decay2d, drift_coefficients, estimate_b_tilde, lipschitz_report, LyapunovCertificate,
};
use ergochain::metric::{Metric, MetricPoint};
use ergochain::rng::RandomStream;

fn main() -> ergochain::Result<()> {
    let proc = decay2d();
    let d = proc.declared;
    let b_tilde = estimate_b_tilde(&proc, &[0.0, 0.0], None)?
        .value
        .expect("orbit converges");
    let coeffs = drift_coefficients(d.r, proc.gamma, d.kappa, proc.n_maps(), b_tilde)?;
    println!(
        "b~ = {b_tilde:.4}, lambda0 = {:.4}, b = {:.4}",
        coeffs.lambda0, coeffs.b
    );

    let x0 = MetricPoint::real(vec![0.0, 0.0])?;
    let cert = LyapunovCertificate::from_drift(x0, coeffs, 5.0 / 6.0, Metric::Sup)?;
    println!(
        "certificate: lambda = {:.4}, R = {:.2}",
        cert.lambda, cert.radius
    );

    let mut rng = RandomStream::new(1, 0);
    let probes = (0..50)
        .map(|_| {
            MetricPoint::real(vec![
                40.0 * rng.uniform() - 20.0,
                40.0 * rng.uniform() - 20.0,
            ])
        })
        .collect::<ergochain::Result<Vec<_>>>()?;
    let report = drift_check(&proc, &cert, &probes, 500, 9, &DiagnosticOptions::default())?;
    println!(
        "drift_check: {} ({} violations)",
        report.verdict, report.details["violations"]
    );

    let l = lipschitz_report(d.r, d.a, proc.gamma, d.kappa)?;
    println!(
        "Lipschitz propagation constant L = {}",
        l.statistic.unwrap().estimate
    );
    for note in &l.notes {
        println!("  note: {note}");
    }
    Ok(())
}
