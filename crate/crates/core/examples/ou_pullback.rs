use pavg_core::catalog::OuParams;
use pavg_core::noise::make_path;
use pavg_core::pullback::{pullback_solve, PullbackConfig};

fn main() -> pavg_core::Result<()> {
    let sys = OuParams::default().build()?;
    let path = make_path(7, 1e-3, sys.noise_dim())?;
    let est = pullback_solve(&sys, &[0.0], &[0.0], &path, &PullbackConfig::default())?;
    assert!(est.converged);
    println!("k_used = {}, rate = {:?}", est.k_used, est.rate_estimate);
    Ok(())
}
