//! Closed-form eigenvalues of the local model near the orbifold point, checked
//! against a finite-difference Hessian, and the two-sided Euclidean comparison.

use krf::local_model::{hat_metric_eigenvalues, hessian_oracle, LocalModelParams};
use nalgebra::Complex;

fn main() -> krf::Result<()> {
    for k in [1, 2, 3] {
        let p = LocalModelParams::new(2, k, 1.0)?;
        println!("k = {k}, sandwich constant {:.3}", p.sandwich_constant());
        for r in [0.1, 0.5, 0.9] {
            let closed = hat_metric_eigenvalues(&p, r)?;
            let kf = k as f64;
            let oracle = hessian_oracle(|rho| (kf * rho).exp() + p.c * kf * rho, &[Complex::new(r, 0.0), Complex::new(0.0, 0.0)])?;
            println!(
                "  r = {r:.1}: closed ({:.6}, {:.6})  oracle ({:.6}, {:.6})",
                closed.lambda_sph, closed.lambda_rad, oracle.lambda_sph, oracle.lambda_rad
            );
        }
    }
    Ok(())
}
