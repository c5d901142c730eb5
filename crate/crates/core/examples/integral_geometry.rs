//! Area of complex line disks and the volume of the cone surface under the
//! conformally rescaled radial metric, closed form against quadrature.

use krf::metric::{line_disk_integral, tilde_volume_f, ETA_MAX};
use krf::{Grid, RadialProfile};

fn main() -> krf::Result<()> {
    let flat = RadialProfile::euclidean(Grid::new(-20.0, 6.0, 2049)?, 1.0);
    let theta = 0.3;
    for r in [0.1, 0.5, 1.0] {
        let area = line_disk_integral(&flat, r, theta, ETA_MAX)?;
        let radius = 2.0 * r * theta.cos() * ETA_MAX.tan();
        println!(
            "flat disk of radius {radius:.4}: {area:.10} vs 2 pi R^2 = {:.10}",
            2.0 * std::f64::consts::PI * radius * radius
        );
    }
    for delta in [0.5, 2.0 / 3.0] {
        for r in [0.01, 0.1, 1.0] {
            let (closed, quad) = tilde_volume_f(r, 0.7, ETA_MAX, delta)?;
            println!("delta = {delta:.3}, r = {r}: closed {closed:.10}, quadrature {quad:.10}");
        }
    }
    Ok(())
}
