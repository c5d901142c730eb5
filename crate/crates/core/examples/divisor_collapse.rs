//! Diameter of the contracting divisor and Gromov-Hausdorff distortion to the
//! limit over the last decade before the singular time.

use krf::flow::{run_to_extinction, surgery};
use krf::metric::{gh_distortion, MeshOptions};
use krf::{FlowParams, FlowState, Grid, SolverConfig};

fn main() -> krf::Result<()> {
    let params = FlowParams::new(2, 1, 1.0, 4.0)?;
    let cfg = SolverConfig::default();
    let grid = Grid::new(-24.0, 12.0, 1024)?;
    let t = params.singular_time();
    let record: Vec<f64> = (10..=30).step_by(5).map(|j| t * (1.0 - 10f64.powf(-(j as f64) / 10.0))).collect();
    let init = FlowState::initial(params, grid)?.profile();
    let mut x = run_to_extinction(&init, &cfg, params, &record)?;
    let limit = surgery(&mut x, &cfg)?;
    let opts = MeshOptions { angular: 65, row_stride: 16 };
    for &s in &record {
        let prof = x.nearest(s).expect("recorded");
        let diam = std::f64::consts::PI * (2.0 * prof.phi[0]).sqrt();
        let gh = gh_distortion(prof, &limit, params.k, opts)?;
        println!(
            "T - t = {:.1e}: divisor diameter {diam:.4}, GH distortion {:.4} (slack {:.4})",
            t - prof.t,
            gh.distortion,
            gh.slack
        );
    }
    Ok(())
}
