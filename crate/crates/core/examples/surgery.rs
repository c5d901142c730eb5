//! Contracts the zero section at the singular time and continues the flow on the
//! weighted projective orbifold.

use krf::flow::{continue_on_orbifold, run_to_extinction, surgery};
use krf::{FlowParams, FlowState, Grid, SolverConfig};

fn main() -> krf::Result<()> {
    let params = FlowParams::new(3, 2, 1.0, 10.0)?;
    let cfg = SolverConfig::default();
    let grid = Grid::new(-20.0, 10.0, 1024)?;
    let init = FlowState::initial(params, grid)?.profile();
    let mut x = run_to_extinction(&init, &cfg, params, &[])?;
    let limit = surgery(&mut x, &cfg)?;
    println!("surgery at t = {:.8}, phase {}", limit.t, limit.phase.as_str());
    let t = params.singular_time();
    let monitors: Vec<f64> = [1e-3, 1e-2, 0.05].iter().map(|d| t + d).collect();
    let y = continue_on_orbifold(&limit, &cfg, params, 0.1, &monitors)?;
    for s in &y.snapshots {
        println!(
            "t - T = {:+.4e}  sup |phi - phi_T| on rho >= -4: {:.3e}",
            s.t - t,
            s.sup_distance(&limit, -4.0)
        );
    }
    if let Err(e) = surgery(&mut x, &cfg) {
        println!("second surgery: {e}");
    }
    Ok(())
}
