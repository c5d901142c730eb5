//! Runs the manifold phase of M_{2,1} to the contraction of the zero section and
//! compares the detected singular time with the class law.

use krf::flow::{run_to_extinction, FlowEvent};
use krf::{FlowParams, FlowState, Grid, SolverConfig};

fn main() -> krf::Result<()> {
    let params = FlowParams::new(2, 1, 1.0, 4.0)?;
    let grid = Grid::new(-24.0, 12.0, 1024)?;
    let init = FlowState::initial(params, grid)?.profile();
    let record: Vec<f64> = (1..10).map(|j| 0.1 * j as f64).collect();
    let traj = run_to_extinction(&init, &SolverConfig::default(), params, &record)?;
    for s in &traj.snapshots {
        let (a, b) = krf::calabi::boundary_class(s, params.k);
        println!("t = {:.4}  zero section {a:.6}  infinity section {b:.6}", s.t);
    }
    for e in &traj.events {
        if let FlowEvent::SingularTimeReached { t_star, .. } = e {
            println!("t* = {t_star:.8}, T = {}", params.singular_time());
        }
    }
    Ok(())
}
