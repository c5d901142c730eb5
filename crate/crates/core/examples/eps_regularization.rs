//! ε-regularized flows started before the singular time converge to the orbifold
//! continuation as ε decreases; the quadrature solutions of the regularized
//! Monge-Ampère equation converge to the orbifold reference.

use krf::flow::{continue_on_orbifold, run_eps_flow, run_to_extinction, solve_psi_eps, surgery};
use krf::{FlowParams, FlowState, Grid, SolverConfig};

fn main() -> krf::Result<()> {
    let params = FlowParams::new(2, 1, 1.0, 4.0)?;
    let cfg = SolverConfig::default();
    let grid = Grid::new(-24.0, 12.0, 1024)?;
    let t = params.singular_time();
    let eps_list = [1e-2, 1e-3, 1e-4];
    let record: Vec<f64> = eps_list.iter().map(|e| t - e).collect();
    let init = FlowState::initial(params, grid)?.profile();
    let mut x = run_to_extinction(&init, &cfg, params, &record)?;
    let limit = surgery(&mut x, &cfg)?;
    let horizon = 0.05;
    let y = continue_on_orbifold(&limit, &cfg, params, t + horizon - limit.t, &[])?;
    let y_end = y.last().expect("orbifold run has snapshots");
    for eps in eps_list {
        let start = x.nearest(t - eps).expect("recorded");
        let run = run_eps_flow(start, eps, &cfg, params, horizon, &[])?;
        let gap = run.last().expect("eps run has snapshots").sup_distance(y_end, grid.rho_min);
        let psi = solve_psi_eps(params, eps, 2 * params.n as u32, start)?;
        println!(
            "eps = {eps:.0e}: gap to orbifold run {gap:.3e}, MA residual {:.2e}, c_eps {:.5}",
            psi.ma_residual, psi.c_eps
        );
    }
    Ok(())
}
