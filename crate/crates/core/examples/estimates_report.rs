//! Individual estimate checks on a short run: boundary rates, the area law,
//! the trace bound and the restriction bound.

use krf::estimates::{check_divisor_decay, check_boundary_rates, check_restriction_bound, check_trace_bound};
use krf::flow::run_to_extinction;
use krf::runner::{extinction_schedule, RunConfig};
use krf::{FlowParams, FlowState};

fn main() -> krf::Result<()> {
    let mut cfg = RunConfig::new(FlowParams::new(3, 1, 1.0, 8.0)?);
    cfg.grid.points = 1024;
    let init = FlowState::initial(cfg.params, cfg.grid)?.profile();
    let x = run_to_extinction(&init, &cfg.solver, cfg.params, &extinction_schedule(&cfg))?;
    let t_star = krf::flow::detect_extinction(&x, cfg.solver.stop_threshold)?;
    let mut checks = check_boundary_rates(&x);
    checks.extend(check_divisor_decay(&x, t_star));
    checks.push(check_trace_bound(&x));
    checks.push(check_restriction_bound(&x));
    for c in checks {
        println!("{:5} {:24} {:.4e}  {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.measured, c.detail);
    }
    Ok(())
}
