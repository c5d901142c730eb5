//! Reduced Kähler-Ricci flow `∂ₜφ = (n−1)φ′/φ + φ″/φ′ − n`, its extinction on the
//! manifold phase, the contraction to the orbifold, and the ε-regularized runs.

mod psi;
mod scheme;

pub use psi::{orbifold_momentum, psi_density, solve_ma_quadrature, solve_psi_eps, PsiSolution};
pub use scheme::FlowState;

use serde::{Deserialize, Serialize};

use crate::calabi::{FlowParams, Phase, RadialProfile};
use crate::error::{KrfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Heun's method under the diffusive step limit.
    Explicit,
    /// Crank-Nicolson in `log φ′`, solved by Newton iterations whose Jacobian holds
    /// `φ` at the current iterate.
    LaggedCrankNicolson,
}

impl std::str::FromStr for Scheme {
    type Err = KrfError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Scheme::Explicit),
            "lagged_cn" | "crank_nicolson" => Ok(Scheme::LaggedCrankNicolson),
            _ => Err(KrfError::InvalidParams(format!("unknown scheme '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt_init: f64,
    pub dt_max: f64,
    /// Safety factor on the explicit step limit.
    pub dt_safety: f64,
    pub scheme: Scheme,
    /// The manifold phase halts once the zero-section area drops below this
    /// fraction of `a0`.
    pub stop_threshold: f64,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-4,
            dt_max: 2e-3,
            dt_safety: 0.9,
            scheme: Scheme::LaggedCrankNicolson,
            stop_threshold: 1e-5,
            max_steps: 1_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_init > 0.0 && self.dt_max >= self.dt_init) {
            return Err(KrfError::InvalidParams(format!(
                "need 0 < dt_init <= dt_max (got {}, {})",
                self.dt_init, self.dt_max
            )));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(KrfError::InvalidParams(format!("dt_safety must lie in (0, 1] (got {})", self.dt_safety)));
        }
        if !(self.stop_threshold > 0.0 && self.stop_threshold < 1.0) {
            return Err(KrfError::InvalidParams(format!(
                "stop_threshold must lie in (0, 1) (got {})",
                self.stop_threshold
            )));
        }
        if self.max_steps == 0 {
            return Err(KrfError::InvalidParams("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowEvent {
    SingularTimeReached { t_star: f64, t_halt: f64 },
    SurgeryPerformed { t: f64, area_removed: f64 },
    Halted { t: f64, reason: String },
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub t: f64,
    pub dt: f64,
    pub area_d0: f64,
    pub area_dinf: f64,
    pub phi_min: f64,
    /// `φ(ρ_min) e^{−ρ_min}`, the orbifold-point coefficient.
    pub left_coeff: f64,
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub params: FlowParams,
    pub snapshots: Vec<RadialProfile>,
    pub events: Vec<FlowEvent>,
    pub history: Vec<HistoryRow>,
}

impl FlowTrajectory {
    pub fn new(params: FlowParams) -> Self {
        Self {
            params,
            snapshots: Vec::new(),
            events: Vec::new(),
            history: Vec::new(),
        }
    }

    pub fn last(&self) -> Option<&RadialProfile> {
        self.snapshots.last()
    }

    /// Snapshot whose time is closest to `t`.
    pub fn nearest(&self, t: f64) -> Option<&RadialProfile> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }

    pub fn has_surgery(&self) -> bool {
        self.events.iter().any(|e| matches!(e, FlowEvent::SurgeryPerformed { .. }))
    }

    fn push_snapshot(&mut self, prof: RadialProfile) {
        match self.snapshots.last() {
            Some(last) if prof.t <= last.t => {}
            _ => self.snapshots.push(prof),
        }
    }

    fn record(&mut self, state: &FlowState, dt: f64) {
        let (a, b) = state.areas();
        self.history.push(HistoryRow {
            t: state.t,
            dt,
            area_d0: a,
            area_dinf: b,
            phi_min: state.phi_min(),
            left_coeff: state.phi_min() * (-state.grid.rho_min).exp(),
        });
    }
}

/// Step-size policy of a driver.
#[derive(Debug, Clone, Copy)]
enum Pace {
    /// Geometric growth from `dt_init`, capped by 1% of the remaining lifetime.
    Contracting,
    /// Ten steps at `dt_init/100` absorb a change of boundary closure, then growth.
    Restarted,
}

fn next_dt(state: &FlowState, cfg: &SolverConfig, pace: Pace, i: usize) -> f64 {
    let grow = |j: usize| (cfg.dt_init * 1.1f64.powi(j.min(400) as i32)).min(cfg.dt_max);
    match pace {
        Pace::Contracting => {
            let nk = (state.params.n - state.params.k) as f64;
            let life = state.zero_section_area().max(0.0) / nk;
            grow(i).min(0.01 * life).max(cfg.dt_init * 1e-6)
        }
        Pace::Restarted if i < 10 => cfg.dt_init / 100.0,
        Pace::Restarted => grow(i - 10),
    }
}

/// Integrates to `t_end`, snapshotting at each `record` time inside the interval and
/// at the end. With `stop`, halts early once the zero-section area falls to
/// `stop·a0`; returns whether that happened.
fn advance(
    state: &mut FlowState,
    cfg: &SolverConfig,
    t_end: f64,
    record: &[f64],
    pace: Pace,
    stop: Option<f64>,
    traj: &mut FlowTrajectory,
) -> Result<bool> {
    let mut targets: Vec<f64> = record.iter().copied().filter(|&x| x > state.t && x < t_end).collect();
    targets.push(t_end);
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let tol = 1e-13 * t_end.abs().max(1.0);
    let mut ti = 0;
    let mut i = 0;
    while ti < targets.len() {
        let target = targets[ti];
        if state.t >= target - tol {
            traj.push_snapshot(state.profile());
            ti += 1;
            continue;
        }
        let dt = next_dt(state, cfg, pace, i).min(target - state.t);
        state.step(dt, cfg)?;
        if (target - state.t).abs() <= tol {
            state.t = target;
        }
        traj.record(state, dt);
        i += 1;
        if i >= cfg.max_steps {
            traj.push_snapshot(state.profile());
            traj.events.push(FlowEvent::Halted {
                t: state.t,
                reason: "max_steps exhausted".into(),
            });
            return Err(KrfError::SingularTimeNotReached { steps: i });
        }
        if let Some(frac) = stop {
            if state.zero_section_area() <= frac * state.params.a0 {
                traj.push_snapshot(state.profile());
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn manifold_state(prof: &RadialProfile, params: FlowParams, cfg: &SolverConfig) -> Result<FlowState> {
    cfg.validate()?;
    if prof.phase != Phase::ManifoldX {
        return Err(KrfError::InvalidParams(format!(
            "expected a manifold-phase profile, got {}",
            prof.phase.as_str()
        )));
    }
    FlowState::from_profile(params, prof, 0.0)
}

/// Pointwise right-hand side `(n−1)φ′/φ + φ″/φ′ − n`, with `φ″/φ′` from centered
/// differences of `log φ′` and the end values replaced by the smooth-extension
/// orders (`m` on the left, `−k` on the right).
pub fn reduced_rhs(prof: &RadialProfile, n: usize, k: usize) -> Result<Vec<f64>> {
    prof.validate()?;
    let h = prof.grid.spacing();
    let len = prof.len();
    let nf = n as f64;
    let lw: Vec<f64> = prof.dphi.iter().map(|w| w.ln()).collect();
    Ok((0..len)
        .map(|i| {
            let slope = if i == 0 {
                prof.phase.left_order(k)
            } else if i + 1 == len {
                prof.phase.right_order(k)
            } else {
                (lw[i + 1] - lw[i - 1]) / (2.0 * h)
            };
            (nf - 1.0) * prof.dphi[i] / prof.phi[i] + slope - nf
        })
        .collect())
}

/// Forcing `(n−k)ε/(ε + e^{kρ})` of the ε-regularized flow: the `ρ`-derivative of
/// `−((n−k)/k)·log(1 + ε e^{−kρ})`.
pub fn eps_forcing(n: usize, k: usize, eps: f64, rho: f64) -> f64 {
    let x = k as f64 * rho;
    let nk = (n - k) as f64;
    if x > 0.0 {
        nk * eps * (-x).exp() / (eps * (-x).exp() + 1.0)
    } else {
        nk * eps / (eps + x.exp())
    }
}

/// Advances a profile by `dt` without injecting the class.
pub fn step(prof: &RadialProfile, params: FlowParams, cfg: &SolverConfig, dt: f64) -> Result<RadialProfile> {
    let mut s = FlowState::from_profile(params, prof, 0.0)?;
    s.step(dt, cfg)?;
    Ok(s.profile())
}

/// Manifold-phase run to `t_end`, which must stay before the halting margin.
pub fn run_to(
    prof: &RadialProfile,
    cfg: &SolverConfig,
    params: FlowParams,
    t_end: f64,
    record: &[f64],
) -> Result<FlowTrajectory> {
    let mut state = manifold_state(prof, params, cfg)?;
    let margin = cfg.stop_threshold * params.a0 / (params.n - params.k) as f64;
    if t_end > params.singular_time() - margin {
        return Err(KrfError::InvalidParams(format!(
            "t_end = {t_end} is past the halting margin before T = {}",
            params.singular_time()
        )));
    }
    let mut traj = FlowTrajectory::new(params);
    traj.push_snapshot(state.profile());
    if advance(&mut state, cfg, t_end, record, Pace::Contracting, Some(cfg.stop_threshold), &mut traj)? {
        traj.events.push(FlowEvent::Halted {
            t: state.t,
            reason: "zero-section area reached the stop threshold".into(),
        });
    }
    Ok(traj)
}

/// Manifold-phase run until the zero-section area falls to `stop_threshold·a0`.
pub fn run_to_extinction(
    prof: &RadialProfile,
    cfg: &SolverConfig,
    params: FlowParams,
    record: &[f64],
) -> Result<FlowTrajectory> {
    let mut state = manifold_state(prof, params, cfg)?;
    let mut traj = FlowTrajectory::new(params);
    traj.push_snapshot(state.profile());
    let guard = 2.0 * params.singular_time();
    let halted = advance(&mut state, cfg, guard, record, Pace::Contracting, Some(cfg.stop_threshold), &mut traj)?;
    if !halted {
        return Err(KrfError::SingularTimeNotReached { steps: traj.history.len() });
    }
    let t_star = detect_extinction(&traj, cfg.stop_threshold)?;
    traj.events.push(FlowEvent::SingularTimeReached { t_star, t_halt: state.t });
    Ok(traj)
}

/// Time at which the zero-section area first falls below `threshold·a0`, linearly
/// extrapolated to zero area from the last two history rows.
pub fn detect_extinction(traj: &FlowTrajectory, threshold: f64) -> Result<f64> {
    let h = &traj.history;
    let limit = threshold * traj.params.a0;
    let j = h
        .iter()
        .position(|r| r.area_d0 <= limit)
        .ok_or(KrfError::SingularTimeNotReached { steps: h.len() })?;
    if j == 0 {
        return Err(KrfError::SingularTimeNotReached { steps: h.len() });
    }
    let (p, q) = (h[j - 1], h[j]);
    let slope = (q.area_d0 - p.area_d0) / (q.t - p.t);
    if !(slope < 0.0) {
        return Err(KrfError::SingularTimeNotReached { steps: h.len() });
    }
    Ok(q.t - q.area_d0 / slope)
}

/// Pushes the final manifold profile down to the orbifold by removing the remaining
/// zero-section area. Refuses a second surgery or a profile still far from
/// extinction.
pub fn surgery(traj: &mut FlowTrajectory, cfg: &SolverConfig) -> Result<RadialProfile> {
    if traj.has_surgery() {
        return Err(KrfError::SurgeryRefused("surgery was already performed on this trajectory".into()));
    }
    let last = traj
        .last()
        .ok_or_else(|| KrfError::SurgeryRefused("empty trajectory".into()))?;
    if last.phase != Phase::ManifoldX {
        return Err(KrfError::SurgeryRefused(format!("last snapshot is {}", last.phase.as_str())));
    }
    let mut state = FlowState::from_profile(traj.params, last, 0.0)?;
    let area = state.zero_section_area();
    let limit = 2.0 * cfg.stop_threshold * traj.params.a0;
    if area > limit {
        return Err(KrfError::SurgeryRefused(format!(
            "zero-section area {area:.3e} exceeds {limit:.3e}"
        )));
    }
    let removed = state.contract();
    traj.events.push(FlowEvent::SurgeryPerformed { t: state.t, area_removed: removed });
    Ok(state.profile())
}

/// Orbifold-phase continuation for `horizon` past the profile's time.
pub fn continue_on_orbifold(
    prof: &RadialProfile,
    cfg: &SolverConfig,
    params: FlowParams,
    horizon: f64,
    record: &[f64],
) -> Result<FlowTrajectory> {
    cfg.validate()?;
    if prof.phase != Phase::OrbifoldY {
        return Err(KrfError::InvalidParams(format!(
            "expected an orbifold-phase profile, got {}",
            prof.phase.as_str()
        )));
    }
    let mut state = FlowState::from_profile(params, prof, 0.0)?;
    let mut traj = FlowTrajectory::new(params);
    traj.push_snapshot(state.profile());
    let t_end = state.t + horizon;
    advance(&mut state, cfg, t_end, record, Pace::Restarted, None, &mut traj)?;
    Ok(traj)
}

/// ε-forced flow started at `T` from the manifold solution at `T − ε`.
pub fn run_eps_flow(
    prof_t_minus_eps: &RadialProfile,
    eps: f64,
    cfg: &SolverConfig,
    params: FlowParams,
    horizon: f64,
    record: &[f64],
) -> Result<FlowTrajectory> {
    cfg.validate()?;
    if !(eps > 0.0) {
        return Err(KrfError::InvalidParams(format!("eps must be positive (got {eps})")));
    }
    let mut start = prof_t_minus_eps.clone();
    start.t = params.singular_time();
    let mut state = FlowState::from_profile(params, &start, eps)?;
    let mut traj = FlowTrajectory::new(params);
    traj.push_snapshot(state.profile());
    let t_end = state.t + horizon;
    advance(&mut state, cfg, t_end, record, Pace::Restarted, None, &mut traj)?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calabi::{boundary_class, Grid};
    use crate::local_model::{fubini_type_derivative, fubini_type_profile, gamma_eps, hessian_oracle};
    use nalgebra::Complex;
    use proptest::prelude::*;

    fn default_grid() -> Grid {
        Grid::new(-24.0, 12.0, 2048).unwrap()
    }

    fn fubini(grid: Grid, b: f64, k: usize, phase: Phase) -> RadialProfile {
        RadialProfile::from_fn(
            grid,
            |r| fubini_type_profile(b, k, r),
            |r| fubini_type_derivative(b, k, r),
            phase,
            0.0,
        )
    }

    #[test]
    fn rhs_vanishes_on_flat_cones() {
        let g = Grid::new(-6.0, 6.0, 241).unwrap();
        for c in [1.0, 0.3, 7.0] {
            let prof = RadialProfile::euclidean(g, c);
            for n in 2..5 {
                let rhs = reduced_rhs(&prof, n, 1).unwrap();
                assert!(rhs.iter().all(|v| v.abs() < 1e-12), "n {n} c {c}");
            }
        }
    }

    #[test]
    fn rhs_of_fubini_profile_at_origin() {
        let g = Grid::new(-6.0, 6.0, 2401).unwrap();
        let prof = fubini(g, 1.0, 1, Phase::OrbifoldY);
        let rhs = reduced_rhs(&prof, 2, 1).unwrap();
        assert!((rhs[1200] + 1.5).abs() < 1e-6, "{}", rhs[1200]);
    }

    #[test]
    fn rhs_matches_ambient_ricci_potential() {
        // the flow moves the potential by log det of the complex Hessian
        let g = Grid::new(-6.0, 6.0, 1201).unwrap();
        for n in [2usize, 3] {
            let b = 1.7;
            let prof = fubini(g, b, 1, Phase::OrbifoldY);
            let rhs = reduced_rhs(&prof, n, 1).unwrap();
            let pot = move |rho: f64| b * rho.exp().ln_1p();
            let log_det = |rho: f64| {
                let r = (0.5 * rho).exp();
                let mut z = vec![Complex::new(0.0, 0.0); n];
                z[0] = Complex::new(0.6 * r, 0.0);
                z[n - 1] += Complex::new(0.0, 0.8 * r);
                hessian_oracle(pot, &z).unwrap().det.ln()
            };
            for i in [300usize, 500, 600, 700, 900] {
                let rho = g.rho(i);
                let d = 1e-2;
                let fd = (log_det(rho + d) - log_det(rho - d)) / (2.0 * d);
                assert!((fd - rhs[i]).abs() < 5e-4, "n {n} rho {rho}: {fd} vs {}", rhs[i]);
            }
        }
    }

    #[test]
    fn forcing_is_derivative_of_log_density_ratio() {
        for (n, k) in [(2usize, 1usize), (3, 2), (3, 1), (5, 3)] {
            for eps in [1e-2, 1e-4] {
                for rho in [-8.0f64, -2.0, 0.0, 1.5, 6.0] {
                    let pot = |x: f64| {
                        let r = (0.5 * x).exp();
                        -(gamma_eps(n, k, eps, r).unwrap() / gamma_eps(n, k, 0.0, r).unwrap()).ln()
                    };
                    let d = 1e-4;
                    let fd = (pot(rho + d) - pot(rho - d)) / (2.0 * d);
                    let f = eps_forcing(n, k, eps, rho);
                    assert!((fd - f).abs() < 1e-7 * (1.0 + f.abs()), "{n} {k} {eps} {rho}: {fd} vs {f}");
                }
            }
        }
    }

    #[test]
    fn forcing_limits() {
        assert!(eps_forcing(3, 1, 1e-12, 0.0) < 1e-11);
        assert!((eps_forcing(3, 1, 1e-3, -60.0) - 2.0).abs() < 1e-12);
        assert!(eps_forcing(2, 1, 1e-2, 700.0) >= 0.0);
    }

    #[test]
    fn zero_step_is_identity() {
        let p = FlowParams::new(2, 1, 1.0, 4.0).unwrap();
        let prof = FlowState::initial(p, default_grid()).unwrap().profile();
        let next = step(&prof, p, &SolverConfig::default(), 0.0).unwrap();
        assert_eq!(next.phi, prof.phi);
        assert_eq!(next.t, prof.t);
    }

    #[test]
    fn flat_cone_drift_is_second_order_in_spacing() {
        let p = FlowParams::new(3, 1, 1.0, 8.0).unwrap();
        let drift = |points: usize, scheme: Scheme| {
            let g = Grid::new(-6.0, 6.0, points).unwrap();
            let mut prof = RadialProfile::euclidean(g, 2.0);
            prof.phase = Phase::LocalModel;
            let cfg = SolverConfig { scheme, ..SolverConfig::default() };
            let mut s = FlowState::from_profile(p, &prof, 0.0).unwrap();
            let start = s.profile();
            for _ in 0..5 {
                s.step(1e-5, &cfg).unwrap();
            }
            s.profile()
                .phi
                .iter()
                .zip(&start.phi)
                .map(|(a, b)| ((a - b) / b).abs())
                .fold(0.0, f64::max)
        };
        for scheme in [Scheme::Explicit, Scheme::LaggedCrankNicolson] {
            let coarse = drift(97, scheme);
            let fine = drift(193, scheme);
            assert!(coarse < 1e-4, "{scheme:?} {coarse}");
            let order = (coarse / fine).log2();
            assert!(order > 1.8, "{scheme:?} order {order}");
        }
    }

    #[test]
    fn explicit_and_crank_nicolson_agree_on_one_step() {
        let p = FlowParams::new(2, 1, 1.0, 4.0).unwrap();
        let g = Grid::new(-6.0, 6.0, 97).unwrap();
        let prof = FlowState::initial(p, g).unwrap().profile();
        let ex = SolverConfig { scheme: Scheme::Explicit, ..SolverConfig::default() };
        let cn = SolverConfig::default();
        let a = step(&prof, p, &ex, 1e-5).unwrap();
        let b = step(&prof, p, &cn, 1e-5).unwrap();
        let gap = a.sup_distance(&b, g.rho_min);
        let moved = prof.sup_distance(&a, g.rho_min);
        assert!(gap < 1e-8 && moved > 1e-6, "gap {gap} moved {moved}");
    }

    #[test]
    fn explicit_scheme_reports_step_underflow() {
        let p = FlowParams::new(2, 1, 1.0, 4.0).unwrap();
        let prof = FlowState::initial(p, default_grid()).unwrap().profile();
        let ex = SolverConfig { scheme: Scheme::Explicit, ..SolverConfig::default() };
        assert!(matches!(step(&prof, p, &ex, 1e-3), Err(KrfError::CflFailure { .. })));
    }

    #[test]
    fn class_law_at_half_time() {
        for (p, b_half) in [
            (FlowParams::new(2, 1, 1.0, 4.0).unwrap(), 2.5),
            (FlowParams::new(3, 2, 1.0, 10.0).unwrap(), 7.5),
        ] {
            let init = FlowState::initial(p, default_grid()).unwrap().profile();
            let traj = run_to(&init, &SolverConfig::default(), p, 0.5, &[0.25]).unwrap();
            let last = traj.last().unwrap();
            assert_eq!(last.t, 0.5);
            let (a, b) = boundary_class(last, p.k);
            assert!((a - 0.5).abs() < 0.005 && (b - b_half).abs() < 0.01 * b_half, "{a} {b}");
            assert_eq!(traj.snapshots.len(), 3);
        }
    }

    #[test]
    fn class_law_near_extinction() {
        let p = FlowParams::new(2, 1, 1.0, 4.0).unwrap();
        let init = FlowState::initial(p, default_grid()).unwrap().profile();
        let traj = run_to(&init, &SolverConfig::default(), p, 0.99, &[]).unwrap();
        let (a, _) = boundary_class(traj.last().unwrap(), 1);
        assert!((a - 0.01).abs() < 0.001, "{a}");
        assert!(run_to(&init, &SolverConfig::default(), p, 1.0, &[]).is_err());
    }

    #[test]
    fn surgery_contracts_once() {
        let p = FlowParams::new(2, 1, 1.0, 4.0).unwrap();
        let cfg = SolverConfig { stop_threshold: 1e-3, ..SolverConfig::default() };
        let init = FlowState::initial(p, default_grid()).unwrap().profile();
        let mut early = run_to(&init, &cfg, p, 0.5, &[]).unwrap();
        assert!(matches!(surgery(&mut early, &cfg), Err(KrfError::SurgeryRefused(_))));
        let mut traj = run_to_extinction(&init, &cfg, p, &[]).unwrap();
        let t_star = detect_extinction(&traj, cfg.stop_threshold).unwrap();
        assert!((t_star - 1.0).abs() < 0.01);
        let y = surgery(&mut traj, &cfg).unwrap();
        assert_eq!(y.phase, Phase::OrbifoldY);
        assert!(y.phi[0] <= 1.1 * 1e-3);
        assert!(y.phi.windows(2).all(|w| w[1] > w[0]));
        assert!(matches!(surgery(&mut traj, &cfg), Err(KrfError::SurgeryRefused(_))));
        let cont = continue_on_orbifold(&y, &cfg, p, 0.0, &[]).unwrap();
        assert_eq!(cont.snapshots.len(), 1);
        assert_eq!(cont.snapshots[0].phi, y.phi);
    }

    #[test]
    fn identity_density_reproduces_reference() {
        let g = Grid::new(-24.0, 12.0, 2048).unwrap();
        for (n, k, b) in [(2usize, 1usize, 1.0), (3, 2, 5.0), (4, 1, 2.5)] {
            let y = fubini(g, b, k, Phase::OrbifoldY);
            let dens: Vec<f64> = (0..g.points).map(|i| y.phi[i].powi(n as i32 - 1) * y.dphi[i]).collect();
            let sol = solve_ma_quadrature(g, n, b, &dens, 0.0).unwrap();
            assert!((sol.c_eps - 1.0).abs() < 1e-7, "C {}", sol.c_eps);
            assert!(sol.profile.sup_distance(&y, g.rho_min) < 1e-6 * b);
            assert!(sol.ma_residual < 1e-8);
        }
    }

    #[test]
    fn quadrature_rejects_growing_tails() {
        let g = Grid::new(-4.0, 4.0, 64).unwrap();
        let dens: Vec<f64> = g.nodes().iter().map(|r| r.exp()).collect();
        assert!(matches!(solve_ma_quadrature(g, 2, 1.0, &dens, 0.0), Err(KrfError::Quadrature(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn accepted_steps_keep_metric_positive(a0 in 0.2f64..2.0, gap in 1.0f64..6.0, dt in 1e-5f64..5e-3) {
            let p = FlowParams::new(2, 1, a0, 3.0 * a0 + gap).unwrap();
            let g = Grid::new(-20.0, 10.0, 512).unwrap();
            let mut s = FlowState::initial(p, g).unwrap();
            for _ in 0..5 {
                s.step(dt, &SolverConfig::default()).unwrap();
            }
            let prof = s.profile();
            prop_assert!(prof.dphi.iter().all(|w| *w > 0.0));
            prop_assert!(prof.phi.windows(2).all(|w| w[1] > w[0]));
        }

        #[test]
        fn forcing_is_bounded_and_decreasing(eps in 1e-6f64..1.0, rho in -30.0f64..30.0, n in 2usize..6) {
            let k = 1 + (n - 2) / 2;
            let f = eps_forcing(n, k, eps, rho);
            prop_assert!(f > 0.0 && f <= (n - k) as f64);
            prop_assert!(eps_forcing(n, k, eps, rho + 0.5) <= f);
        }
    }
}
