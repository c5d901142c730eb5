//! Finite-volume integrator for the reduced flow.
//!
//! The unknowns are `u = log φ′` at the nodes and `φ(ρ_min)`. Node `i` owns the
//! cell `[ρ_{i−1/2}, ρ_{i+1/2}]` (half cells at the ends), so `φ` is recovered by
//! summing `φ′` over cells and stays strictly increasing by construction. The flux
//! through a face is `(log φ′)′ + (n−1)φ′/φ − n + F_ε`; at the ends `(log φ′)′` is
//! replaced by the exponential order of the smooth extension.

use crate::calabi::{FlowParams, Grid, Phase, RadialProfile};
use crate::error::{KrfError, Result};
use crate::numerics::solve_tridiagonal;

use super::{eps_forcing, Scheme, SolverConfig};

const NEWTON_ITERS: usize = 30;
const NEWTON_TOL: f64 = 1e-10;
const THETA: f64 = 0.5;

/// Solver state of one flow run.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub params: FlowParams,
    pub grid: Grid,
    pub phase: Phase,
    pub eps: f64,
    pub t: f64,
    u: Vec<f64>,
    pmin: f64,
    force_face: Vec<f64>,
    force_left: f64,
    force_right: f64,
}

struct Fluxes {
    w: Vec<f64>,
    pf: Vec<f64>,
    pn: Vec<f64>,
    left: f64,
    div: Vec<f64>,
}

impl FlowState {
    /// Default initial data `a0 + (b0−a0)e^{kρ}/(1+e^{kρ})` on the manifold phase.
    pub fn initial(params: FlowParams, grid: Grid) -> Result<Self> {
        params.validate()?;
        let kf = params.k as f64;
        let span = params.b0 - params.a0;
        let u = grid
            .nodes()
            .iter()
            .map(|&r| {
                let x = kf * r;
                // log of k·span·e^x/(1+e^x)², stable for |x| large
                (kf * span).ln() + x - 2.0 * x.max(0.0) - 2.0 * (-x.abs()).exp().ln_1p()
            })
            .collect();
        let x0 = kf * grid.rho_min;
        let pmin = params.a0 + span / (1.0 + (-x0).exp());
        Ok(Self::assemble(params, grid, Phase::ManifoldX, 0.0, 0.0, u, pmin))
    }

    /// State carrying `φ(ρ_min)` and `φ′` of a profile; `φ` elsewhere is rebuilt by
    /// cell sums.
    pub fn from_profile(params: FlowParams, prof: &RadialProfile, eps: f64) -> Result<Self> {
        params.validate()?;
        prof.validate()?;
        if !(eps >= 0.0) {
            return Err(KrfError::InvalidParams(format!("eps must be nonnegative (got {eps})")));
        }
        let u = prof.dphi.iter().map(|w| w.ln()).collect();
        Ok(Self::assemble(params, prof.grid, prof.phase, eps, prof.t, u, prof.phi[0]))
    }

    fn assemble(params: FlowParams, grid: Grid, phase: Phase, eps: f64, t: f64, u: Vec<f64>, pmin: f64) -> Self {
        let h = grid.spacing();
        let (n, k) = (params.n, params.k);
        let force = |r: f64| if eps > 0.0 { eps_forcing(n, k, eps, r) } else { 0.0 };
        let force_face = (0..grid.points - 1).map(|i| force(grid.rho(i) + 0.5 * h)).collect();
        Self {
            params,
            grid,
            phase,
            eps,
            t,
            u,
            pmin,
            force_face,
            force_left: force(grid.rho_min),
            force_right: force(grid.rho_max),
        }
    }

    pub fn profile(&self) -> RadialProfile {
        let (w, _, pn) = self.reconstruct(&self.u, self.pmin);
        RadialProfile {
            grid: self.grid,
            phi: pn,
            dphi: w,
            phase: self.phase,
            t: self.t,
        }
    }

    pub fn phi_min(&self) -> f64 {
        self.pmin
    }

    pub fn dphi_min(&self) -> f64 {
        self.u[0].exp()
    }

    /// Extrapolated divisor areas, see [`crate::calabi::boundary_class`].
    pub fn areas(&self) -> (f64, f64) {
        crate::calabi::boundary_class(&self.profile(), self.params.k)
    }

    /// Zero-section area `φ(ρ_min) − φ′(ρ_min)/k` regardless of phase.
    pub fn zero_section_area(&self) -> f64 {
        self.pmin - self.dphi_min() / self.params.k as f64
    }

    /// Switches to the orbifold phase by removing the extrapolated zero-section area.
    pub(crate) fn contract(&mut self) -> f64 {
        let removed = self.zero_section_area();
        self.pmin = self.dphi_min() / self.params.k as f64;
        self.phase = Phase::OrbifoldY;
        removed
    }

    fn reconstruct(&self, u: &[f64], pmin: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h = self.grid.spacing();
        let n = u.len();
        let w: Vec<f64> = u.iter().map(|x| x.exp()).collect();
        let mut pf = vec![0.0; n - 1];
        let mut pn = vec![0.0; n];
        pn[0] = pmin;
        let mut acc = pmin + 0.5 * h * w[0];
        for i in 0..n - 1 {
            if i > 0 {
                acc += h * w[i];
            }
            pf[i] = acc;
            pn[i + 1] = acc + 0.5 * h * w[i + 1];
        }
        (w, pf, pn)
    }

    fn fluxes(&self, u: &[f64], pmin: f64) -> Option<Fluxes> {
        let h = self.grid.spacing();
        let nf = (self.params.n - 1) as f64;
        let nd = self.params.n as f64;
        let len = u.len();
        let (w, pf, pn) = self.reconstruct(u, pmin);
        if !(pmin > 0.0) || w.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let m = self.phase.left_order(self.params.k);
        let left = m + nf * w[0] / pn[0] - nd + self.force_left;
        let right = self.phase.right_order(self.params.k) + nf * w[len - 1] / pn[len - 1] - nd + self.force_right;
        let mut div = vec![0.0; len];
        let mut prev = left;
        for i in 0..len - 1 {
            let f = (u[i + 1] - u[i]) / h + nf * 0.5 * (w[i] + w[i + 1]) / pf[i] - nd + self.force_face[i];
            div[i] = f - prev;
            prev = f;
        }
        div[len - 1] = right - prev;
        div.iter().all(|d| d.is_finite()).then_some(Fluxes { w, pf, pn, left, div })
    }

    fn volume(&self, i: usize) -> f64 {
        let h = self.grid.spacing();
        if i == 0 || i + 1 == self.u.len() {
            0.5 * h
        } else {
            h
        }
    }

    /// `dφ(ρ_min)/dt` and `dφ′/dt` at the nodes.
    fn rates(&self, u: &[f64], pmin: f64) -> Option<(f64, Vec<f64>)> {
        let f = self.fluxes(u, pmin)?;
        let dw = f.div.iter().enumerate().map(|(i, d)| d / self.volume(i)).collect();
        Some((f.left, dw))
    }

    /// One θ-step with Newton iterations in `u`; `φ(ρ_min)` solves its quadratic
    /// boundary law exactly at each iterate.
    fn theta_step(&self, dt: f64) -> Option<(Vec<f64>, f64)> {
        let h = self.grid.spacing();
        let nf = (self.params.n - 1) as f64;
        let len = self.u.len();
        let old = self.fluxes(&self.u, self.pmin)?;
        let m = self.phase.left_order(self.params.k);
        let mut u = self.u.clone();
        let mut pmin = self.pmin;
        for _ in 0..NEWTON_ITERS {
            let cur = self.fluxes(&u, pmin)?;
            let w = &cur.w;
            let mut rhs = vec![0.0; len];
            let mut diag = vec![0.0; len];
            let mut lower = vec![0.0; len];
            let mut upper = vec![0.0; len];
            for i in 0..len {
                let vol = self.volume(i);
                rhs[i] = -(vol * (w[i] - old.w[i]) - dt * (THETA * cur.div[i] + (1.0 - THETA) * old.div[i]));
                diag[i] = vol * w[i];
            }
            for i in 0..len - 1 {
                let a = -1.0 / h + nf * 0.5 * w[i] / cur.pf[i];
                let b = 1.0 / h + nf * 0.5 * w[i + 1] / cur.pf[i];
                diag[i] -= dt * THETA * a;
                upper[i] = -dt * THETA * b;
                diag[i + 1] += dt * THETA * b;
                lower[i + 1] = dt * THETA * a;
            }
            diag[0] += dt * THETA * nf * w[0] / cur.pn[0];
            diag[len - 1] -= dt * THETA * nf * w[len - 1] / cur.pn[len - 1];
            let mut du = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
            let big = du.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
            if big > 1.0 {
                du.iter_mut().for_each(|d| *d /= big);
            }
            u.iter_mut().zip(&du).for_each(|(x, d)| *x += d);
            let w0 = u[0].exp();
            let bq = self.pmin + dt * (1.0 - THETA) * old.left + dt * THETA * (m - self.params.n as f64 + self.force_left);
            let cq = dt * THETA * nf * w0;
            pmin = 0.5 * (bq + (bq * bq + 4.0 * cq).sqrt());
            if big < NEWTON_TOL {
                return Some((u, pmin));
            }
        }
        None
    }

    fn heun_step(&self, dt: f64) -> Option<(Vec<f64>, f64)> {
        let w: Vec<f64> = self.u.iter().map(|x| x.exp()).collect();
        let (l1, d1) = self.rates(&self.u, self.pmin)?;
        let w1: Vec<f64> = w.iter().zip(&d1).map(|(x, d)| x + dt * d).collect();
        if w1.iter().any(|x| !(*x > 0.0)) {
            return None;
        }
        let u1: Vec<f64> = w1.iter().map(|x| x.ln()).collect();
        let p1 = self.pmin + dt * l1;
        let (l2, d2) = self.rates(&u1, p1)?;
        let w2: Vec<f64> = (0..w.len()).map(|i| w[i] + 0.5 * dt * (d1[i] + d2[i])).collect();
        if w2.iter().any(|x| !(*x > 0.0)) {
            return None;
        }
        Some((w2.iter().map(|x| x.ln()).collect(), self.pmin + 0.5 * dt * (l1 + l2)))
    }

    /// Largest stable explicit step: `σ Δρ² min φ′ / 4` (the diffusion coefficient
    /// is `1/φ′`; the extra factor 2 covers the half cells at the ends).
    pub fn explicit_limit(&self, safety: f64) -> f64 {
        let h = self.grid.spacing();
        let wmin = self.u.iter().fold(f64::INFINITY, |acc, x| acc.min(x.exp()));
        safety * h * h * wmin / 4.0
    }

    /// Advances by `dt`, subdividing as needed.
    pub fn step(&mut self, dt: f64, cfg: &SolverConfig) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        if !(dt > 0.0) {
            return Err(KrfError::InvalidParams(format!("step needs dt > 0 (got {dt})")));
        }
        let floor = cfg.dt_init * 1e-8;
        match cfg.scheme {
            Scheme::Explicit => {
                let mut left = dt;
                while left > 0.0 {
                    let sub = self.explicit_limit(cfg.dt_safety).min(left);
                    if sub < floor && sub < left {
                        return Err(KrfError::CflFailure { t: self.t, dt: sub });
                    }
                    let (u, p) = self.heun_step(sub).ok_or_else(|| self.positivity_error())?;
                    self.u = u;
                    self.pmin = p;
                    self.t += sub;
                    left -= sub;
                    if left < 1e-15 * dt {
                        break;
                    }
                }
            }
            Scheme::LaggedCrankNicolson => {
                let mut pieces = 1usize;
                loop {
                    let sub = dt / pieces as f64;
                    if sub < floor {
                        return Err(KrfError::CflFailure { t: self.t, dt: sub });
                    }
                    let mut trial = self.clone();
                    let mut ok = true;
                    for _ in 0..pieces {
                        match trial.theta_step(sub) {
                            Some((u, p)) => {
                                trial.u = u;
                                trial.pmin = p;
                            }
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        if pieces > 1 {
                            log::debug!("step at t={} split into {pieces} pieces", self.t);
                        }
                        self.u = trial.u;
                        self.pmin = trial.pmin;
                        self.t += dt;
                        break;
                    }
                    pieces *= 4;
                }
            }
        }
        self.check_positive()
    }

    fn positivity_error(&self) -> KrfError {
        KrfError::NonKahlerProfile {
            rho: self.grid.rho_min,
            detail: format!("explicit step lost positivity at t = {}", self.t),
        }
    }

    fn check_positive(&self) -> Result<()> {
        let (w, _, pn) = self.reconstruct(&self.u, self.pmin);
        for i in 0..w.len() {
            if !(w[i] > 0.0 && pn[i] > 0.0 && w[i].is_finite()) {
                return Err(KrfError::NonKahlerProfile {
                    rho: self.grid.rho(i),
                    detail: format!("phi = {}, phi' = {} at t = {}", pn[i], w[i], self.t),
                });
            }
        }
        Ok(())
    }
}
