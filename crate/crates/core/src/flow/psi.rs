//! Regularized orbifold Monge-Ampère solves by one-dimensional quadrature.
//!
//! For a momentum profile the Monge-Ampère measure is `φ^{n−1}φ′ dρ` (up to a fixed
//! angular factor), so `(ω_Y + i∂∂̄ψ)^n = C·Ω` reduces to
//! `φⁿ(ρ) = n·C·∫_{−∞}^{ρ} f`, with `f` the radial density of `Ω` and `C` fixed by
//! `φ(+∞) = b`.

use crate::calabi::{FlowParams, Grid, Phase, RadialProfile};
use crate::error::{KrfError, Result};

#[derive(Debug, Clone)]
pub struct PsiSolution {
    pub profile: RadialProfile,
    pub c_eps: f64,
    /// Largest relative mismatch of `φ^{n−1}φ′` against `C·f`.
    pub ma_residual: f64,
    /// Largest relative mismatch of the returned `φ′` against centered differences
    /// of `φ` (interior nodes).
    pub derivative_residual: f64,
}

/// Momentum of the smooth orbifold reference `(1+e^{−kρ})^{−1/k}` and its derivative.
pub fn orbifold_momentum(k: usize, rho: f64) -> (f64, f64) {
    let kf = k as f64;
    let x = kf * rho;
    let log_phi = if x > 0.0 {
        -(-x).exp().ln_1p() / kf
    } else {
        -((-x) + x.exp().ln_1p()) / kf
    };
    let phi = log_phi.exp();
    let frac = if x > 0.0 {
        (-x).exp() / (1.0 + (-x).exp())
    } else {
        1.0 / (1.0 + x.exp())
    };
    (phi, phi * frac)
}

/// Radial density of `Ω_ε = σ^K ωⁿ/(ε + σ^K) + ε Ω_orb` where `σ = e^{kρ}/(1+e^{kρ})`
/// is the squared norm of the defining section and `ω` is the profile.
pub fn psi_density(n: usize, k: usize, eps: f64, big_k: u32, phi: f64, dphi: f64, rho: f64) -> f64 {
    let x = k as f64 * rho;
    let log_sigma = if x > 0.0 { -(-x).exp().ln_1p() } else { x - x.exp().ln_1p() };
    let s = (big_k as f64 * log_sigma).exp();
    let (po, dpo) = orbifold_momentum(k, rho);
    let nf = (n - 1) as i32;
    s / (eps + s) * phi.powi(nf) * dphi + eps * po.powi(nf) * dpo
}

/// Solves `φ^{n−1}φ′ = C f` with `φ → 0` at the orbifold point and `φ → b` at the
/// infinity section. Tails beyond the grid are integrated as exponentials with the
/// end log-slopes of `f`.
pub fn solve_ma_quadrature(grid: Grid, n: usize, b: f64, density: &[f64], t: f64) -> Result<PsiSolution> {
    let len = grid.points;
    if density.len() != len {
        return Err(KrfError::Quadrature(format!(
            "density has {} values for {len} grid points",
            density.len()
        )));
    }
    if density.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(KrfError::Quadrature("density must be positive and finite".into()));
    }
    let h = grid.spacing();
    let f = density;
    let left_rate = (f[1].ln() - f[0].ln()) / h;
    let right_rate = (f[len - 2].ln() - f[len - 1].ln()) / h;
    if !(left_rate > 0.0 && right_rate > 0.0) {
        return Err(KrfError::Quadrature(format!(
            "density tails are not integrable (log-slopes {left_rate:.3e}, {:.3e})",
            -right_rate
        )));
    }
    let mut cum = vec![0.0; len];
    cum[0] = f[0] / left_rate;
    for i in 0..len - 1 {
        let cell = if i == 0 {
            h * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0
        } else if i + 2 == len {
            h * (9.0 * f[i + 1] + 19.0 * f[i] - 5.0 * f[i - 1] + f[i - 2]) / 24.0
        } else {
            h * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]) / 24.0
        };
        cum[i + 1] = cum[i] + cell;
    }
    let total = cum[len - 1] + f[len - 1] / right_rate;
    let nf = n as f64;
    let c = b.powf(nf) / (nf * total);
    let phi: Vec<f64> = cum.iter().map(|x| (nf * c * x).powf(1.0 / nf)).collect();
    let dphi: Vec<f64> = (0..len).map(|i| c * f[i] / phi[i].powi(n as i32 - 1)).collect();
    let ma_residual = (0..len)
        .map(|i| ((phi[i].powi(n as i32 - 1) * dphi[i] - c * f[i]) / (c * f[i])).abs())
        .fold(0.0, f64::max);
    let derivative_residual = (1..len - 1)
        .map(|i| (((phi[i + 1] - phi[i - 1]) / (2.0 * h) - dphi[i]) / dphi[i]).abs())
        .fold(0.0, f64::max);
    let profile = RadialProfile::new(grid, phi, dphi, Phase::OrbifoldY, t)?;
    Ok(PsiSolution {
        profile,
        c_eps: c,
        ma_residual,
        derivative_residual,
    })
}

/// The regularized orbifold potential `ψ_{T,ε}` built from the manifold profile at
/// `T − ε`, returned as the momentum profile of `ω_Y + i∂∂̄ψ_{T,ε}`.
pub fn solve_psi_eps(params: FlowParams, eps: f64, big_k: u32, prof_t_minus_eps: &RadialProfile) -> Result<PsiSolution> {
    params.validate()?;
    if !(eps > 0.0) || big_k == 0 {
        return Err(KrfError::InvalidParams(format!("need eps > 0 and K >= 1 (got {eps}, {big_k})")));
    }
    prof_t_minus_eps.validate()?;
    let g = prof_t_minus_eps.grid;
    let density: Vec<f64> = (0..g.points)
        .map(|i| {
            psi_density(
                params.n,
                params.k,
                eps,
                big_k,
                prof_t_minus_eps.phi[i],
                prof_t_minus_eps.dphi[i],
                g.rho(i),
            )
        })
        .collect();
    let t = params.singular_time();
    let mut sol = solve_ma_quadrature(g, params.n, params.b_at(t), &density, t)?;
    // independent recomputation of the right-hand side
    sol.ma_residual = (0..g.points)
        .map(|i| {
            let rhs = sol.c_eps
                * psi_density(
                    params.n,
                    params.k,
                    eps,
                    big_k,
                    prof_t_minus_eps.phi[i],
                    prof_t_minus_eps.dphi[i],
                    g.rho(i),
                );
            let lhs = crate::calabi::eigenvalues_from_momentum(params.n, sol.profile.phi[i], sol.profile.dphi[i], g.rho(i))
                .map(|e| e.det * (params.n as f64 * g.rho(i)).exp())
                .unwrap_or(f64::NAN);
            ((lhs - rhs) / rhs).abs()
        })
        .fold(0.0, |a: f64, r| if r.is_nan() { f64::INFINITY } else { a.max(r) });
    Ok(sol)
}
