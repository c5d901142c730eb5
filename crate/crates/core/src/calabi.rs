//! Momentum profiles of U(n)-invariant metrics and the Kähler class bookkeeping.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{KrfError, Result};
use crate::local_model::AmbientHessian;

/// The bundle `M_{n,k}` and the initial class `(a0, b0)`: `a0` is the area of a line
/// in the zero section, `b0` the area of a line in the infinity section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub n: usize,
    pub k: usize,
    pub a0: f64,
    pub b0: f64,
}

impl FlowParams {
    pub fn new(n: usize, k: usize, a0: f64, b0: f64) -> Result<Self> {
        let p = Self { n, k, a0, b0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.n, self.k);
        if n < 2 {
            return Err(KrfError::InvalidParams(format!("n must be at least 2 (got {n})")));
        }
        if k < 1 || k > n - 1 {
            return Err(KrfError::InvalidParams(format!("need 1 <= k <= n-1 (got n={n}, k={k})")));
        }
        if !(self.a0 > 0.0 && self.a0 < self.b0 && self.b0.is_finite()) {
            return Err(KrfError::InvalidParams(format!(
                "need 0 < a0 < b0 (got a0={}, b0={})",
                self.a0, self.b0
            )));
        }
        let lhs = (n + k) as f64 * self.a0;
        let rhs = (n - k) as f64 * self.b0;
        if lhs >= rhs {
            return Err(KrfError::InvalidParams(format!(
                "zero section must contract first: (n+k)a0 = {lhs} must be below (n-k)b0 = {rhs}"
            )));
        }
        Ok(())
    }

    /// Time at which the zero-section area reaches zero.
    pub fn singular_time(&self) -> f64 {
        self.a0 / (self.n - self.k) as f64
    }

    /// Class on the manifold phase, `a_t = a0 + (k−n)t`, `b_t = b0 − (k+n)t`.
    pub fn class_at(&self, t: f64) -> Result<KahlerClass> {
        let t_end = self.singular_time();
        if !(t >= 0.0) || t > t_end * (1.0 + 1e-12) {
            return Err(KrfError::InvalidParams(format!("class requested at t={t} outside [0, {t_end}]")));
        }
        let (n, k) = (self.n as f64, self.k as f64);
        Ok(KahlerClass {
            a_t: ((n - k) * (t_end - t)).max(0.0),
            b_t: self.b0 - (k + n) * t,
            t,
        })
    }

    /// Infinity-section area on either phase, `b0 − (k+n)t`.
    pub fn b_at(&self, t: f64) -> f64 {
        self.b0 - (self.k + self.n) as f64 * t
    }

    /// Exponent `k/(k+1)` of the near-divisor bounds.
    pub fn delta(&self) -> f64 {
        self.k as f64 / (self.k as f64 + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KahlerClass {
    pub a_t: f64,
    pub b_t: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    ManifoldX,
    OrbifoldY,
    LocalModel,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::ManifoldX => "manifold_x",
            Phase::OrbifoldY => "orbifold_y",
            Phase::LocalModel => "local_model",
        }
    }

    /// Exponential order of a smooth profile at the left end.
    pub fn left_order(&self, k: usize) -> f64 {
        match self {
            Phase::ManifoldX => k as f64,
            Phase::OrbifoldY | Phase::LocalModel => 1.0,
        }
    }

    /// Exponential order at the right end: `−k` across the infinity section; a
    /// local model continues as a cone.
    pub fn right_order(&self, k: usize) -> f64 {
        match self {
            Phase::ManifoldX | Phase::OrbifoldY => -(k as f64),
            Phase::LocalModel => 1.0,
        }
    }
}

/// Uniform grid in `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub rho_min: f64,
    pub rho_max: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(rho_min: f64, rho_max: f64, points: usize) -> Result<Self> {
        if !(rho_min < rho_max) || !rho_min.is_finite() || !rho_max.is_finite() || points < 8 {
            return Err(KrfError::InvalidParams(format!(
                "grid needs rho_min < rho_max and at least 8 points (got [{rho_min}, {rho_max}], {points})"
            )));
        }
        Ok(Self { rho_min, rho_max, points })
    }

    pub fn spacing(&self) -> f64 {
        (self.rho_max - self.rho_min) / (self.points - 1) as f64
    }

    pub fn rho(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.rho_max
        } else {
            self.rho_min + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.rho(i)).collect()
    }

    /// Cell index `i` with `ρ_i ≤ ρ ≤ ρ_{i+1}` and the local offset in units of the spacing.
    pub fn locate(&self, rho: f64) -> Option<(usize, f64)> {
        let tol = 1e-12 * (self.rho_max - self.rho_min);
        if rho < self.rho_min - tol || rho > self.rho_max + tol {
            return None;
        }
        let s = ((rho - self.rho_min) / self.spacing()).clamp(0.0, (self.points - 1) as f64);
        let i = (s.floor() as usize).min(self.points - 2);
        Some((i, s - i as f64))
    }
}

/// Momentum profile `φ(ρ)` with its derivative on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub grid: Grid,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub phase: Phase,
    pub t: f64,
}

impl RadialProfile {
    /// Builds a profile from values and exact derivatives.
    pub fn new(grid: Grid, phi: Vec<f64>, dphi: Vec<f64>, phase: Phase, t: f64) -> Result<Self> {
        if phi.len() != grid.points || dphi.len() != grid.points {
            return Err(KrfError::InvalidParams(format!(
                "profile length {} / {} does not match grid size {}",
                phi.len(),
                dphi.len(),
                grid.points
            )));
        }
        Ok(Self { grid, phi, dphi, phase, t })
    }

    /// Samples a closed-form profile and its derivative.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, phase: Phase, t: f64) -> Self {
        let nodes = grid.nodes();
        Self {
            grid,
            phi: nodes.iter().map(|&r| f(r)).collect(),
            dphi: nodes.iter().map(|&r| df(r)).collect(),
            phase,
            t,
        }
    }

    /// Builds a profile from values alone; `φ′` from centered second-order differences
    /// and one-sided second-order stencils at the ends.
    pub fn from_values(grid: Grid, phi: Vec<f64>, phase: Phase, t: f64) -> Result<Self> {
        let n = grid.points;
        if phi.len() != n {
            return Err(KrfError::InvalidParams("profile length does not match grid".into()));
        }
        let h = grid.spacing();
        let mut dphi = vec![0.0; n];
        for i in 1..n - 1 {
            dphi[i] = (phi[i + 1] - phi[i - 1]) / (2.0 * h);
        }
        dphi[0] = (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * h);
        dphi[n - 1] = (3.0 * phi[n - 1] - 4.0 * phi[n - 2] + phi[n - 3]) / (2.0 * h);
        Ok(Self { grid, phi, dphi, phase, t })
    }

    /// Euclidean cone `c·e^ρ`.
    pub fn euclidean(grid: Grid, c: f64) -> Self {
        Self::from_fn(grid, |r| c * r.exp(), |r| c * r.exp(), Phase::LocalModel, 0.0)
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn rho(&self, i: usize) -> f64 {
        self.grid.rho(i)
    }

    /// Checks `φ′ > 0` everywhere and `φ > 0` on the interior.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.len() {
            let ok_d = self.dphi[i] > 0.0 && self.dphi[i].is_finite();
            let ok_v = self.phi[i].is_finite() && (self.phi[i] > 0.0 || i == 0);
            if !ok_d || !ok_v {
                return Err(KrfError::NonKahlerProfile {
                    rho: self.rho(i),
                    detail: format!("phi = {}, phi' = {}", self.phi[i], self.dphi[i]),
                });
            }
        }
        Ok(())
    }

    /// `(φ, φ′)` at an arbitrary `ρ` inside the grid. `φ` uses the cubic Hermite
    /// interpolant of the node data, `log φ′` a four-point cubic.
    pub fn eval(&self, rho: f64) -> Result<(f64, f64)> {
        let (i, s) = self.grid.locate(rho).ok_or_else(|| {
            KrfError::InvalidParams(format!(
                "rho = {rho} outside grid [{}, {}]",
                self.grid.rho_min, self.grid.rho_max
            ))
        })?;
        if s == 0.0 {
            return Ok((self.phi[i], self.dphi[i]));
        }
        let h = self.grid.spacing();
        let (p0, p1, d0, d1) = (self.phi[i], self.phi[i + 1], self.dphi[i], self.dphi[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let phi = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * h * d1;
        let dphi = if d0 > 0.0 && d1 > 0.0 {
            let n = self.len();
            let j0 = if i == 0 { 0 } else if i + 2 >= n { n - 4 } else { i - 1 };
            let g: Vec<f64> = (j0..j0 + 4).map(|j| self.dphi[j].max(f64::MIN_POSITIVE).ln()).collect();
            let x = s + (i - j0) as f64;
            lagrange4(&g, x).exp()
        } else {
            (1.0 - s) * d0 + s * d1
        };
        Ok((phi, dphi))
    }

    /// Largest deviation `sup |φ − ψ|` over the nodes with `ρ ≥ rho_from`.
    pub fn sup_distance(&self, other: &RadialProfile, rho_from: f64) -> f64 {
        (0..self.len())
            .filter(|&i| self.rho(i) >= rho_from)
            .map(|i| (self.phi[i] - other.phi[i]).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `rho,phi,dphi`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.len() * 72);
        s.push_str("rho,phi,dphi\n");
        for i in 0..self.len() {
            let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", self.rho(i), self.phi[i], self.dphi[i]);
        }
        s
    }

    /// Parses [`RadialProfile::to_csv`] output. A file with only `rho,phi` columns
    /// gets centered-difference derivatives.
    pub fn from_csv(text: &str, phase: Phase, t: f64) -> Result<Self> {
        let bad = |msg: String| KrfError::Artifact {
            path: "<profile csv>".into(),
            msg,
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let with_d = match cols.as_slice() {
            ["rho", "phi"] => false,
            ["rho", "phi", "dphi"] => true,
            _ => return Err(bad(format!("unexpected header {header:?}"))),
        };
        let (mut rho, mut phi, mut dphi) = (Vec::new(), Vec::new(), Vec::new());
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("line {}: {e}", ln + 2)))?;
            if vals.len() != cols.len() {
                return Err(bad(format!("line {}: expected {} columns", ln + 2, cols.len())));
            }
            rho.push(vals[0]);
            phi.push(vals[1]);
            if with_d {
                dphi.push(vals[2]);
            }
        }
        if rho.len() < 8 {
            return Err(bad("too few rows".into()));
        }
        let grid = Grid::new(rho[0], rho[rho.len() - 1], rho.len())?;
        if with_d {
            Self::new(grid, phi, dphi, phase, t)
        } else {
            Self::from_values(grid, phi, phase, t)
        }
    }
}

fn lagrange4(g: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (j, gj) in g.iter().enumerate().take(4) {
        let mut l = 1.0;
        for m in 0..4 {
            if m != j {
                l *= (x - m as f64) / (j as f64 - m as f64);
            }
        }
        acc += l * gj;
    }
    acc
}

/// Eigenvalues of the metric of a profile at `ρ`:
/// `λ_sph = φ e^{−ρ}`, `λ_rad = φ′ e^{−ρ}`, `det = φ^{n−1} φ′ e^{−nρ}`.
pub fn metric_eigenvalues(prof: &RadialProfile, n: usize, rho: f64) -> Result<AmbientHessian> {
    let (phi, dphi) = prof.eval(rho)?;
    eigenvalues_from_momentum(n, phi, dphi, rho)
}

pub fn eigenvalues_from_momentum(n: usize, phi: f64, dphi: f64, rho: f64) -> Result<AmbientHessian> {
    if !(phi > 0.0 && dphi > 0.0) {
        return Err(KrfError::NonKahlerProfile {
            rho,
            detail: format!("phi = {phi}, phi' = {dphi}"),
        });
    }
    let e = (-rho).exp();
    let det = (phi.ln() * (n as f64 - 1.0) + dphi.ln() - n as f64 * rho).exp();
    Ok(AmbientHessian {
        lambda_sph: phi * e,
        lambda_rad: dphi * e,
        det,
        at_rho: rho,
    })
}

/// Divisor areas read off a profile: the exponential tails are extrapolated to the
/// divisors, `φ(ρ_min) − φ′(ρ_min)/k` and `φ(ρ_max) + φ′(ρ_max)/k`. An orbifold
/// profile has no zero section and reports area 0 there.
pub fn boundary_class(prof: &RadialProfile, k: usize) -> (f64, f64) {
    let kf = k as f64;
    let last = prof.len() - 1;
    let right = prof.phi[last] + prof.dphi[last] / kf;
    let left = match prof.phase {
        Phase::OrbifoldY => 0.0,
        _ => prof.phi[0] - prof.dphi[0] / kf,
    };
    (left, right)
}

/// Mismatch of the end log-slopes `φ″/φ′` with a smooth extension: `m` on the left
/// (`k` across the zero section, 1 at the orbifold point), `−k` on the right.
pub fn smoothness_residual(prof: &RadialProfile, k: usize) -> (f64, f64) {
    let h = prof.grid.spacing();
    let last = prof.len() - 1;
    let g = |i: usize| prof.dphi[i].ln();
    let left_slope = (g(2) - g(0)) / (2.0 * h);
    let right_slope = (g(last) - g(last - 2)) / (2.0 * h);
    let m = prof.phase.left_order(k);
    ((left_slope - m).abs(), (right_slope - prof.phase.right_order(k)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_model::{self, fubini_type_derivative, fubini_type_profile, hat_metric_momentum, LocalModelParams};
    use nalgebra::Complex;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::new(-12.0, 12.0, 2049).unwrap()
    }

    #[test]
    fn singular_times() {
        assert_eq!(FlowParams::new(2, 1, 1.0, 4.0).unwrap().singular_time(), 1.0);
        assert_eq!(FlowParams::new(3, 2, 1.0, 10.0).unwrap().singular_time(), 1.0);
        assert_eq!(FlowParams::new(3, 1, 1.0, 8.0).unwrap().singular_time(), 0.5);
    }

    #[test]
    fn parameter_invariants() {
        assert!(FlowParams::new(2, 2, 1.0, 4.0).is_err());
        assert!(FlowParams::new(2, 1, 3.0, 4.0).is_err());
        assert!(FlowParams::new(2, 1, 1.0, 3.0).is_err());
        assert!(FlowParams::new(1, 1, 1.0, 4.0).is_err());
    }

    #[test]
    fn class_evolution() {
        let p = FlowParams::new(2, 1, 1.0, 4.0).unwrap();
        let c = p.class_at(0.0).unwrap();
        assert_eq!((c.a_t, c.b_t), (1.0, 4.0));
        let c = p.class_at(0.5).unwrap();
        assert_eq!((c.a_t, c.b_t), (0.5, 2.5));
        let c = p.class_at(1.0).unwrap();
        assert_eq!((c.a_t, c.b_t), (0.0, 1.0));
        assert!(p.class_at(1.5).is_err());
    }

    proptest! {
        #[test]
        fn extinction_identity(n in 2usize..7, kk in 1usize..6, a0 in 0.01f64..5.0, frac in 0.0f64..1.0) {
            prop_assume!(kk < n);
            let k = kk;
            let b0 = a0 * ((n + k) as f64 / (n - k) as f64) * 1.5;
            let p = FlowParams::new(n, k, a0, b0).unwrap();
            let t = frac * p.singular_time();
            let c = p.class_at(t).unwrap();
            let direct = a0 + (k as f64 - n as f64) * t;
            prop_assert!((c.a_t - direct).abs() <= 1e-12 * a0.max(1.0));
            prop_assert!(c.b_t > 0.0);
        }

        #[test]
        fn det_is_product_of_eigenvalues(rho in -10.0f64..10.0, phi in 0.01f64..10.0, dphi in 1e-6f64..10.0, n in 2usize..6) {
            let e = eigenvalues_from_momentum(n, phi, dphi, rho).unwrap();
            let prod = e.lambda_sph.powi(n as i32 - 1) * e.lambda_rad;
            prop_assert!((e.det - prod).abs() <= 1e-12 * prod);
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let g = grid();
        let eu = RadialProfile::euclidean(g, 1.0);
        let e = metric_eigenvalues(&eu, 3, 0.0).unwrap();
        assert!((e.lambda_sph - 1.0).abs() < 1e-14 && (e.lambda_rad - 1.0).abs() < 1e-14 && (e.det - 1.0).abs() < 1e-14);

        let fs = RadialProfile::from_fn(
            g,
            |r| fubini_type_profile(1.0, 1, r),
            |r| fubini_type_derivative(1.0, 1, r),
            Phase::OrbifoldY,
            0.0,
        );
        let e = metric_eigenvalues(&fs, 2, 0.0).unwrap();
        assert!((e.lambda_sph - 0.5).abs() < 1e-14 && (e.lambda_rad - 0.25).abs() < 1e-14);

        let lm = LocalModelParams::new(3, 2, 1.0).unwrap();
        let hat = RadialProfile::from_fn(
            g,
            |r| hat_metric_momentum(&lm, r).0,
            |r| hat_metric_momentum(&lm, r).1,
            Phase::LocalModel,
            0.0,
        );
        let e = metric_eigenvalues(&hat, 3, 0.0).unwrap();
        let x = local_model::hat_metric_eigenvalues(&lm, 1.0).unwrap();
        assert!((e.lambda_sph - x.lambda_sph).abs() < 1e-13 && (e.lambda_rad - x.lambda_rad).abs() < 1e-13);
    }

    #[test]
    fn eigenvalues_agree_with_oracle_on_grid_points() {
        let g = Grid::new(-6.0, 6.0, 97).unwrap();
        let b = 2.5;
        let prof = RadialProfile::from_fn(
            g,
            |r| 0.5 + fubini_type_profile(b, 2, r),
            |r| fubini_type_derivative(b, 2, r),
            Phase::ManifoldX,
            0.0,
        );
        let pot = |rho: f64| 0.5 * rho + (b / 2.0) * (2.0 * rho).exp().ln_1p();
        for i in 1..g.points - 1 {
            let rho = g.rho(i);
            let r = (0.5 * rho).exp();
            let z = [Complex::new(0.6 * r, 0.0), Complex::new(0.0, 0.8 * r)];
            let o = local_model::hessian_oracle(pot, &z).unwrap();
            let e = metric_eigenvalues(&prof, 2, rho).unwrap();
            assert!((o.lambda_sph - e.lambda_sph).abs() <= 1e-5 * e.lambda_sph, "rho {rho}");
            assert!((o.lambda_rad - e.lambda_rad).abs() <= 1e-5 * e.lambda_rad, "rho {rho}");
        }
    }

    #[test]
    fn boundary_class_of_initial_data() {
        let g = Grid::new(-24.0, 12.0, 2048).unwrap();
        let (a, b) = (1.0, 4.0);
        let x = RadialProfile::from_fn(
            g,
            |r| a + fubini_type_profile(b - a, 1, r),
            |r| fubini_type_derivative(b - a, 1, r),
            Phase::ManifoldX,
            0.0,
        );
        let (l, r) = boundary_class(&x, 1);
        assert!((l - 1.0).abs() < 1e-9 && (r - 4.0).abs() < 1e-9, "{l} {r}");
        let mut y = x.clone();
        y.phase = Phase::OrbifoldY;
        assert_eq!(boundary_class(&y, 1).0, 0.0);
    }

    #[test]
    fn smoothness_residual_examples() {
        let g = Grid::new(-24.0, 24.0, 2048).unwrap();
        let y = RadialProfile::from_fn(
            g,
            |r| fubini_type_profile(2.0, 2, r),
            |r| fubini_type_derivative(2.0, 2, r),
            Phase::OrbifoldY,
            0.0,
        );
        assert!(smoothness_residual(&y, 2).1 < 1e-9);
        let x = RadialProfile::from_fn(
            g,
            |r| 1.0 + fubini_type_profile(3.0, 2, r),
            |r| fubini_type_derivative(3.0, 2, r),
            Phase::ManifoldX,
            0.0,
        );
        assert!(smoothness_residual(&x, 2).0 < 1e-9);
        let eu = RadialProfile::euclidean(g, 1.0);
        assert!(smoothness_residual(&eu, 1).0 < 1e-9);
    }

    #[test]
    fn interpolation_is_fourth_order() {
        let g = Grid::new(-8.0, 8.0, 257).unwrap();
        let f = |r: f64| fubini_type_profile(1.0, 1, r);
        let df = |r: f64| fubini_type_derivative(1.0, 1, r);
        let p = RadialProfile::from_fn(g, f, df, Phase::OrbifoldY, 0.0);
        for rho in [-7.97, -3.3, 0.01, 2.5, 7.99] {
            let (v, d) = p.eval(rho).unwrap();
            assert!((v - f(rho)).abs() < 1e-8);
            assert!((d - df(rho)).abs() < 1e-7 * df(rho).max(1e-3));
        }
        assert!(p.eval(8.5).is_err());
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let g = Grid::new(-3.0, 2.0, 33).unwrap();
        let p = RadialProfile::from_fn(g, |r| 0.3 + r.exp() / 7.0, |r| r.exp() / 7.0, Phase::ManifoldX, 0.25);
        let q = RadialProfile::from_csv(&p.to_csv(), Phase::ManifoldX, 0.25).unwrap();
        assert_eq!(p, q);
        let two = "rho,phi\n".to_string()
            + &(0..9).map(|i| format!("{},{}\n", i as f64, (i as f64).exp())).collect::<String>();
        let q = RadialProfile::from_csv(&two, Phase::LocalModel, 0.0).unwrap();
        assert!((q.dphi[4] - 4f64.exp()).abs() < 0.2 * 4f64.exp());
    }

    #[test]
    fn centered_differences_from_values() {
        let g = Grid::new(-2.0, 2.0, 401).unwrap();
        let phi: Vec<f64> = g.nodes().iter().map(|r| r.exp()).collect();
        let p = RadialProfile::from_values(g, phi, Phase::LocalModel, 0.0).unwrap();
        for i in [0, 5, 200, 400] {
            assert!((p.dphi[i] - p.rho(i).exp()).abs() < 1e-3 * p.rho(i).exp());
        }
    }
}
