//! Closed-form local geometry near the contracted divisor, in the orbifold chart
//! `Cⁿ/Z_k` with `r = |z|`, and a finite-difference Hessian oracle that checks it.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{KrfError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalModelParams {
    pub n: usize,
    pub k: usize,
    /// Mixing constant of the reference metric (weight of the Fubini-Study pullback).
    pub c: f64,
}

impl LocalModelParams {
    pub fn new(n: usize, k: usize, c: f64) -> Result<Self> {
        if n < 2 || k < 1 || !(c > 0.0) || !c.is_finite() {
            return Err(KrfError::InvalidParams(format!(
                "local model needs n >= 2, k >= 1, c > 0 (got n={n}, k={k}, c={c})"
            )));
        }
        Ok(Self { n, k, c })
    }

    /// Upper constant of the two-sided comparison with the Euclidean metric on the unit ball.
    pub fn sandwich_constant(&self) -> f64 {
        let k = self.k as f64;
        2.0 * k - 1.0 + self.c * k
    }
}

/// Eigenvalues of a U(n)-invariant complex Hessian at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientHessian {
    /// Eigenvalue on the complex-orthogonal complement of `z` (multiplicity n−1).
    pub lambda_sph: f64,
    /// Eigenvalue on the complex line through `z`.
    pub lambda_rad: f64,
    pub det: f64,
    pub at_rho: f64,
}

impl AmbientHessian {
    pub fn new(n: usize, lambda_sph: f64, lambda_rad: f64, at_rho: f64) -> Self {
        Self {
            lambda_sph,
            lambda_rad,
            det: lambda_sph.powi(n as i32 - 1) * lambda_rad,
            at_rho,
        }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.lambda_sph.max(self.lambda_rad)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.lambda_sph.min(self.lambda_rad)
    }
}

/// `|s|²_h` of the defining section of the divisor in the local chart: `r^{2k}`.
pub fn section_norm(k: usize, r: f64) -> Result<f64> {
    if k < 1 || !(r >= 0.0) {
        return Err(KrfError::InvalidParams(format!("section norm needs k >= 1 and r >= 0 (got k={k}, r={r})")));
    }
    Ok(r.powi(2 * k as i32))
}

/// Eigenvalues of the reference metric `i∂∂̄(r^{2k} + ck·log r²)`.
pub fn hat_metric_eigenvalues(p: &LocalModelParams, r: f64) -> Result<AmbientHessian> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(KrfError::InvalidParams(format!("hat metric is singular at r = {r}")));
    }
    let k = p.k as f64;
    let base = r.powi(2 * (p.k as i32 - 1));
    let lambda_rad = k * k * base;
    let lambda_sph = k * base + p.c * k / (r * r);
    Ok(AmbientHessian::new(p.n, lambda_sph, lambda_rad, 2.0 * r.ln()))
}

/// Momentum profile of the hat metric: `φ = k e^{kρ} + ck`.
pub fn hat_metric_momentum(p: &LocalModelParams, rho: f64) -> (f64, f64) {
    let k = p.k as f64;
    let e = (k * rho).exp();
    (k * e + p.c * k, k * k * e)
}

/// Volume density `(ε + r^{2k})^{(n−k)/k}`; at `ε = 0` this is `r^{2(n−k)}`.
pub fn gamma_eps(n: usize, k: usize, eps: f64, r: f64) -> Result<f64> {
    if k < 1 || k >= n {
        return Err(KrfError::InvalidParams(format!("density needs 1 <= k <= n-1 (got n={n}, k={k})")));
    }
    if !(eps >= 0.0) || !(r >= 0.0) {
        return Err(KrfError::InvalidParams(format!("density needs eps >= 0 and r >= 0 (got eps={eps}, r={r})")));
    }
    let s = eps + r.powi(2 * k as i32);
    Ok(s.powf((n - k) as f64 / k as f64))
}

/// Momentum profile `b·e^{kρ}/(1+e^{kρ})` of the potential `(b/k)·log(1 + r^{2k})`.
pub fn fubini_type_profile(b: f64, k: usize, rho: f64) -> f64 {
    b / (1.0 + (-(k as f64) * rho).exp())
}

/// Derivative in `ρ` of [`fubini_type_profile`].
pub fn fubini_type_derivative(b: f64, k: usize, rho: f64) -> f64 {
    let k = k as f64;
    let e = (-k * rho.abs()).exp();
    b * k * e / ((1.0 + e) * (1.0 + e))
}

/// Relative step of the finite-difference oracle.
pub const ORACLE_STEP: f64 = 7e-3;

fn real_hessian(f: &impl Fn(&[f64]) -> f64, x0: &[f64], h: f64) -> DMatrix<f64> {
    let m = x0.len();
    let mut x = x0.to_vec();
    let f0 = f(&x);
    let mut hess = DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        let xa = x[a];
        x[a] = xa + h;
        let fp = f(&x);
        x[a] = xa - h;
        let fm = f(&x);
        x[a] = xa;
        hess[(a, a)] = (fp - 2.0 * f0 + fm) / (h * h);
        for b in (a + 1)..m {
            let xb = x[b];
            let mut corner = |sa: f64, sb: f64| {
                x[a] = xa + sa * h;
                x[b] = xb + sb * h;
                let v = f(&x);
                x[a] = xa;
                x[b] = xb;
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * h * h);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    hess
}

/// Complex Hessian of `P(log|z|²)` by central differences in the real coordinates
/// of `Cⁿ` (step `ORACLE_STEP·|z|`, Richardson-extrapolated), diagonalized with a
/// general symmetric eigensolver.
pub fn hessian_oracle(potential: impl Fn(f64) -> f64, z: &[Complex<f64>]) -> Result<AmbientHessian> {
    let n = z.len();
    let r2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    if n == 0 || !(r2 > 0.0) {
        return Err(KrfError::InvalidParams("oracle needs a nonzero point".into()));
    }
    let x: Vec<f64> = z.iter().map(|c| c.re).chain(z.iter().map(|c| c.im)).collect();
    let f = |x: &[f64]| {
        let s: f64 = x.iter().map(|v| v * v).sum();
        potential(s.ln())
    };
    let m = 2 * n;
    // Richardson tableau over steps h, 2h, 4h: sixth order in h.
    let h = ORACLE_STEP * r2.sqrt();
    let h1 = real_hessian(&f, &x, h);
    let h2 = real_hessian(&f, &x, 2.0 * h);
    let h4 = real_hessian(&f, &x, 4.0 * h);
    let r1 = (&h1 * 4.0 - &h2) / 3.0;
    let r2c = (&h2 * 4.0 - &h4) / 3.0;
    let hess = (r1 * 16.0 - r2c) / 15.0;
    if hess.iter().any(|v| !v.is_finite()) {
        return Err(KrfError::NonKahlerProfile {
            rho: r2.ln(),
            detail: "non-finite finite differences".into(),
        });
    }
    // G_{ij̄} = ¼[(∂xi∂xj + ∂yi∂yj) + i(∂xi∂yj − ∂yi∂xj)]. The form v ↦ Σ G_{ij̄} vⁱ v̄ʲ
    // is v*Ḡv, embedded as a real 2n×2n symmetric matrix.
    let mut real = DMatrix::<f64>::zeros(m, m);
    for i in 0..n {
        for j in 0..n {
            let re = 0.25 * (hess[(i, j)] + hess[(n + i, n + j)]);
            let im = 0.25 * (hess[(i, n + j)] - hess[(n + i, j)]);
            real[(i, j)] = re;
            real[(n + i, n + j)] = re;
            real[(i, n + j)] = im;
            real[(n + i, j)] = -im;
        }
    }
    let eig = SymmetricEigen::new(real);
    // The radial eigenspace is spanned by z and iz; pick the two eigenvectors with
    // the largest overlap with that plane.
    let r = r2.sqrt();
    let zr: Vec<f64> = z.iter().map(|c| c.re / r).chain(z.iter().map(|c| c.im / r)).collect();
    let izr: Vec<f64> = z.iter().map(|c| -c.im / r).chain(z.iter().map(|c| c.re / r)).collect();
    let mut overlap: Vec<(f64, usize)> = (0..m)
        .map(|c| {
            let v = eig.eigenvectors.column(c);
            let p: f64 = v.iter().zip(&zr).map(|(a, b)| a * b).sum();
            let q: f64 = v.iter().zip(&izr).map(|(a, b)| a * b).sum();
            (p * p + q * q, c)
        })
        .collect();
    overlap.sort_by(|a, b| b.0.total_cmp(&a.0));
    let rad: Vec<usize> = overlap[..2].iter().map(|o| o.1).collect();
    let lambda_rad = 0.5 * (eig.eigenvalues[rad[0]] + eig.eigenvalues[rad[1]]);
    let sph: Vec<f64> = (0..m).filter(|c| !rad.contains(c)).map(|c| eig.eigenvalues[c]).collect();
    let lambda_sph = sph.iter().sum::<f64>() / sph.len() as f64;
    let det = eig.eigenvalues.iter().product::<f64>().abs().sqrt();
    if !(lambda_sph > 0.0 && lambda_rad > 0.0) {
        return Err(KrfError::NonKahlerProfile {
            rho: r2.ln(),
            detail: format!("oracle eigenvalues not positive ({lambda_sph}, {lambda_rad})"),
        });
    }
    Ok(AmbientHessian {
        lambda_sph,
        lambda_rad,
        det,
        at_rho: r2.ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn point(n: usize, r: f64, rng: &mut ChaCha8Rng) -> Vec<Complex<f64>> {
        let v: Vec<Complex<f64>> = (0..n)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|c| c * (r / s)).collect()
    }

    #[test]
    fn section_norm_values() {
        assert_eq!(section_norm(1, 1.0).unwrap(), 1.0);
        assert!((section_norm(2, 0.5).unwrap() - 0.0625).abs() < 1e-15);
        assert_eq!(section_norm(3, 0.0).unwrap(), 0.0);
        assert!(section_norm(2, -0.1).is_err());
    }

    #[test]
    fn hat_metric_examples() {
        let p = LocalModelParams::new(2, 1, 1.0).unwrap();
        let e = hat_metric_eigenvalues(&p, 1.0).unwrap();
        assert!((e.lambda_rad - 1.0).abs() < 1e-15 && (e.lambda_sph - 2.0).abs() < 1e-15);
        let p = LocalModelParams::new(3, 2, 1.0).unwrap();
        let e = hat_metric_eigenvalues(&p, 1.0).unwrap();
        assert!((e.lambda_rad - 4.0).abs() < 1e-15 && (e.lambda_sph - 4.0).abs() < 1e-15);
        assert!((e.det - 64.0).abs() < 1e-12);
        let p = LocalModelParams::new(4, 1, 0.37).unwrap();
        for r in [0.01, 0.3, 7.0] {
            assert_eq!(hat_metric_eigenvalues(&p, r).unwrap().lambda_rad, 1.0);
        }
        assert!(hat_metric_eigenvalues(&p, 0.0).is_err());
    }

    #[test]
    fn gamma_eps_examples() {
        assert!((gamma_eps(2, 1, 0.0, 0.3).unwrap() - 0.09).abs() < 1e-15);
        assert!((gamma_eps(3, 2, 1e-4, 0.0).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(gamma_eps(2, 1, 0.0, 0.0).unwrap(), 0.0);
        assert!(gamma_eps(2, 2, 0.0, 1.0).is_err());
    }

    #[test]
    fn fubini_type_limits() {
        assert_eq!(fubini_type_profile(1.0, 1, -800.0), 0.0);
        assert_eq!(fubini_type_profile(1.0, 1, 0.0), 0.5);
        assert_eq!(fubini_type_profile(3.0, 2, 800.0), 3.0);
        for rho in [-30.0f64, -3.0, 0.0, 0.7, 4.0, 30.0] {
            let e = (3.0 * rho).exp();
            let direct = 2.0 * 3.0 * e / ((1.0 + e) * (1.0 + e));
            assert!(rel(fubini_type_derivative(2.0, 3, rho), direct) < 1e-13);
        }
    }

    #[test]
    fn oracle_flat_and_fubini() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..5 {
            let z = point(n, 0.8, &mut rng);
            let e = hessian_oracle(f64::exp, &z).unwrap();
            assert!(rel(e.lambda_sph, 1.0) < 1e-6 && rel(e.lambda_rad, 1.0) < 1e-6);
        }
        let z = [Complex::new(0.6, 0.8), Complex::new(0.0, 0.0)];
        let e = hessian_oracle(|r: f64| r.exp().ln_1p(), &z).unwrap();
        assert!(rel(e.lambda_sph, 0.5) < 1e-6, "{e:?}");
        assert!(rel(e.lambda_rad, 0.25) < 1e-6, "{e:?}");
    }

    #[test]
    fn oracle_matches_hat_metric_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(2..5);
            let k = rng.gen_range(1..3);
            let c = rng.gen_range(0.5..2.0);
            let r = rng.gen_range(0.05..2.0);
            let p = LocalModelParams::new(n, k, c).unwrap();
            let kf = k as f64;
            let pot = move |rho: f64| (kf * rho).exp() + c * kf * rho;
            let e = hessian_oracle(pot, &point(n, r, &mut rng)).unwrap();
            let x = hat_metric_eigenvalues(&p, r).unwrap();
            assert!(rel(e.lambda_sph, x.lambda_sph) < 1e-6, "sph {e:?} {x:?}");
            assert!(rel(e.lambda_rad, x.lambda_rad) < 1e-6, "rad {e:?} {x:?}");
            assert!(rel(e.det, x.det) < 1e-5);
        }
    }

    #[test]
    fn sandwich_holds_when_radial_term_is_dominated() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let k = rng.gen_range(1..3);
            let c = rng.gen_range(0.5..3.0);
            let r = rng.gen_range(1e-3..1.0);
            let p = LocalModelParams::new(3, k, c).unwrap();
            let e = hat_metric_eigenvalues(&p, r).unwrap();
            let lo = k as f64 * r.powi(2 * (k as i32 - 1));
            let hi = p.sandwich_constant() / (r * r);
            for l in [e.lambda_sph, e.lambda_rad] {
                assert!(lo <= l * (1.0 + 1e-14) && l <= hi * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn sandwich_upper_constant_fails_for_large_twist_small_mixing() {
        // k² r^{2(k-1)} at r = 1 exceeds 2k-1+ck once (k-1)² > ck.
        let p = LocalModelParams::new(4, 3, 1.0).unwrap();
        let e = hat_metric_eigenvalues(&p, 1.0).unwrap();
        assert!(e.lambda_rad > p.sandwich_constant());
        assert!(e.lambda_sph <= p.sandwich_constant());
    }
}
