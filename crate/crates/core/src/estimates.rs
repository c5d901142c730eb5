//! Measured pass/fail checks of the near-divisor bounds, the extinction laws, the
//! surgery and the ε-family, evaluated on stored trajectories.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calabi::{FlowParams, Grid, Phase, RadialProfile};
use crate::error::{KrfError, Result};
use crate::flow::{self, FlowState, FlowTrajectory, PsiSolution, Scheme, SolverConfig};
use crate::local_model::{
    fubini_type_derivative, fubini_type_profile, hat_metric_eigenvalues, hessian_oracle, LocalModelParams,
};
use crate::metric::{self, GhEstimate, MeshOptions, PointMetric};
use crate::numerics::linear_fit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The bound under test, stated in words.
    pub claim: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stderr: Option<f64>,
    /// Reported for information; passes whenever the measurement is finite.
    #[serde(default)]
    pub informational: bool,
    #[serde(default)]
    pub detail: String,
}

impl Check {
    fn new(name: &str, claim: &str, measured: f64, threshold: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            claim: claim.into(),
            measured,
            threshold,
            pass: pass && measured.is_finite(),
            exponent: None,
            stderr: None,
            informational: false,
            detail: String::new(),
        }
    }

    fn fit(mut self, alpha: f64, stderr: f64) -> Self {
        self.exponent = Some(alpha);
        self.stderr = Some(stderr);
        self
    }

    fn detail(mut self, d: String) -> Self {
        self.detail = d;
        self
    }

    fn info(mut self) -> Self {
        self.informational = true;
        self
    }

    fn failed(name: &str, claim: &str, err: &KrfError) -> Self {
        Self::new(name, claim, f64::NAN, f64::NAN, false).detail(err.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub run_id: String,
    pub params: FlowParams,
    pub checks: Vec<Check>,
}

impl EstimateReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A plot-ready table.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn sci(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", cells.join(", "))
}

fn sci_pairs(v: &[(f64, f64)]) -> String {
    let cells: Vec<String> = v.iter().map(|(a, b)| format!("{a:e}: {b:.3e}")).collect();
    format!("[{}]", cells.join(", "))
}

/// Log-log least squares: `(α, stderr)` with `y ≈ C x^α`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(KrfError::Fit(format!("need at least 4 paired points (got {}, {})", xs.len(), ys.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(KrfError::Fit("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let span = lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - lx.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(span > 0.0) {
        return Err(KrfError::Fit("abscissae are all equal".into()));
    }
    let (a, _, se) = linear_fit(&lx, &ly);
    Ok((a, se))
}

/// Whether `C x^p`, with `C` fixed at the point of largest `x`, dominates every point.
fn calibrated_bound(xs: &[f64], ys: &[f64], p: f64) -> (f64, f64) {
    let top = (0..xs.len()).max_by(|&a, &b| xs[a].total_cmp(&xs[b])).unwrap_or(0);
    let c = ys[top] / xs[top].powf(p);
    let worst = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y / (c * x.powf(p)))
        .fold(0.0, f64::max);
    (c, worst)
}

/// Snapshots inside `T−t ∈ [1e-3 T, 1e-2 T]`.
pub fn last_decade(traj: &FlowTrajectory, t_star: f64) -> Vec<&RadialProfile> {
    let lo = 1e-3 * t_star * (1.0 - 1e-9);
    let hi = 1e-2 * t_star * (1.0 + 1e-9);
    traj.snapshots
        .iter()
        .filter(|s| s.phase == Phase::ManifoldX && (t_star - s.t) >= lo && (t_star - s.t) <= hi)
        .collect()
}

pub fn check_extinction_time(t_star: f64, params: &FlowParams) -> Check {
    let t = params.singular_time();
    let rel = (t_star - t).abs() / t;
    Check::new(
        "extinction_time",
        "the zero section collapses at T = a0/(n-k)",
        rel,
        0.01,
        rel <= 0.01,
    )
    .detail(format!("t* = {t_star:.10}, T = {t:.10}"))
}

fn rate(traj: &FlowTrajectory, pick: impl Fn(&flow::HistoryRow) -> f64) -> Result<f64> {
    let t = traj.params.singular_time();
    let (xs, ys): (Vec<f64>, Vec<f64>) = traj
        .history
        .iter()
        .filter(|r| r.t >= 0.05 * t && r.t <= 0.95 * t)
        .map(|r| (r.t, pick(r)))
        .unzip();
    if xs.len() < 4 {
        return Err(KrfError::Fit("too few history rows for a rate fit".into()));
    }
    Ok(linear_fit(&xs, &ys).0)
}

/// Divisor area rates `k−n` and `−(k+n)`, fitted on `t ∈ [0.05T, 0.95T]`.
pub fn check_boundary_rates(traj: &FlowTrajectory) -> Vec<Check> {
    let (n, k) = (traj.params.n as f64, traj.params.k as f64);
    let mut out = Vec::new();
    for (name, expect, pick) in [
        ("zero_section_rate", k - n, (|r: &flow::HistoryRow| r.area_d0) as fn(&flow::HistoryRow) -> f64),
        ("infinity_section_rate", -(k + n), |r: &flow::HistoryRow| r.area_dinf),
    ] {
        let claim = "divisor areas move at the class rates k-n and -(k+n)";
        out.push(match rate(traj, pick) {
            Ok(r) => {
                let rel = (r - expect).abs() / expect.abs();
                Check::new(name, claim, rel, 0.01, rel <= 0.01).detail(format!("rate {r:.10}, expected {expect}"))
            }
            Err(e) => Check::failed(name, claim, &e),
        });
    }
    out
}

/// Area law over the last decade and the collapse of the divisor diameter.
pub fn check_divisor_decay(traj: &FlowTrajectory, t_star: f64) -> Vec<Check> {
    let p = traj.params;
    let expect = (p.n - p.k) as f64;
    let mut out = Vec::new();
    let claim = "the zero-section area decays like (n-k)(T-t)";
    let (xs, ys): (Vec<f64>, Vec<f64>) = traj
        .history
        .iter()
        .filter(|r| {
            let s = t_star - r.t;
            s >= 1e-3 * t_star && s <= 1e-2 * t_star
        })
        .map(|r| (t_star - r.t, r.area_d0))
        .unzip();
    out.push(if xs.len() >= 4 {
        let (slope, _, se) = linear_fit(&xs, &ys);
        let rel = (slope - expect).abs() / expect;
        Check::new("area_law", claim, rel, 0.005, rel <= 0.005)
            .fit(slope, se)
            .detail(format!("{} history rows, slope {slope:.8}", xs.len()))
    } else {
        Check::failed("area_law", claim, &KrfError::Fit("insufficient history in the last decade".into()))
    });

    let claim = "the divisor diameter is at most C (T-t)^{1/3}";
    let decade = last_decade(traj, t_star);
    let xs: Vec<f64> = decade.iter().map(|s| t_star - s.t).collect();
    let ys: Vec<f64> = decade
        .iter()
        .map(|s| std::f64::consts::PI * (2.0 * s.phi[0]).sqrt())
        .collect();
    out.push(if decade.len() < 10 {
        Check::failed(
            "divisor_diameter",
            claim,
            &KrfError::Fit(format!("{} snapshots in the last decade, need 10", decade.len())),
        )
    } else {
        match fit_exponent(&xs, &ys) {
            Ok((beta, se)) => {
                let (c, worst) = calibrated_bound(&xs, &ys, 1.0 / 3.0);
                let pass = beta >= 1.0 / 3.0 - 0.02 && worst <= 1.0 + 1e-9;
                Check::new("divisor_diameter", claim, beta, 1.0 / 3.0 - 0.02, pass)
                    .fit(beta, se)
                    .detail(format!("C = {c:.6}, worst ratio to bound {worst:.6}"))
            }
            Err(e) => Check::failed("divisor_diameter", claim, &e),
        }
    });
    out
}

/// `sup_ρ≤0 e^ρ max(λ_sph, λ_rad)` stays within 10× of its initial value.
pub fn check_trace_bound(traj: &FlowTrajectory) -> Check {
    let m = |s: &RadialProfile| {
        (0..s.len())
            .filter(|&i| s.rho(i) <= 0.0)
            .map(|i| s.phi[i].max(s.dphi[i]))
            .fold(0.0, f64::max)
    };
    let claim = "omega <= C r^-2 omega_Eucl near the divisor";
    let Some(first) = traj.snapshots.first() else {
        return Check::failed("trace_bound", claim, &KrfError::Fit("empty trajectory".into()));
    };
    let m0 = m(first);
    let sup = traj.snapshots.iter().map(m).fold(0.0, f64::max);
    let ratio = sup / m0;
    Check::new("trace_bound", claim, ratio, 10.0, ratio <= 10.0).detail(format!("M(0) = {m0:.6}, sup M = {sup:.6}"))
}

/// Near-extinction exponent of `φ′` and the radial length ladder.
pub fn check_radial_exponent(near: &RadialProfile, params: &FlowParams) -> Vec<Check> {
    let delta = params.delta();
    let g = near.grid;
    let mut out = Vec::new();
    let claim = "phi' <= C r^{2 delta} near the divisor, delta = k/(k+1)";
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..near.len())
        .filter(|&i| near.rho(i) >= g.rho_min + 2.0 && near.rho(i) <= -2.0)
        .map(|i| (near.rho(i), near.dphi[i].ln()))
        .unzip();
    out.push(if xs.len() < 4 {
        Check::failed("radial_exponent", claim, &KrfError::Fit("window below 4 nodes".into()))
    } else {
        let (alpha, _, se) = linear_fit(&xs, &ys);
        Check::new("radial_exponent", claim, alpha, delta - 0.05, alpha >= delta - 0.05)
            .fit(alpha, se)
            .detail(format!("t = {:.10}, delta = {delta:.6}", near.t))
    });

    let claim = "radial lengths L(r) <= C r^delta";
    let mut rs = Vec::new();
    let mut ls = Vec::new();
    let mut err = None;
    for j in 1.. {
        let r = 0.5f64.powi(j);
        let rho = 2.0 * r.ln();
        if rho < g.rho_min + 2.0 {
            break;
        }
        match metric::radial_length(near, g.rho_min, rho) {
            Ok(l) => {
                rs.push(r);
                ls.push(l);
            }
            Err(e) => {
                err = Some(e);
                break;
            }
        }
    }
    out.push(match err {
        Some(e) => Check::failed("radial_length", claim, &e),
        None => match fit_exponent(&rs, &ls) {
            Ok((a, se)) => {
                let (c, worst) = calibrated_bound(&rs, &ls, delta);
                Check::new("radial_length", claim, worst, 1.0, worst <= 1.0 + 1e-9)
                    .fit(a, se)
                    .detail(format!("{} ladder points, C = {c:.6}", rs.len()))
            }
            Err(e) => Check::failed("radial_length", claim, &e),
        },
    });
    out
}

/// Diameters of `A_{r,4r}` at `T` on a 6-point dyadic ladder against `C r^{δ/3}`.
pub fn check_annulus_diameter(limit: &RadialProfile, params: &FlowParams) -> (Check, Series) {
    let p = params.delta() / 3.0;
    let claim = "annuli A_{r,4r} have diameter <= C r^{delta/3} at T";
    let mut series = Series::new("annulus_diameter", &["r", "diameter_upper"]);
    let mut rs = Vec::new();
    let mut ds = Vec::new();
    for j in 1..=6 {
        let r = 0.5f64.powi(j);
        let a = 2.0 * r.ln();
        match metric::annulus_diameter_upper(limit, a, a + 2.0 * 4f64.ln(), params.k) {
            Ok(d) => {
                rs.push(r);
                ds.push(d);
                series.rows.push(vec![r, d]);
            }
            Err(e) => return (Check::failed("annulus_diameter", claim, &e), series),
        }
    }
    let check = match fit_exponent(&rs, &ds) {
        Ok((a, se)) => {
            let (c, worst) = calibrated_bound(&rs, &ds, p);
            Check::new("annulus_diameter", claim, worst, 1.0, worst <= 1.0 + 1e-9)
                .fit(a, se)
                .detail(format!("C = {c:.6}, bound exponent {p:.6}"))
        }
        Err(e) => Check::failed("annulus_diameter", claim, &e),
    };
    (check, series)
}

/// `φ(ρ_min, t)/φ(ρ_min, 0)`: at most 1.01, nonincreasing, and `1 − (n−k)t/a0` at `T/2`.
pub fn check_restriction_bound(traj: &FlowTrajectory) -> Check {
    let claim = "omega(t) restricted to the divisor is at most omega_0 restricted";
    let Some(first) = traj.snapshots.first() else {
        return Check::failed("restriction_bound", claim, &KrfError::Fit("empty trajectory".into()));
    };
    let p = traj.params;
    let base = first.phi[0];
    let ratios: Vec<(f64, f64)> = std::iter::once((first.t, 1.0))
        .chain(traj.history.iter().map(|r| (r.t, r.phi_min / base)))
        .collect();
    let max = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let monotone = ratios.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9));
    let half = 0.5 * p.singular_time();
    let at_half = ratios
        .iter()
        .min_by(|a, b| (a.0 - half).abs().total_cmp(&(b.0 - half).abs()))
        .map(|r| r.1)
        .unwrap_or(f64::NAN);
    let expect = 1.0 - (p.n - p.k) as f64 * half / p.a0;
    let half_ok = ((at_half - expect) / expect).abs() <= 0.01;
    Check::new("restriction_bound", claim, max, 1.01, max <= 1.01 && monotone && half_ok).detail(format!(
        "monotone {monotone}, ratio at T/2 {at_half:.8} (expected {expect:.8})"
    ))
}

/// Momentum of the reference `π*ω_Y`.
pub fn reference_momentum(params: &FlowParams, rho: f64) -> (f64, f64) {
    let b = params.b_at(params.singular_time());
    (fubini_type_profile(b, params.k, rho), fubini_type_derivative(b, params.k, rho))
}

fn lower_ratio(prof: &RadialProfile, params: &FlowParams) -> f64 {
    (0..prof.len())
        .map(|i| {
            let (py, dy) = reference_momentum(params, prof.rho(i));
            let a = if py > 0.0 { prof.phi[i] / py } else { f64::INFINITY };
            let b = if dy > 0.0 { prof.dphi[i] / dy } else { f64::INFINITY };
            a.min(b)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `c(t) = inf_ρ` eigenvalue ratio against `π*ω_Y` stays above `0.01 c(0)`.
pub fn check_lower_bound(traj: &FlowTrajectory) -> (Check, Series) {
    let claim = "omega(t) >= c pi^* omega_Y uniformly in t";
    let mut series = Series::new("lower_bound", &["t", "c"]);
    for s in &traj.snapshots {
        series.rows.push(vec![s.t, lower_ratio(s, &traj.params)]);
    }
    let Some(c0) = series.rows.first().map(|r| r[1]) else {
        return (Check::failed("lower_bound", claim, &KrfError::Fit("empty trajectory".into())), series);
    };
    let inf = series.rows.iter().map(|r| r[1]).fold(f64::INFINITY, f64::min);
    let ratio = inf / c0;
    (
        Check::new("lower_bound", claim, ratio, 0.01, ratio >= 0.01).detail(format!("c(0) = {c0:.6}, inf c = {inf:.6}")),
        series,
    )
}

/// Measured `δ′` of `ω ≤ C r^{−2(1−δ′)}(ω_0 + ω_Eucl)`; informational.
pub fn report_delta_prime(traj: &FlowTrajectory) -> Check {
    let claim = "omega <= C r^{-2(1-delta')} (omega_0 + omega_Eucl) for some delta' > 0";
    let Some(first) = traj.snapshots.first() else {
        return Check::failed("delta_prime", claim, &KrfError::Fit("empty trajectory".into())).info();
    };
    let g = first.grid;
    let idx: Vec<usize> = (0..first.len())
        .filter(|&i| first.rho(i) >= g.rho_min + 2.0 && first.rho(i) <= -2.0)
        .collect();
    let mut sup = vec![0.0f64; idx.len()];
    for s in traj.snapshots.iter().filter(|s| s.phase == Phase::ManifoldX) {
        for (j, &i) in idx.iter().enumerate() {
            let e = (-s.rho(i)).exp();
            let sph = s.phi[i] * e / (first.phi[i] * e + 1.0);
            let rad = s.dphi[i] * e / (first.dphi[i] * e + 1.0);
            sup[j] = sup[j].max(sph.max(rad));
        }
    }
    let rs: Vec<f64> = idx.iter().map(|&i| (0.5 * first.rho(i)).exp()).collect();
    match fit_exponent(&rs, &sup) {
        Ok((s, se)) => {
            let dp = (1.0 + 0.5 * s).min(1.0);
            Check::new("delta_prime", claim, dp, 0.0, dp > 0.0).fit(s, se).info()
        }
        Err(e) => Check::failed("delta_prime", claim, &e).info(),
    }
}

/// One `C` with `det G_ε ≥ σ^{(n−k)/k} det G_0 / C` for every `ε`, stable within 2×.
pub fn check_eps_volume_bound(eps_runs: &[(f64, &FlowTrajectory)], base: &RadialProfile) -> Check {
    let claim = "omega_eps^n >= |s|^{2(n-k)/k} omega_0^n / C uniformly in eps";
    if eps_runs.is_empty() {
        return Check::failed("eps_volume_bound", claim, &KrfError::Fit("no eps runs".into()));
    }
    let g = base.grid;
    let mut cs = Vec::new();
    for (_, traj) in eps_runs {
        let p = traj.params;
        let (n, k) = (p.n as f64, p.k as f64);
        let mut log_c = f64::NEG_INFINITY;
        for s in &traj.snapshots {
            for i in 0..s.len() {
                let rho = s.rho(i);
                if rho < g.rho_min + 2.0 || rho > g.rho_max - 2.0 {
                    continue;
                }
                let x = k * rho;
                let log_sigma = if x > 0.0 { -(-x).exp().ln_1p() } else { x - x.exp().ln_1p() };
                let v = (n - k) / k * log_sigma + (n - 1.0) * base.phi[i].ln() + base.dphi[i].ln()
                    - (n - 1.0) * s.phi[i].ln()
                    - s.dphi[i].ln();
                log_c = log_c.max(v);
            }
        }
        cs.push(log_c.exp());
    }
    let lo = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = cs.iter().cloned().fold(0.0, f64::max);
    let spread = hi / lo;
    let list: Vec<String> = eps_runs.iter().zip(&cs).map(|((e, _), c)| format!("eps {e:e}: C {c:.6}")).collect();
    Check::new("eps_volume_bound", claim, spread, 2.0, spread <= 2.0 && hi.is_finite()).detail(list.join("; "))
}

/// Gaps `sup_{ρ≥−4} |φ(t) − φ(T)|` at the orbifold monitors shrink towards `T`.
pub fn check_surgery_continuity(y: &FlowTrajectory, monitors: &[f64]) -> (Check, Series) {
    let claim = "the orbifold flow converges smoothly to the limit away from the orbifold point";
    let mut series = Series::new("surgery_continuity", &["t_minus_T", "gap"]);
    let Some(start) = y.snapshots.first() else {
        return (Check::failed("surgery_continuity", claim, &KrfError::Fit("empty trajectory".into())), series);
    };
    let t_sing = y.params.singular_time();
    let mut gaps = Vec::new();
    for &m in monitors {
        let s = match y.snapshots.iter().find(|s| (s.t - m).abs() <= 1e-9 * m.abs().max(1.0)) {
            Some(s) => s,
            None => {
                let e = KrfError::Fit(format!("no orbifold snapshot at t = {m}"));
                return (Check::failed("surgery_continuity", claim, &e), series);
            }
        };
        let gap = s.sup_distance(start, -4.0);
        series.rows.push(vec![m - t_sing, gap]);
        gaps.push(gap);
    }
    if gaps.len() < 2 {
        let e = KrfError::Fit("need at least two monitors".into());
        return (Check::failed("surgery_continuity", claim, &e), series);
    }
    let monotone = gaps.windows(2).all(|w| w[0] < w[1]);
    let first = gaps[0];
    (
        Check::new("surgery_continuity", claim, first, 1e-3, monotone && first < 1e-3)
            .detail(format!("gaps {}, increasing {monotone}", sci(&gaps))),
        series,
    )
}

/// `c(t) = φ(ρ_min) e^{−ρ_min}` on the orbifold run; informational.
pub fn report_orbifold_coefficient(y: &FlowTrajectory) -> (Check, Series) {
    let claim = "the orbifold-point coefficient stays positive and finite";
    let mut series = Series::new("orbifold_coefficient", &["t", "c"]);
    for s in &y.snapshots {
        series.rows.push(vec![s.t, s.phi[0] * (-s.grid.rho_min).exp()]);
    }
    let min = series.rows.iter().map(|r| r[1]).fold(f64::INFINITY, f64::min);
    let last = series.rows.last().map(|r| r[1]).unwrap_or(f64::NAN);
    (
        Check::new("orbifold_coefficient", claim, last, 0.0, min > 0.0 && last.is_finite())
            .info()
            .detail(format!("min {min:.6}")),
        series,
    )
}

/// ε-flow gaps to the orbifold run at a common time decrease with ε.
pub fn check_eps_convergence(gaps: &[(f64, f64)]) -> Check {
    let claim = "eps-forced flows converge to the orbifold continuation";
    let mut sorted = gaps.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = sorted.len() >= 2 && sorted.windows(2).all(|w| w[1].1 < w[0].1);
    let last = sorted.last().map(|g| g.1).unwrap_or(f64::NAN);
    Check::new("eps_convergence", claim, last, sorted.first().map(|g| g.1).unwrap_or(f64::NAN), decreasing)
        .detail(format!("gaps by eps {}", sci_pairs(&sorted)))
}

/// ψ_{T,ε} residuals below 1e-8 and `sup|ψ_{T,ε} − ψ_T|` decreasing in ε.
pub fn check_psi(solutions: &[(f64, &PsiSolution)], reference: &RadialProfile) -> Vec<Check> {
    let mut sorted = solutions.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let worst = sorted.iter().map(|s| s.1.ma_residual).fold(0.0, f64::max);
    let gaps: Vec<(f64, f64)> = sorted
        .iter()
        .map(|(e, s)| (*e, s.profile.sup_distance(reference, reference.grid.rho_min)))
        .collect();
    let decreasing = gaps.len() >= 2 && gaps.windows(2).all(|w| w[1].1 < w[0].1);
    vec![
        Check::new(
            "psi_residual",
            "psi_{T,eps} solves the Monge-Ampere equation",
            worst,
            1e-8,
            worst < 1e-8 && !sorted.is_empty(),
        ),
        Check::new(
            "psi_convergence",
            "psi_{T,eps} converges to psi_T in sup norm",
            gaps.last().map(|g| g.1).unwrap_or(f64::NAN),
            gaps.first().map(|g| g.1).unwrap_or(f64::NAN),
            decreasing,
        )
        .detail(format!("gaps by eps {}", sci_pairs(&gaps))),
    ]
}

/// GH distortion over the last decade: nonincreasing within slack and below
/// `0.05 diam(g(0))` at `T − 1e-3 T`.
pub fn check_gh_collapse(rows: &[(f64, GhEstimate)], diam0: f64, t_star: f64) -> Check {
    let claim = "(X, g(t)) converges to (Y, d_T) in the Gromov-Hausdorff sense";
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if rows.len() < 2 {
        return Check::failed("gh_collapse", claim, &KrfError::Fit("need at least two GH samples".into()));
    }
    let within = rows
        .windows(2)
        .all(|w| w[1].1.distortion <= w[0].1.distortion + w[0].1.slack.max(w[1].1.slack));
    let strict = rows.windows(2).all(|w| w[1].1.distortion < w[0].1.distortion);
    let target = t_star * (1.0 - 1e-3);
    let at = rows
        .iter()
        .min_by(|a, b| (a.0 - target).abs().total_cmp(&(b.0 - target).abs()))
        .unwrap();
    let threshold = 0.05 * diam0;
    Check::new("gh_collapse", claim, at.1.distortion, threshold, within && at.1.distortion < threshold).detail(format!(
        "monotone within slack {within}, strictly {strict}, diam(g(0)) {diam0:.6}, slack {:.4}",
        at.1.slack
    ))
}

/// Randomized `|ω(e, e′)| ≤ 1` over g-orthonormal frames at random points of the
/// given profiles, plus the equality cases.
pub fn check_wedge(profiles: &[&RadialProfile], n: usize, frames: usize, seed: u64) -> Check {
    let claim = "|omega(e,e')| <= 1 on g-orthonormal pairs";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut line_gap: f64 = 0.0;
    let mut lag: f64 = 0.0;
    let cvec = |rng: &mut ChaCha8Rng| -> Vec<Complex<f64>> {
        (0..n)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    };
    for i in 0..frames {
        let prof = profiles[i % profiles.len()];
        let g = prof.grid;
        let rho = rng.gen_range(g.rho_min + 1.0..g.rho_max - 1.0);
        // U(n)-invariance: the base point on the first axis loses no generality and
        // keeps the radial direction exact when the eigenvalue ratio is ~1e10
        let mut z = vec![Complex::new(0.0, 0.0); n];
        z[0] = Complex::new((0.5 * rho).exp(), 0.0);
        let m = match PointMetric::at(prof, &z) {
            Ok(m) => m,
            Err(e) => return Check::failed("wedge_inequality", claim, &e),
        };
        let unit = |v: Vec<Complex<f64>>| {
            let l = m.inner(&v, &v).sqrt();
            v.into_iter().map(|c| c / l).collect::<Vec<_>>()
        };
        // Euclidean Gram-Schmidt, then the exact map v -> G^{-1/2} v / sqrt(2)
        let to_g = |u: &[Complex<f64>]| {
            let along: Complex<f64> = m.zhat.iter().zip(u).map(|(a, b)| a.conj() * b).sum();
            let (s_sph, s_rad) = ((2.0 * m.lambda_sph).sqrt(), (2.0 * m.lambda_rad).sqrt());
            u.iter()
                .zip(&m.zhat)
                .map(|(c, zh)| (c - zh * along) / s_sph + zh * along / s_rad)
                .collect::<Vec<_>>()
        };
        let enorm = |v: Vec<Complex<f64>>| {
            let l = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|c| c / l).collect::<Vec<_>>()
        };
        let u1 = enorm(cvec(&mut rng));
        let w = cvec(&mut rng);
        // real Euclidean inner product, matching g
        let proj: f64 = u1.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        let u2 = enorm(w.iter().zip(&u1).map(|(b, a)| b - a * proj).collect());
        let (e, e2) = (to_g(&u1), to_g(&u2));
        match metric::wedge_bound_check(&m, &e, &e2) {
            Ok(v) => worst = worst.max(v),
            Err(err) => return Check::failed("wedge_inequality", claim, &err),
        }
        let je: Vec<_> = e.iter().map(|c| c * Complex::i()).collect();
        if let Ok(v) = metric::wedge_bound_check(&m, &e, &je) {
            line_gap = line_gap.max((v - 1.0).abs());
        }
        // real span of a unitary frame adapted to z is Lagrangian
        let x = unit(m.zhat.clone());
        let mut y = vec![Complex::new(0.0, 0.0); n];
        y[0] = -m.zhat[1].conj();
        y[1] = m.zhat[0].conj();
        if let Ok(v) = metric::wedge_bound_check(&m, &x, &unit(y)) {
            lag = lag.max(v);
        }
    }
    let pass = worst <= 1.0 + 1e-10 && line_gap <= 1e-10 && lag <= 1e-10;
    Check::new("wedge_inequality", claim, worst, 1.0 + 1e-10, pass)
        .detail(format!("{frames} frames; complex-line deviation {line_gap:.2e}, Lagrangian {lag:.2e}"))
}

/// Closed-form oracles: cone volume quadrature on a 10×10×10 lattice, the local
/// model eigenvalues against the finite-difference Hessian at 100 random points,
/// and the two-sided comparison at each of those points.
pub fn check_closed_forms(delta: f64, seed: u64) -> Vec<Check> {
    let mut lattice = Vec::new();
    for i in 0..10 {
        for j in 0..10 {
            for l in 0..10 {
                let r = 0.01 * 100f64.powf(i as f64 / 9.0);
                let th = 1.2 * j as f64 / 9.0;
                let eta = 0.05 + 0.45 * l as f64 / 9.0;
                lattice.push((r, th, eta));
            }
        }
    }
    let vol: Result<Vec<f64>> = lattice
        .par_iter()
        .map(|&(r, th, eta)| metric::tilde_volume_f(r, th, eta, delta).map(|(c, q)| ((c - q) / c).abs()))
        .collect();
    let claim = "cone-surface volume equals (2 pi/delta) sin(eta) (2 r cos(theta)/cos(eta))^delta";
    let cone = match vol {
        Ok(v) => {
            let worst = v.iter().cloned().fold(0.0, f64::max);
            Check::new("cone_volume_oracle", claim, worst, 1e-6, worst <= 1e-6).detail(format!("{} lattice points", v.len()))
        }
        Err(e) => Check::failed("cone_volume_oracle", claim, &e),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_rel: f64 = 0.0;
    let mut sandwich_ok = true;
    let mut err = None;
    for _ in 0..100 {
        let n = rng.gen_range(2..5);
        let k = rng.gen_range(1..3);
        let c = rng.gen_range(0.5..2.0);
        let r = rng.gen_range(0.05f64..1.0);
        let dir: Vec<Complex<f64>> = (0..n)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = dir.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let z: Vec<Complex<f64>> = dir.iter().map(|v| v * (r / s)).collect();
        let kf = k as f64;
        let res = LocalModelParams::new(n, k, c).and_then(|p| {
            let x = hat_metric_eigenvalues(&p, r)?;
            let o = hessian_oracle(move |rho: f64| (kf * rho).exp() + c * kf * rho, &z)?;
            Ok((p, x, o))
        });
        match res {
            Ok((p, x, o)) => {
                worst_rel = worst_rel
                    .max(((o.lambda_sph - x.lambda_sph) / x.lambda_sph).abs())
                    .max(((o.lambda_rad - x.lambda_rad) / x.lambda_rad).abs());
                let lo = kf * r.powi(2 * (k as i32 - 1));
                let hi = p.sandwich_constant() / (r * r);
                for l in [x.lambda_sph, x.lambda_rad] {
                    sandwich_ok &= lo <= l * (1.0 + 1e-14) && l <= hi * (1.0 + 1e-14);
                }
            }
            Err(e) => {
                err = Some(e);
                break;
            }
        }
    }
    let hessian = match &err {
        Some(e) => Check::failed("local_model_oracle", "local model eigenvalues match its Hessian", e),
        None => Check::new(
            "local_model_oracle",
            "local model eigenvalues match its Hessian",
            worst_rel,
            1e-6,
            worst_rel <= 1e-6,
        ),
    };
    let sandwich = Check::new(
        "local_model_sandwich",
        "k r^{2(k-1)} <= lambda <= (2k-1+ck) r^-2 on the unit ball",
        if sandwich_ok { 0.0 } else { 1.0 },
        0.0,
        sandwich_ok && err.is_none(),
    )
    .detail("k in {1, 2}".into());
    vec![cone, hessian, sandwich]
}

/// One explicit step against one lagged-CN step from the default initial data on
/// a grid where `dt` is within the explicit limit, for `dt·2^{-j}`, `j = 0..3`.
pub fn check_scheme_agreement(params: FlowParams, cfg: &SolverConfig, dt: f64) -> Check {
    let claim = "explicit and lagged Crank-Nicolson steps agree to O(dt^2)";
    let state = match Grid::new(-3.0, 3.0, 97).and_then(|g| FlowState::initial(params, g)) {
        Ok(s) => s,
        Err(e) => return Check::failed("scheme_agreement", claim, &e),
    };
    let limit = state.explicit_limit(cfg.dt_safety);
    if dt > limit {
        return Check::failed(
            "scheme_agreement",
            claim,
            &KrfError::CflFailure { t: 0.0, dt: limit },
        );
    }
    let prof = state.profile();
    let mut dts = Vec::new();
    let mut gaps = Vec::new();
    for j in 0..4 {
        let h = dt * 0.5f64.powi(j);
        let a = flow::step(&prof, params, &SolverConfig { scheme: Scheme::Explicit, ..*cfg }, h);
        let b = flow::step(&prof, params, &SolverConfig { scheme: Scheme::LaggedCrankNicolson, ..*cfg }, h);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                dts.push(h);
                gaps.push(a.sup_distance(&b, a.grid.rho_min));
            }
            (Err(e), _) | (_, Err(e)) => return Check::failed("scheme_agreement", claim, &e),
        }
    }
    match fit_exponent(&dts, &gaps) {
        Ok((order, se)) => {
            let pass = order >= 1.9 && gaps[0] < 1e-8;
            Check::new("scheme_agreement", claim, order, 2.0 - 0.1, pass)
                .fit(order, se)
                .detail(format!("97-point grid on [-3, 3], dt {}, gaps {}", sci(&dts), sci(&gaps)))
        }
        Err(e) => Check::failed("scheme_agreement", claim, &e),
    }
}

/// Everything the report is computed from; the runner persists exactly this.
#[derive(Debug, Clone)]
pub struct Evidence {
    pub run_id: String,
    pub params: FlowParams,
    pub solver: SolverConfig,
    pub seed: u64,
    pub t_star: f64,
    pub x: FlowTrajectory,
    /// Starts with the surgery profile.
    pub y: FlowTrajectory,
    pub y_monitors: Vec<f64>,
    pub eps: Vec<(f64, FlowTrajectory)>,
    /// Time at which ε-flows are compared to the orbifold run.
    pub eps_compare: f64,
    pub eps_k: u32,
    pub mesh: MeshOptions,
}

pub struct Evaluation {
    pub report: EstimateReport,
    pub series: Vec<Series>,
}

fn gap_at(traj: &FlowTrajectory, other: &FlowTrajectory, t: f64) -> Result<f64> {
    fn find(tr: &FlowTrajectory, t: f64) -> Result<&RadialProfile> {
        tr.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or_else(|| KrfError::Fit(format!("no snapshot at t = {t}")))
    }
    let (a, b) = (find(traj, t)?, find(other, t)?);
    Ok(a.sup_distance(b, a.grid.rho_min))
}

pub fn evaluate(ev: &Evidence) -> Result<Evaluation> {
    let p = ev.params;
    let x0 = ev.x.snapshots.first().ok_or_else(|| KrfError::Fit("empty manifold trajectory".into()))?;
    let near = ev.x.last().ok_or_else(|| KrfError::Fit("empty manifold trajectory".into()))?;
    let limit = ev.y.snapshots.first().ok_or_else(|| KrfError::Fit("empty orbifold trajectory".into()))?;
    let mut checks = vec![check_extinction_time(ev.t_star, &p)];
    let mut series = Vec::new();

    checks.extend(check_boundary_rates(&ev.x));
    checks.extend(check_divisor_decay(&ev.x, ev.t_star));
    let mut areas = Series::new("areas", &["t", "area_d0", "area_dinf"]);
    let mut diam = Series::new("divisor_diameter", &["t", "T_minus_t", "diameter"]);
    for r in &ev.x.history {
        areas.rows.push(vec![r.t, r.area_d0, r.area_dinf]);
    }
    for s in ev.x.snapshots.iter() {
        diam.rows.push(vec![s.t, ev.t_star - s.t, std::f64::consts::PI * (2.0 * s.phi[0]).sqrt()]);
    }
    series.push(areas);
    series.push(diam);

    checks.extend(check_radial_exponent(near, &p));
    let (c, s) = check_annulus_diameter(limit, &p);
    checks.push(c);
    series.push(s);

    // GH samples over the last decade, against the limit with its completion point
    let decade = last_decade(&ev.x, ev.t_star);
    let gh: Result<Vec<(f64, GhEstimate)>> = decade
        .par_iter()
        .map(|s| metric::gh_distortion(s, limit, p.k, ev.mesh).map(|e| (s.t, e)))
        .collect();
    let diam0 = metric::gh_distortion(x0, x0, p.k, ev.mesh)?.sample_diameter;
    let claim = "(X, g(t)) converges to (Y, d_T) in the Gromov-Hausdorff sense";
    match gh {
        Ok(rows) => {
            let mut s = Series::new("gh_distortion", &["t", "T_minus_t", "distortion", "far_max", "near_max", "slack"]);
            for (t, e) in &rows {
                s.rows.push(vec![*t, ev.t_star - t, e.distortion, e.far_max, e.near_max, e.slack]);
            }
            series.push(s);
            checks.push(check_gh_collapse(&rows, diam0, ev.t_star));
        }
        Err(e) => checks.push(Check::failed("gh_collapse", claim, &e)),
    }

    checks.push(check_trace_bound(&ev.x));
    checks.push(check_restriction_bound(&ev.x));
    let (c, s) = check_lower_bound(&ev.x);
    checks.push(c);
    series.push(s);
    checks.push(report_delta_prime(&ev.x));

    let (c, s) = check_surgery_continuity(&ev.y, &ev.y_monitors);
    checks.push(c);
    series.push(s);
    let (c, s) = report_orbifold_coefficient(&ev.y);
    checks.push(c);
    series.push(s);

    let mut eps_series = Series::new("eps_gaps", &["eps", "flow_gap", "psi_gap", "ma_residual", "derivative_residual", "c_eps"]);
    let mut flow_gaps = Vec::new();
    let mut psis = Vec::new();
    for (eps, traj) in &ev.eps {
        let g = gap_at(traj, &ev.y, ev.eps_compare);
        let start = ev
            .x
            .nearest(p.singular_time() - eps)
            .ok_or_else(|| KrfError::Fit("no manifold snapshot for psi".into()))?;
        let psi = flow::solve_psi_eps(p, *eps, ev.eps_k, start);
        match (g, psi) {
            (Ok(g), Ok(psi)) => {
                let pg = psi.profile.sup_distance(limit, limit.grid.rho_min);
                eps_series
                    .rows
                    .push(vec![*eps, g, pg, psi.ma_residual, psi.derivative_residual, psi.c_eps]);
                flow_gaps.push((*eps, g));
                psis.push((*eps, psi));
            }
            (Err(e), _) | (_, Err(e)) => {
                checks.push(Check::failed("eps_convergence", "eps-forced flows converge to the orbifold continuation", &e));
            }
        }
    }
    series.push(eps_series);
    if !ev.eps.is_empty() {
        checks.push(check_eps_convergence(&flow_gaps));
        let refs: Vec<(f64, &PsiSolution)> = psis.iter().map(|(e, s)| (*e, s)).collect();
        checks.extend(check_psi(&refs, limit));
        let runs: Vec<(f64, &FlowTrajectory)> = ev.eps.iter().map(|(e, t)| (*e, t)).collect();
        checks.push(check_eps_volume_bound(&runs, x0));
    }

    let mut wedge_profiles = vec![x0, near, limit];
    if let Some(l) = ev.y.last() {
        wedge_profiles.push(l);
    }
    checks.push(check_wedge(&wedge_profiles, p.n, 10_000, ev.seed));
    checks.extend(check_closed_forms(p.delta(), ev.seed));
    checks.push(check_scheme_agreement(p, &ev.solver, 1e-5));

    Ok(Evaluation {
        report: EstimateReport {
            run_id: ev.run_id.clone(),
            params: p,
            checks,
        },
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calabi::Grid;
    use crate::flow::{FlowState, HistoryRow};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn fit_exponent_examples() {
        let xs: Vec<f64> = (1..10).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (a, se) = fit_exponent(&xs, &ys).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && se < 1e-10);
        let (a, se) = fit_exponent(&xs, &vec![3.0; xs.len()]).unwrap();
        assert!(a.abs() < 1e-12 && se < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..40).map(|i| 1.1f64.powi(i)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 3.0 * x.sqrt() * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let (a, se) = fit_exponent(&xs, &ys).unwrap();
        assert!((a - 0.5).abs() < 0.02 && se < 0.02);
        assert!(fit_exponent(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_exponent(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn calibration_uses_the_coarsest_scale() {
        let xs = [1.0, 0.5, 0.25, 0.125];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 2.0 * x.powf(0.5)).collect();
        let (c, worst) = calibrated_bound(&xs, &ys, 1.0 / 3.0);
        assert!((c - 2.0).abs() < 1e-12 && worst <= 1.0 + 1e-12);
        let (_, worst) = calibrated_bound(&xs, &ys, 0.75);
        assert!(worst > 1.0);
    }

    #[test]
    fn euclidean_annuli_scale_linearly() {
        let g = Grid::new(-30.0, 6.0, 2049).unwrap();
        let mut e = RadialProfile::euclidean(g, 1.0);
        e.phase = Phase::LocalModel;
        let p = FlowParams::new(2, 1, 1.0, 4.0).unwrap();
        let (c, s) = check_annulus_diameter(&e, &p);
        assert!(c.pass);
        assert!((c.exponent.unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(s.rows.len(), 6);
    }

    fn synthetic(params: FlowParams) -> FlowTrajectory {
        let g = Grid::new(-24.0, 12.0, 512).unwrap();
        let init = FlowState::initial(params, g).unwrap().profile();
        let mut traj = FlowTrajectory::new(params);
        let t_end = params.singular_time();
        let (n, k) = (params.n as f64, params.k as f64);
        for i in 0..200 {
            let t = t_end * i as f64 / 200.0;
            traj.history.push(HistoryRow {
                t,
                dt: t_end / 200.0,
                area_d0: params.a0 - (n - k) * t,
                area_dinf: params.b0 - (n + k) * t,
                phi_min: params.a0 - (n - k) * t,
                left_coeff: 0.0,
            });
        }
        traj.snapshots.push(init);
        traj
    }

    #[test]
    fn exact_laws_pass_on_synthetic_history() {
        let p = FlowParams::new(3, 1, 1.0, 8.0).unwrap();
        let traj = synthetic(p);
        for c in check_boundary_rates(&traj) {
            assert!(c.pass && c.measured < 1e-10, "{c:?}");
        }
        let r = check_restriction_bound(&traj);
        assert!(r.pass, "{r:?}");
        assert!(check_extinction_time(0.5 * 1.004, &p).pass);
        assert!(!check_extinction_time(0.5 * 1.02, &p).pass);
    }

    #[test]
    fn stationary_trajectory_has_constant_trace() {
        let g = Grid::new(-10.0, 5.0, 256).unwrap();
        let p = FlowParams::new(2, 1, 1.0, 4.0).unwrap();
        let mut traj = FlowTrajectory::new(p);
        for t in [0.0, 0.5, 1.0] {
            let mut e = RadialProfile::euclidean(g, 1.0);
            e.t = t;
            traj.snapshots.push(e);
        }
        let c = check_trace_bound(&traj);
        assert!(c.pass && (c.measured - 1.0).abs() < 1e-15);
    }

    #[test]
    fn initial_data_lower_bound_is_the_scale_factor() {
        let p = FlowParams::new(2, 1, 1.0, 4.0).unwrap();
        let g = Grid::new(-24.0, 12.0, 1024).unwrap();
        let x0 = FlowState::initial(p, g).unwrap().profile();
        // φ′_0 = (b0 − a0)σ′ and π*ω_Y has φ′ = b_T σ′
        let expect = (p.b0 - p.a0) / p.b_at(p.singular_time());
        assert!((lower_ratio(&x0, &p) - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn continuity_and_eps_orderings() {
        let c = check_eps_convergence(&[(1e-2, 3e-2), (1e-4, 4e-4), (1e-3, 3e-3)]);
        assert!(c.pass);
        let c = check_eps_convergence(&[(1e-2, 3e-2), (1e-3, 5e-2)]);
        assert!(!c.pass);
    }

    #[test]
    fn closed_form_checks_pass_with_fixed_seed() {
        for c in check_closed_forms(0.5, 7) {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn wedge_check_on_fubini_profile() {
        let g = Grid::new(-20.0, 20.0, 1024).unwrap();
        let f = RadialProfile::from_fn(
            g,
            |r| fubini_type_profile(2.0, 1, r),
            |r| fubini_type_derivative(2.0, 1, r),
            Phase::OrbifoldY,
            0.0,
        );
        let c = check_wedge(&[&f], 3, 2000, 9);
        assert!(c.pass, "{c:?}");
        assert!(c.measured <= 1.0 + 1e-10 && c.measured > 0.5);
    }

    #[test]
    fn report_json_round_trips() {
        let p = FlowParams::new(2, 1, 1.0, 4.0).unwrap();
        let rep = EstimateReport {
            run_id: "r".into(),
            params: p,
            checks: vec![check_extinction_time(1.0, &p)],
        };
        let s = serde_json::to_string(&rep).unwrap();
        assert!(s.contains("\"claim\""));
        let back: EstimateReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rep);
        assert!(back.all_pass());
    }

    proptest! {
        #[test]
        fn fit_recovers_power_laws(alpha in -3.0f64..3.0, c in 0.1f64..10.0) {
            let xs: Vec<f64> = (1..8).map(|i| i as f64 * 0.7).collect();
            let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(alpha)).collect();
            let (a, se) = fit_exponent(&xs, &ys).unwrap();
            prop_assert!((a - alpha).abs() < 1e-9 && se < 1e-8);
        }
    }
}
