//! Lengths, distances and integral geometry of momentum-profile metrics.
//!
//! Distances are upper bounds realized by explicit paths: structured segments
//! (radial, horizontal, Hopf, complex-line chords) and shortest paths on a mesh of
//! the totally real slice `{r(cos θ, sin θ, 0, …)}`, whose metric is
//! `φ′ dρ²/2 + 2φ dθ²` with `θ ∈ [0, π]`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::{Complex, DVector};
use serde::{Deserialize, Serialize};

use crate::calabi::{Phase, RadialProfile};
use crate::error::{KrfError, Result};
use crate::numerics::{gauss_integrate, gauss_legendre, simpson};

/// Default opening angle of the line disks and cone surfaces.
pub const ETA_MAX: f64 = 0.5;

/// `∫ √(φ′/2) dρ` over `[rho_a, rho_b]`.
pub fn radial_length(prof: &RadialProfile, rho_a: f64, rho_b: f64) -> Result<f64> {
    let g = prof.grid;
    if !(rho_a <= rho_b) || rho_a < g.rho_min - 1e-12 || rho_b > g.rho_max + 1e-12 {
        return Err(KrfError::InvalidParams(format!(
            "radial range [{rho_a}, {rho_b}] outside [{}, {}]",
            g.rho_min, g.rho_max
        )));
    }
    if rho_a == rho_b {
        return Ok(0.0);
    }
    let cells = ((rho_b - rho_a) / g.spacing()).ceil() as usize;
    let bad = std::cell::Cell::new(None);
    let v = simpson(
        |r| match prof.eval(r) {
            Ok((_, d)) if d > 0.0 => (0.5 * d).sqrt(),
            _ => {
                if bad.get().is_none() {
                    bad.set(Some(r));
                }
                0.0
            }
        },
        rho_a,
        rho_b,
        2 * cells.max(8),
    );
    match bad.get() {
        Some(rho) => Err(KrfError::NonKahlerProfile {
            rho,
            detail: "phi' <= 0 on the radial path".into(),
        }),
        None => Ok(v),
    }
}

/// Length of a full Hopf orbit `θ ↦ e^{iθ}z` on the `Z_k` quotient.
pub fn hopf_circle_length(prof: &RadialProfile, rho: f64, quotient_k: usize) -> Result<f64> {
    let (_, d) = prof.eval(rho)?;
    Ok(2.0 * std::f64::consts::PI * (2.0 * d).sqrt() / quotient_k.max(1) as f64)
}

/// Length of a half-turn horizontal rotation plus a half Hopf turn: joins any two
/// points of the sphere `|z|² = e^ρ`.
pub fn sphere_diameter_upper(prof: &RadialProfile, rho: f64, quotient_k: usize) -> Result<f64> {
    let (p, d) = prof.eval(rho)?;
    let pi = std::f64::consts::PI;
    Ok(pi * (2.0 * p).sqrt() + pi * (2.0 * d).sqrt() / quotient_k.max(1) as f64)
}

/// Upper bound on the diameter of the annulus `e^{rho_a} ≤ |z|² ≤ e^{rho_b}`: move
/// radially to a middle sphere, cross it, move back out.
pub fn annulus_diameter_upper(prof: &RadialProfile, rho_a: f64, rho_b: f64, quotient_k: usize) -> Result<f64> {
    let samples = 64;
    let mut best = f64::INFINITY;
    for j in 0..=samples {
        let mid = rho_a + (rho_b - rho_a) * j as f64 / samples as f64;
        let down = radial_length(prof, rho_a, mid)?;
        let up = radial_length(prof, mid, rho_b)?;
        best = best.min(sphere_diameter_upper(prof, mid, quotient_k)? + 2.0 * down.max(up));
    }
    Ok(best)
}

/// Hermitian metric `λ_sph I + (λ_rad − λ_sph) ẑẑ*` of a profile at a point of `Cⁿ`.
#[derive(Debug, Clone)]
pub struct PointMetric {
    pub lambda_sph: f64,
    pub lambda_rad: f64,
    pub zhat: Vec<Complex<f64>>,
}

impl PointMetric {
    pub fn at(prof: &RadialProfile, z: &[Complex<f64>]) -> Result<Self> {
        let r2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
        if !(r2 > 0.0) {
            return Err(KrfError::InvalidParams("metric requested at the origin".into()));
        }
        let rho = r2.ln();
        let (p, d) = prof.eval(rho)?;
        let e = crate::calabi::eigenvalues_from_momentum(z.len(), p, d, rho)?;
        let r = r2.sqrt();
        Ok(Self {
            lambda_sph: e.lambda_sph,
            lambda_rad: e.lambda_rad,
            zhat: z.iter().map(|c| c / r).collect(),
        })
    }

    /// `v* G w`.
    pub fn hermitian(&self, v: &[Complex<f64>], w: &[Complex<f64>]) -> Complex<f64> {
        let zv: Complex<f64> = self.zhat.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
        let zw: Complex<f64> = self.zhat.iter().zip(w).map(|(a, b)| a.conj() * b).sum();
        // split into radial and orthogonal parts; stable when the eigenvalues differ by many orders
        let perp: Complex<f64> = v
            .iter()
            .zip(w)
            .zip(&self.zhat)
            .map(|((a, b), z)| (a - z * zv).conj() * (b - z * zw))
            .sum();
        perp * self.lambda_sph + zv.conj() * zw * self.lambda_rad
    }

    /// Riemannian inner product `2 Re(v* G w)`.
    pub fn inner(&self, v: &[Complex<f64>], w: &[Complex<f64>]) -> f64 {
        2.0 * self.hermitian(v, w).re
    }

    /// Kähler form `ω(v, w) = g(Jv, w) = 2 Im(v* G w)`.
    pub fn omega(&self, v: &[Complex<f64>], w: &[Complex<f64>]) -> f64 {
        2.0 * self.hermitian(v, w).im
    }
}

/// `|ω(e, e′)|` for a g-orthonormal pair; at most 1.
pub fn wedge_bound_check(metric: &PointMetric, e: &[Complex<f64>], e2: &[Complex<f64>]) -> Result<f64> {
    let tol = 1e-10;
    let (a, b, c) = (metric.inner(e, e), metric.inner(e2, e2), metric.inner(e, e2));
    if (a - 1.0).abs() > tol || (b - 1.0).abs() > tol || c.abs() > tol {
        return Err(KrfError::InvalidParams(format!(
            "frame is not orthonormal: |e|² = {a}, |e′|² = {b}, <e,e′> = {c}"
        )));
    }
    Ok(metric.omega(e, e2).abs())
}

/// One piece of a structured path.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Radial { rho_a: f64, rho_b: f64 },
    /// Unitary rotation by `angle` in a direction orthogonal to `z`.
    Horizontal { rho: f64, angle: f64 },
    /// Rotation `z ↦ e^{iα}z` by `angle`.
    Hopf { rho: f64, angle: f64 },
    /// Straight segment in `Cⁿ`.
    LineChord { from: Vec<Complex<f64>>, to: Vec<Complex<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub segments: Vec<Segment>,
    /// Order of the cyclic quotient acting along the Hopf fibres.
    pub quotient_k: usize,
}

pub fn path_length(prof: &RadialProfile, path: &PathSpec) -> Result<f64> {
    let k = path.quotient_k.max(1) as f64;
    let mut total = 0.0;
    for seg in &path.segments {
        total += match seg {
            Segment::Radial { rho_a, rho_b } => radial_length(prof, rho_a.min(*rho_b), rho_a.max(*rho_b))?,
            Segment::Horizontal { rho, angle } => angle.abs() * (2.0 * prof.eval(*rho)?.0).sqrt(),
            Segment::Hopf { rho, angle } => angle.abs() * (2.0 * prof.eval(*rho)?.1).sqrt() / k,
            Segment::LineChord { from, to } => chord_length(prof, from, to)?,
        };
    }
    Ok(total)
}

fn chord_length(prof: &RadialProfile, from: &[Complex<f64>], to: &[Complex<f64>]) -> Result<f64> {
    if from.len() != to.len() {
        return Err(KrfError::InvalidParams("chord endpoints differ in dimension".into()));
    }
    let v: Vec<Complex<f64>> = to.iter().zip(from).map(|(a, b)| a - b).collect();
    let err = std::cell::RefCell::new(None);
    let len = gauss_integrate(
        |s| {
            let z: Vec<Complex<f64>> = from.iter().zip(&v).map(|(a, d)| a + d * s).collect();
            match PointMetric::at(prof, &z) {
                Ok(m) => m.inner(&v, &v).max(0.0).sqrt(),
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        1.0,
        16,
        8,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(len),
    }
}

/// A point of the totally real slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlicePoint {
    pub rho: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMode {
    /// Shortest mesh path inside the smooth part.
    UpperBound,
    /// Radial projection bound `|∫ √(φ′/2) dρ|`.
    LowerBound,
    /// Mesh paths that may also pass through the contracted point.
    Completion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceQuery {
    pub p: SlicePoint,
    pub q: SlicePoint,
    pub mode: DistanceMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBound {
    pub value: f64,
    /// Largest single stencil edge; the exact Hopf seam edges are not counted.
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshOptions {
    /// Number of angular columns on `[0, π]`.
    pub angular: usize,
    /// Rows are every `row_stride`-th grid node (even).
    pub row_stride: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self {
            angular: 512,
            row_stride: 16,
        }
    }
}

const STENCIL: [(i64, i64); 16] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
    (1, 2),
    (1, -2),
    (-1, 2),
    (-1, -2),
    (2, 1),
    (2, -1),
    (-2, 1),
    (-2, -1),
];

/// Shortest-path mesh on the slice; an extra apex node stands for the contracted
/// point when the profile lives on the orbifold.
#[derive(Debug, Clone)]
pub struct SliceMesh {
    prof: RadialProfile,
    rows: usize,
    cols: usize,
    dtheta: f64,
    /// `(φ, φ′)` at rows and half rows, index `2·row (+1)`.
    half: Vec<(f64, f64)>,
    rho_rows: Vec<f64>,
    weights: Vec<[f64; 16]>,
    /// Hopf half-turn joining `θ = 0` to `θ = π` on each row.
    seam: Vec<f64>,
    apex: Option<f64>,
    slack: f64,
}

fn segment_length(a: (f64, f64), m: (f64, f64), b: (f64, f64), drho: f64, dtheta: f64) -> f64 {
    let f = |(p, d): (f64, f64)| (0.5 * d * drho * drho + 2.0 * p * dtheta * dtheta).sqrt();
    (f(a) + 4.0 * f(m) + f(b)) / 6.0
}

impl SliceMesh {
    pub fn new(prof: &RadialProfile, opts: MeshOptions, quotient_k: usize, completion: bool) -> Result<Self> {
        prof.validate()?;
        let g = prof.grid;
        if opts.angular < 3 || opts.row_stride < 2 || !opts.row_stride.is_multiple_of(2) {
            return Err(KrfError::MeshResolution(format!(
                "need angular >= 3 and an even row_stride (got {}, {})",
                opts.angular, opts.row_stride
            )));
        }
        let half_step = opts.row_stride / 2;
        let rows = (g.points - 1) / opts.row_stride + 1;
        if rows < 3 {
            return Err(KrfError::MeshResolution(format!("only {rows} rows for stride {}", opts.row_stride)));
        }
        let half: Vec<(f64, f64)> = (0..2 * rows - 1)
            .map(|j| (prof.phi[j * half_step], prof.dphi[j * half_step]))
            .collect();
        let rho_rows: Vec<f64> = (0..rows).map(|r| g.rho(r * opts.row_stride)).collect();
        let dtheta = std::f64::consts::PI / (opts.angular - 1) as f64;
        let drow = g.spacing() * opts.row_stride as f64;
        let mut slack: f64 = 0.0;
        let weights: Vec<[f64; 16]> = (0..rows)
            .map(|r| {
                let mut w = [f64::INFINITY; 16];
                for (s, &(dr, dc)) in STENCIL.iter().enumerate() {
                    let r2 = r as i64 + dr;
                    if r2 < 0 || r2 >= rows as i64 {
                        continue;
                    }
                    let (a, b) = (2 * r as i64, 2 * r2);
                    let mid = half[((a + b) / 2) as usize];
                    let len = if dr.abs() == 2 {
                        // midpoint of a double row is a row itself
                        segment_length(half[a as usize], mid, half[b as usize], dr as f64 * drow, dc as f64 * dtheta)
                    } else {
                        let m = if dr == 0 { half[a as usize] } else { half[((a + b) / 2) as usize] };
                        segment_length(half[a as usize], m, half[b as usize], dr as f64 * drow, dc as f64 * dtheta)
                    };
                    w[s] = len;
                    slack = slack.max(len);
                }
                w
            })
            .collect();
        // e^{iπ} composed with the nearest element of Z_k
        let k = quotient_k.max(1) as f64;
        let turn = (0..=quotient_k.max(1))
            .map(|j| (std::f64::consts::PI - 2.0 * std::f64::consts::PI * j as f64 / k).abs())
            .fold(f64::INFINITY, f64::min);
        let seam: Vec<f64> = (0..rows).map(|r| turn * (2.0 * half[2 * r].1).sqrt()).collect();
        let apex = if completion && prof.phase != Phase::ManifoldX {
            let slope = (prof.dphi[1].ln() - prof.dphi[0].ln()) / g.spacing();
            if !(slope > 0.0) {
                return Err(KrfError::NonKahlerProfile {
                    rho: g.rho_min,
                    detail: "phi' does not decay towards the contracted point".into(),
                });
            }
            Some((0.5 * prof.dphi[0]).sqrt() * 2.0 / slope)
        } else {
            None
        };
        Ok(Self {
            prof: prof.clone(),
            rows,
            cols: opts.angular,
            dtheta,
            half,
            rho_rows,
            weights,
            seam,
            apex,
            slack,
        })
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    fn nodes(&self) -> usize {
        self.rows * self.cols + usize::from(self.apex.is_some())
    }

    /// Corners of the mesh cell holding `p` with the straight-segment cost to each.
    fn snap(&self, p: SlicePoint) -> Result<Vec<(usize, f64)>> {
        let g = self.prof.grid;
        if !(p.rho >= g.rho_min - 1e-12 && p.rho <= g.rho_max + 1e-12) || !(0.0..=std::f64::consts::PI + 1e-12).contains(&p.theta) {
            return Err(KrfError::InvalidParams(format!("slice point {p:?} outside the domain")));
        }
        let drow = self.rho_rows[1] - self.rho_rows[0];
        let fr = ((p.rho - g.rho_min) / drow).max(0.0);
        let fc = (p.theta / self.dtheta).max(0.0);
        let r0 = (fr.floor() as usize).min(self.rows - 2);
        let c0 = (fc.floor() as usize).min(self.cols - 2);
        let here = self.prof.eval(p.rho)?;
        let mut out = Vec::with_capacity(4);
        for r in [r0, r0 + 1] {
            for c in [c0, c0 + 1] {
                let (rho_n, th_n) = (self.rho_rows[r], c as f64 * self.dtheta);
                let (dr, dt) = (rho_n - p.rho, th_n - p.theta);
                let cost = if dr.abs() < 1e-13 && dt.abs() < 1e-13 {
                    0.0
                } else {
                    let m = self.prof.eval(0.5 * (p.rho + rho_n))?;
                    segment_length(here, m, self.half[2 * r], dr, dt)
                };
                out.push((r * self.cols + c, cost));
            }
        }
        Ok(out)
    }

    fn dijkstra(&self, sources: &[(usize, f64)]) -> Vec<f64> {
        let total = self.nodes();
        let apex_id = self.rows * self.cols;
        let mut dist = vec![f64::INFINITY; total];
        let mut heap = BinaryHeap::new();
        for &(s, c) in sources {
            if c < dist[s] {
                dist[s] = c;
                heap.push(Reverse((Ordered(c), s)));
            }
        }
        while let Some(Reverse((Ordered(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            let mut relax = |v: usize, w: f64, heap: &mut BinaryHeap<Reverse<(Ordered, usize)>>| {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((Ordered(nd), v)));
                }
            };
            if let (Some(tail), true) = (self.apex, u == apex_id) {
                for c in 0..self.cols {
                    relax(c, tail, &mut heap);
                }
                continue;
            }
            let (r, c) = (u / self.cols, u % self.cols);
            let w = &self.weights[r];
            for (s, &(dr, dc)) in STENCIL.iter().enumerate() {
                let (r2, c2) = (r as i64 + dr, c as i64 + dc);
                if r2 < 0 || r2 >= self.rows as i64 || c2 < 0 || c2 >= self.cols as i64 {
                    continue;
                }
                relax(r2 as usize * self.cols + c2 as usize, w[s], &mut heap);
            }
            if c == 0 {
                relax(u + self.cols - 1, self.seam[r], &mut heap);
            } else if c == self.cols - 1 {
                relax(u + 1 - self.cols, self.seam[r], &mut heap);
            }
            if let (Some(tail), 0) = (self.apex, r) {
                relax(apex_id, tail, &mut heap);
            }
        }
        dist
    }

    /// Distances from `p` to every mesh node, for repeated queries.
    pub fn field(&self, p: SlicePoint) -> Result<DistanceField<'_>> {
        Ok(DistanceField {
            mesh: self,
            origin: p,
            dist: self.dijkstra(&self.snap(p)?),
        })
    }

    pub fn distance(&self, p: SlicePoint, q: SlicePoint) -> Result<DistanceBound> {
        self.field(p)?.to(q)
    }
}

pub struct DistanceField<'a> {
    mesh: &'a SliceMesh,
    origin: SlicePoint,
    dist: Vec<f64>,
}

impl DistanceField<'_> {
    pub fn to(&self, q: SlicePoint) -> Result<DistanceBound> {
        if q == self.origin {
            return Ok(DistanceBound {
                value: 0.0,
                slack: self.mesh.slack,
            });
        }
        let value = self
            .mesh
            .snap(q)?
            .into_iter()
            .map(|(node, cost)| self.dist[node] + cost)
            .fold(f64::INFINITY, f64::min);
        Ok(DistanceBound {
            value,
            slack: self.mesh.slack,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ordered(f64);

impl Eq for Ordered {}

impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// One-off distance query; builds a mesh with `opts`.
pub fn distance_upper(prof: &RadialProfile, query: DistanceQuery, quotient_k: usize, opts: MeshOptions) -> Result<DistanceBound> {
    match query.mode {
        DistanceMode::LowerBound => {
            let (a, b) = (query.p.rho.min(query.q.rho), query.p.rho.max(query.q.rho));
            Ok(DistanceBound {
                value: radial_length(prof, a, b)?,
                slack: 0.0,
            })
        }
        DistanceMode::UpperBound | DistanceMode::Completion => {
            let mesh = SliceMesh::new(prof, opts, quotient_k, query.mode == DistanceMode::Completion)?;
            mesh.distance(query.p, query.q)
        }
    }
}

/// Deterministic sample of slice points: 9 radial levels across the grid (2 units
/// inside each end) at angles 0, π/2, π.
pub fn gh_sample(prof: &RadialProfile) -> Vec<SlicePoint> {
    let g = prof.grid;
    let (lo, hi) = (g.rho_min + 2.0, g.rho_max - 2.0);
    let mut pts = Vec::new();
    for i in 0..9 {
        let rho = lo + (hi - lo) * i as f64 / 8.0;
        for theta in [0.0, 0.5 * std::f64::consts::PI, std::f64::consts::PI] {
            pts.push(SlicePoint { rho, theta });
        }
    }
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhEstimate {
    /// `max |d_t − d_T|` over sampled pairs.
    pub distortion: f64,
    pub slack: f64,
    /// Largest contribution among pairs with both points at `ρ ≥ 0`.
    pub far_max: f64,
    /// Largest contribution among pairs with a point at `ρ < 0`.
    pub near_max: f64,
    /// Largest sampled distance under the first metric.
    pub sample_diameter: f64,
}

/// Distortion of the identity correspondence between the slice of `prof_t` and that
/// of the limit `prof_lim` (with the contracted point available when the limit is an
/// orbifold profile).
pub fn gh_distortion(prof_t: &RadialProfile, prof_lim: &RadialProfile, quotient_k: usize, opts: MeshOptions) -> Result<GhEstimate> {
    let a = SliceMesh::new(prof_t, opts, quotient_k, true)?;
    let b = SliceMesh::new(prof_lim, opts, quotient_k, true)?;
    let pts = gh_sample(prof_t);
    let mut est = GhEstimate {
        distortion: 0.0,
        slack: a.slack.max(b.slack),
        far_max: 0.0,
        near_max: 0.0,
        sample_diameter: 0.0,
    };
    for (i, p) in pts.iter().enumerate() {
        let fa = a.field(*p)?;
        let fb = b.field(*p)?;
        for q in &pts[i + 1..] {
            let da = fa.to(*q)?.value;
            let gap = (da - fb.to(*q)?.value).abs();
            est.sample_diameter = est.sample_diameter.max(da);
            est.distortion = est.distortion.max(gap);
            if p.rho >= 0.0 && q.rho >= 0.0 {
                est.far_max = est.far_max.max(gap);
            } else {
                est.near_max = est.near_max.max(gap);
            }
        }
    }
    Ok(est)
}

/// `ω`-area of the disk `{(2r cos θ, w) : |w| ≤ 2r cos θ tan η_max}`.
pub fn line_disk_integral(prof: &RadialProfile, r: f64, theta: f64, eta_max: f64) -> Result<f64> {
    let d = 2.0 * r * theta.cos();
    if !(d > 0.0) || !(eta_max >= 0.0) {
        return Err(KrfError::InvalidParams(format!("degenerate disk (r={r}, theta={theta}, eta={eta_max})")));
    }
    let r0 = d * eta_max.tan();
    if r0 == 0.0 {
        return Ok(0.0);
    }
    if (d * d).ln() < prof.grid.rho_min || (d * d + r0 * r0).ln() > prof.grid.rho_max {
        return Err(KrfError::Quadrature(format!("disk leaves the profile domain (r={r})")));
    }
    let err = std::cell::RefCell::new(None);
    let v = gauss_integrate(
        |s| {
            let big = d * d + s * s;
            match prof.eval(big.ln()) {
                Ok((p, dp)) => {
                    let e = (-big.ln()).exp();
                    let frac = s * s / big;
                    (p * e * (1.0 - frac) + dp * e * frac) * s
                }
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        r0,
        16,
        10,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(4.0 * std::f64::consts::PI * v),
    }
}

/// Volume of the cone surface
/// `F = {(2ru cos θ, 2ru e^{iv} cos θ tan η_max, 0, …)}` under
/// `g̃ = ρ^{−2(1−δ)}dρ² + g_{S^{2n−1}}`: `(closed form, quadrature)`.
pub fn tilde_volume_f(r: f64, theta: f64, eta_max: f64, delta: f64) -> Result<(f64, f64)> {
    if !(0.0..std::f64::consts::FRAC_PI_6).contains(&eta_max) || !(delta > 0.0 && delta <= 1.0) || !(r > 0.0) {
        return Err(KrfError::InvalidParams(format!(
            "need r > 0, 0 <= eta_max < pi/6, 0 < delta <= 1 (got {r}, {eta_max}, {delta})"
        )));
    }
    let d = 2.0 * r * theta.cos();
    let closed = 2.0 * std::f64::consts::PI / delta * eta_max.sin() * (d / eta_max.cos()).powf(delta);
    if eta_max == 0.0 {
        return Ok((closed, 0.0));
    }
    let t = eta_max.tan();
    // real embedding R⁴ ⊃ F, point u·A(v)
    let embed = |u: f64, v: f64| DVector::from_vec(vec![u * d, 0.0, u * d * t * v.cos(), u * d * t * v.sin()]);
    let du = |v: f64| DVector::from_vec(vec![d, 0.0, d * t * v.cos(), d * t * v.sin()]);
    let dv = |u: f64, v: f64| DVector::from_vec(vec![0.0, 0.0, -u * d * t * v.sin(), u * d * t * v.cos()]);
    let metric = |x: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>| {
        let rho = x.norm();
        let xh = x / rho;
        let (ar, br) = (a.dot(&xh), b.dot(&xh));
        let (ap, bp) = (a - &xh * ar, b - &xh * br);
        ar * br * rho.powf(-2.0 * (1.0 - delta)) + ap.dot(&bp) / (rho * rho)
    };
    let (sx, sw) = gauss_legendre(24);
    let nv = 64;
    let mut total = 0.0;
    for j in 0..nv {
        let v = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
        for (xi, wi) in sx.iter().zip(&sw) {
            // u = s^{1/δ} absorbs the u^{δ−1} endpoint singularity
            let s = 0.5 * (xi + 1.0);
            let u = s.powf(1.0 / delta);
            let jac = u / (delta * s);
            let x = embed(u, v);
            let (a, b) = (du(v), dv(u, v));
            let (gaa, gbb, gab) = (metric(&x, &a, &a), metric(&x, &b, &b), metric(&x, &a, &b));
            total += 0.5 * wi * (gaa * gbb - gab * gab).max(0.0).sqrt() * jac;
        }
    }
    Ok((closed, total * 2.0 * std::f64::consts::PI / nv as f64))
}
