//! Configuration, the staged pipeline (extinction, then surgery and everything
//! after it), persistence, verification and sweeps.
//!
//! A run directory holds `config.txt`, `manifest.json`, one CSV per snapshot and
//! history, plot series under `series/`, and `report.json`. Every file is listed in
//! the manifest. All floats are written with 17 significant digits so that reloading
//! is exact and reruns are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calabi::{FlowParams, Grid, Phase, RadialProfile};
use crate::error::{io_err, KrfError, Result};
use crate::estimates::{self, EstimateReport, Evidence};
use crate::flow::{self, FlowEvent, FlowState, FlowTrajectory, HistoryRow, Scheme, SolverConfig};
use crate::metric::MeshOptions;

pub const MANIFEST_VERSION: u32 = 1;

/// Orbifold-phase monitor offsets past `T`.
pub const Y_MONITORS: [f64; 5] = [1e-4, 1e-3, 1e-2, 0.05, 0.1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsFamilyConfig {
    pub eps_list: Vec<f64>,
    /// Exponent `K` of the section norm in the regularized volume form.
    pub big_k: u32,
    /// Length of each ε-run past `T`; also the comparison time offset.
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: FlowParams,
    pub solver: SolverConfig,
    pub grid: Grid,
    pub snapshot_cadence: f64,
    pub directory: Option<PathBuf>,
    pub eps_family: Option<EpsFamilyConfig>,
    pub y_horizon: f64,
    pub seed: u64,
    /// Mesh used for the GH estimates.
    pub mesh: MeshOptions,
}

impl RunConfig {
    pub fn new(params: FlowParams) -> Self {
        Self {
            params,
            solver: SolverConfig::default(),
            grid: Grid {
                rho_min: -24.0,
                rho_max: 12.0,
                points: 2048,
            },
            snapshot_cadence: 0.05,
            directory: None,
            eps_family: Some(EpsFamilyConfig {
                eps_list: vec![1e-2, 1e-3, 1e-4],
                big_k: 2 * params.n as u32,
                horizon: 0.05,
            }),
            y_horizon: 0.1,
            seed: 0,
            mesh: MeshOptions {
                angular: 65,
                row_stride: 16,
            },
        }
    }

    pub fn run_id(&self) -> String {
        let p = self.params;
        format!("n{}-k{}-a{}-b{}-s{}", p.n, p.k, p.a0, p.b0, self.seed)
    }

    /// Canonical `key = value` text; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let p = self.params;
        let s = &self.solver;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("n", p.n.to_string());
        kv("k", p.k.to_string());
        kv("a0", p.a0.to_string());
        kv("b0", p.b0.to_string());
        kv("dt_init", s.dt_init.to_string());
        kv("dt_max", s.dt_max.to_string());
        kv("dt_safety", s.dt_safety.to_string());
        kv(
            "scheme",
            match s.scheme {
                Scheme::Explicit => "explicit",
                Scheme::LaggedCrankNicolson => "lagged_cn",
            }
            .into(),
        );
        kv("stop_threshold", s.stop_threshold.to_string());
        kv("max_steps", s.max_steps.to_string());
        kv("rho_min", self.grid.rho_min.to_string());
        kv("rho_max", self.grid.rho_max.to_string());
        kv("points", self.grid.points.to_string());
        kv("snapshot_cadence", self.snapshot_cadence.to_string());
        if let Some(d) = &self.directory {
            kv("directory", d.display().to_string());
        }
        match &self.eps_family {
            Some(e) => {
                let list: Vec<String> = e.eps_list.iter().map(|v| v.to_string()).collect();
                kv("eps_list", list.join(", "));
                kv("eps_k", e.big_k.to_string());
                kv("eps_horizon", e.horizon.to_string());
            }
            None => kv("eps_list", "none".into()),
        }
        kv("y_horizon", self.y_horizon.to_string());
        kv("seed", self.seed.to_string());
        kv("gh_angular", self.mesh.angular.to_string());
        kv("gh_stride", self.mesh.row_stride.to_string());
        out
    }
}

const KEYS: &[&str] = &[
    "n",
    "k",
    "a0",
    "b0",
    "dt_init",
    "dt_max",
    "dt_safety",
    "scheme",
    "stop_threshold",
    "max_steps",
    "rho_min",
    "rho_max",
    "points",
    "snapshot_cadence",
    "directory",
    "eps_list",
    "eps_k",
    "eps_horizon",
    "y_horizon",
    "seed",
    "gh_angular",
    "gh_stride",
];

/// Parses `key = value` lines (`#` starts a comment) into a validated config.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut seen: BTreeMap<&str, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(KrfError::ConfigInvalid {
            line: line_no,
            msg: format!("expected `key = value`, got {line:?}"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        let key = KEYS.iter().find(|&&x| x == k).ok_or(KrfError::ConfigInvalid {
            line: line_no,
            msg: format!("unknown key {k:?}"),
        })?;
        if let Some((prev, _)) = seen.insert(key, (line_no, v.to_string())) {
            return Err(KrfError::ConfigInvalid {
                line: line_no,
                msg: format!("duplicate key {k:?} (first on line {prev})"),
            });
        }
    }
    let line_of = |k: &str| seen.get(k).map(|x| x.0).unwrap_or(0);
    fn get<T: std::str::FromStr>(seen: &BTreeMap<&str, (usize, String)>, k: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match seen.get(k) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| KrfError::ConfigInvalid {
                line: *line,
                msg: format!("{k}: cannot parse {v:?}: {e}"),
            }),
        }
    }
    let required = |k: &str| KrfError::ConfigInvalid {
        line: 0,
        msg: format!("missing required key {k:?}"),
    };
    let n: usize = get(&seen, "n")?.ok_or_else(|| required("n"))?;
    let k: usize = get(&seen, "k")?.ok_or_else(|| required("k"))?;
    let a0: f64 = get(&seen, "a0")?.ok_or_else(|| required("a0"))?;
    let b0: f64 = get(&seen, "b0")?.ok_or_else(|| required("b0"))?;
    let params = FlowParams::new(n, k, a0, b0).map_err(|e| {
        let line = if k < 1 || k >= n {
            line_of("k").max(line_of("n"))
        } else {
            line_of("a0").max(line_of("b0"))
        };
        KrfError::ConfigInvalid { line, msg: e.to_string() }
    })?;
    let mut cfg = RunConfig::new(params);
    let s = &mut cfg.solver;
    if let Some(v) = get(&seen, "dt_init")? {
        s.dt_init = v;
    }
    if let Some(v) = get(&seen, "dt_max")? {
        s.dt_max = v;
    }
    if let Some(v) = get(&seen, "dt_safety")? {
        s.dt_safety = v;
    }
    if let Some(v) = get::<String>(&seen, "scheme")? {
        s.scheme = v.parse().map_err(|e: KrfError| KrfError::ConfigInvalid {
            line: line_of("scheme"),
            msg: e.to_string(),
        })?;
    }
    if let Some(v) = get(&seen, "stop_threshold")? {
        s.stop_threshold = v;
    }
    if let Some(v) = get(&seen, "max_steps")? {
        s.max_steps = v;
    }
    let solver_line = ["dt_init", "dt_max", "dt_safety", "stop_threshold", "max_steps"]
        .iter()
        .map(|k| line_of(k))
        .max()
        .unwrap_or(0);
    cfg.solver.validate().map_err(|e| KrfError::ConfigInvalid {
        line: solver_line,
        msg: e.to_string(),
    })?;

    let rho_min = get(&seen, "rho_min")?.unwrap_or(cfg.grid.rho_min);
    let rho_max = get(&seen, "rho_max")?.unwrap_or(cfg.grid.rho_max);
    let points: usize = get(&seen, "points")?.unwrap_or(cfg.grid.points);
    let grid_line = line_of("rho_min").max(line_of("rho_max")).max(line_of("points"));
    if points < 128 {
        return Err(KrfError::ConfigInvalid {
            line: line_of("points"),
            msg: format!("points must be at least 128 (got {points})"),
        });
    }
    cfg.grid = Grid::new(rho_min, rho_max, points).map_err(|e| KrfError::ConfigInvalid {
        line: grid_line,
        msg: e.to_string(),
    })?;

    if let Some(v) = get::<f64>(&seen, "snapshot_cadence")? {
        if !(v > 0.0) {
            return Err(KrfError::ConfigInvalid {
                line: line_of("snapshot_cadence"),
                msg: format!("snapshot_cadence must be positive (got {v})"),
            });
        }
        cfg.snapshot_cadence = v;
    }
    cfg.directory = get::<String>(&seen, "directory")?.map(PathBuf::from);

    let positive = |k: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(KrfError::ConfigInvalid {
                line: line_of(k),
                msg: format!("{k} must be positive (got {v})"),
            })
        }
    };
    if let Some(v) = get::<f64>(&seen, "y_horizon")? {
        cfg.y_horizon = positive("y_horizon", v)?;
    }
    match get::<String>(&seen, "eps_list")? {
        Some(v) if v == "none" || v.is_empty() => cfg.eps_family = None,
        Some(v) => {
            let mut list = Vec::new();
            for item in v.split(',') {
                let x: f64 = item.trim().parse().map_err(|e| KrfError::ConfigInvalid {
                    line: line_of("eps_list"),
                    msg: format!("eps_list: cannot parse {item:?}: {e}"),
                })?;
                list.push(positive("eps_list", x)?);
            }
            if let Some(e) = cfg.eps_family.as_mut() {
                e.eps_list = list;
            }
        }
        None => {}
    }
    if let Some(e) = cfg.eps_family.as_mut() {
        if let Some(v) = get::<u32>(&seen, "eps_k")? {
            if v == 0 {
                return Err(KrfError::ConfigInvalid {
                    line: line_of("eps_k"),
                    msg: "eps_k must be positive".into(),
                });
            }
            e.big_k = v;
        }
        if let Some(v) = get::<f64>(&seen, "eps_horizon")? {
            e.horizon = positive("eps_horizon", v)?;
        }
        if e.horizon > cfg.y_horizon {
            return Err(KrfError::ConfigInvalid {
                line: line_of("eps_horizon").max(line_of("y_horizon")),
                msg: "eps_horizon must not exceed y_horizon".into(),
            });
        }
        let t = params.singular_time();
        if let Some(bad) = e.eps_list.iter().find(|&&x| x >= 0.5 * t) {
            return Err(KrfError::ConfigInvalid {
                line: line_of("eps_list"),
                msg: format!("eps {bad} must be below T/2 = {}", 0.5 * t),
            });
        }
    }
    if let Some(v) = get(&seen, "seed")? {
        cfg.seed = v;
    }
    if let Some(v) = get(&seen, "gh_angular")? {
        cfg.mesh.angular = v;
    }
    if let Some(v) = get(&seen, "gh_stride")? {
        cfg.mesh.row_stride = v;
    }
    if cfg.mesh.angular < 3 || cfg.mesh.row_stride < 2 || !cfg.mesh.row_stride.is_multiple_of(2) {
        return Err(KrfError::ConfigInvalid {
            line: line_of("gh_angular").max(line_of("gh_stride")),
            msg: "gh_angular must be >= 3 and gh_stride even and >= 2".into(),
        });
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub name: String,
    pub phase: Phase,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps: Option<f64>,
    pub events: Vec<FlowEvent>,
    pub history: String,
    pub snapshots: Vec<SnapshotEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub run_id: String,
    pub params: FlowParams,
    pub grid: Grid,
    /// `extinction` after the manifold phase, `complete` after the report.
    pub stage: String,
    pub t_star: f64,
    pub events: Vec<FlowEvent>,
    pub trajectories: Vec<TrajectoryEntry>,
    pub y_monitors: Vec<f64>,
    pub files: Vec<String>,
}

impl Manifest {
    fn trajectory(&self, name: &str) -> Result<&TrajectoryEntry> {
        self.trajectories
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| KrfError::Artifact {
                path: "manifest.json".into(),
                msg: format!("no trajectory named {name:?}"),
            })
    }
}

struct Writer<'a> {
    root: &'a Path,
    files: Vec<String>,
}

impl<'a> Writer<'a> {
    fn new(root: &'a Path) -> Self {
        Self { root, files: Vec::new() }
    }

    fn put(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::write(&path, contents).map_err(io_err(&path))?;
        if !self.files.iter().any(|f| f == rel) {
            self.files.push(rel.to_string());
        }
        Ok(())
    }
}

fn history_csv(rows: &[HistoryRow]) -> String {
    let mut s = String::from("t,dt,area_d0,area_dinf,phi_min,left_coeff\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.dt, r.area_d0, r.area_dinf, r.phi_min, r.left_coeff
        );
    }
    s
}

fn parse_history(text: &str, path: &Path) -> Result<Vec<HistoryRow>> {
    let bad = |msg: String| KrfError::Artifact {
        path: path.to_path_buf(),
        msg,
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("line {}: {e}", i + 1)))?;
        if v.len() != 6 {
            return Err(bad(format!("line {}: expected 6 columns", i + 1)));
        }
        rows.push(HistoryRow {
            t: v[0],
            dt: v[1],
            area_d0: v[2],
            area_dinf: v[3],
            phi_min: v[4],
            left_coeff: v[5],
        });
    }
    Ok(rows)
}

fn persist_trajectory(w: &mut Writer, name: &str, eps: Option<f64>, traj: &FlowTrajectory) -> Result<TrajectoryEntry> {
    let history = format!("{name}/history.csv");
    w.put(&history, &history_csv(&traj.history))?;
    let mut snapshots = Vec::new();
    for (i, s) in traj.snapshots.iter().enumerate() {
        let file = format!("{name}/snapshot_{i:04}.csv");
        w.put(&file, &s.to_csv())?;
        snapshots.push(SnapshotEntry { t: s.t, file });
    }
    let phase = traj.snapshots.first().map(|s| s.phase).unwrap_or(Phase::ManifoldX);
    Ok(TrajectoryEntry {
        name: name.into(),
        phase,
        eps,
        events: traj.events.clone(),
        history,
        snapshots,
    })
}

fn load_trajectory(root: &Path, params: FlowParams, e: &TrajectoryEntry) -> Result<FlowTrajectory> {
    let hp = root.join(&e.history);
    let history = parse_history(&fs::read_to_string(&hp).map_err(io_err(&hp))?, &hp)?;
    let mut snapshots = Vec::with_capacity(e.snapshots.len());
    for s in &e.snapshots {
        let path = root.join(&s.file);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let prof = RadialProfile::from_csv(&text, e.phase, s.t).map_err(|err| KrfError::Artifact {
            path: path.clone(),
            msg: err.to_string(),
        })?;
        snapshots.push(prof);
    }
    Ok(FlowTrajectory {
        params,
        snapshots,
        events: e.events.clone(),
        history,
    })
}

fn read_manifest(root: &Path) -> Result<Manifest> {
    let path = root.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let m: Manifest = serde_json::from_str(&text)?;
    if m.version != MANIFEST_VERSION {
        return Err(KrfError::Artifact {
            path,
            msg: format!("unsupported manifest version {}", m.version),
        });
    }
    Ok(m)
}

fn json_pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Removes the artifacts of a previous run in `root`, as listed by its manifest.
fn clear_previous(root: &Path) -> Result<()> {
    if let Ok(m) = read_manifest(root) {
        for f in &m.files {
            let _ = fs::remove_file(root.join(f));
        }
    }
    for f in ["manifest.json", "error.json", "report.json"] {
        let _ = fs::remove_file(root.join(f));
    }
    Ok(())
}

/// Times at which the manifold phase is snapshotted.
pub fn extinction_schedule(cfg: &RunConfig) -> Vec<f64> {
    let t = cfg.params.singular_time();
    let mut times: Vec<f64> = Vec::new();
    let mut c = cfg.snapshot_cadence;
    while c < t {
        times.push(c);
        c += cfg.snapshot_cadence;
    }
    times.extend((1..=50).map(|j| t * (1.0 - 10f64.powf(-(j as f64) / 10.0))));
    if let Some(e) = &cfg.eps_family {
        times.extend(e.eps_list.iter().map(|x| t - x));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Runs the manifold phase and persists it with a stage-`extinction` manifest.
pub fn stage_extinction(cfg: &RunConfig, root: &Path) -> Result<Manifest> {
    let clock = Instant::now();
    fs::create_dir_all(root).map_err(io_err(root))?;
    clear_previous(root)?;
    let mut w = Writer::new(root);
    w.put("config.txt", &cfg.to_text())?;
    let init = FlowState::initial(cfg.params, cfg.grid)?.profile();
    let traj = flow::run_to_extinction(&init, &cfg.solver, cfg.params, &extinction_schedule(cfg))?;
    let t_star = traj
        .events
        .iter()
        .find_map(|e| match e {
            FlowEvent::SingularTimeReached { t_star, .. } => Some(*t_star),
            _ => None,
        })
        .ok_or(KrfError::SingularTimeNotReached {
            steps: traj.history.len(),
        })?;
    let entry = persist_trajectory(&mut w, "x", None, &traj)?;
    info!(
        "manifold phase: {} steps, t* = {t_star:.10} (T = {}), {:.2?}",
        traj.history.len(),
        cfg.params.singular_time(),
        clock.elapsed()
    );
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        run_id: cfg.run_id(),
        params: cfg.params,
        grid: cfg.grid,
        stage: "extinction".into(),
        t_star,
        events: traj.events.clone(),
        trajectories: vec![entry],
        y_monitors: Vec::new(),
        files: w.files.clone(),
    };
    w.put("manifest.json", &json_pretty(&manifest)?)?;
    Ok(manifest)
}

fn load_run(root: &Path) -> Result<(RunConfig, Manifest)> {
    let cfg = load_config(&root.join("config.txt"))?;
    let m = read_manifest(root)?;
    if m.params != cfg.params || m.grid != cfg.grid {
        return Err(KrfError::Artifact {
            path: root.join("manifest.json"),
            msg: "manifest does not match config.txt".into(),
        });
    }
    Ok((cfg, m))
}

/// Surgery, orbifold continuation, ε-family, and the report, starting from a
/// persisted manifold phase.
pub fn stage_after_extinction(root: &Path) -> Result<EstimateReport> {
    let clock = Instant::now();
    let (cfg, m) = load_run(root)?;
    let p = cfg.params;
    let t = p.singular_time();
    let mut x = load_trajectory(root, p, m.trajectory("x")?)?;
    let limit = flow::surgery(&mut x, &cfg.solver)?;
    info!("surgery at t = {:.10}", limit.t);

    let monitors: Vec<f64> = Y_MONITORS
        .iter()
        .filter(|&&d| d <= cfg.y_horizon * (1.0 + 1e-12))
        .map(|d| t + d)
        .collect();
    let mut record = monitors.clone();
    if let Some(e) = &cfg.eps_family {
        record.push(t + e.horizon);
    }
    let y = flow::continue_on_orbifold(&limit, &cfg.solver, p, t + cfg.y_horizon - limit.t, &record)?;
    info!("orbifold phase: {} steps, {:.2?}", y.history.len(), clock.elapsed());

    let mut eps_runs = Vec::new();
    if let Some(e) = &cfg.eps_family {
        for &eps in &e.eps_list {
            let start = x.nearest(t - eps).ok_or_else(|| KrfError::Fit("no manifold snapshots".into()))?;
            let run = flow::run_eps_flow(start, eps, &cfg.solver, p, e.horizon, &[])?;
            info!("eps = {eps:e}: {} steps", run.history.len());
            eps_runs.push((eps, run));
        }
    }

    let mut w = Writer::new(root);
    w.files = m.files.iter().filter(|f| f.as_str() != "manifest.json").cloned().collect();
    let mut trajectories = vec![persist_trajectory(&mut w, "x", None, &x)?];
    trajectories.push(persist_trajectory(&mut w, "y", None, &y)?);
    for (i, (eps, run)) in eps_runs.iter().enumerate() {
        trajectories.push(persist_trajectory(&mut w, &format!("eps_{i}"), Some(*eps), run)?);
    }
    let mut events = x.events.clone();
    events.extend(y.events.iter().cloned());
    let mut manifest = Manifest {
        stage: "complete".into(),
        events,
        trajectories,
        y_monitors: monitors,
        files: Vec::new(),
        ..m
    };

    manifest.files = w.files.clone();
    w.put("manifest.json", &json_pretty(&manifest)?)?;
    let eval = evaluate_run(root)?;
    for s in &eval.series {
        w.put(&format!("series/{}.csv", s.name), &s.to_csv())?;
    }
    w.put("report.json", &json_pretty(&eval.report)?)?;
    manifest.files = w.files.clone();
    w.put("manifest.json", &json_pretty(&manifest)?)?;
    info!("report written, {:.2?}", clock.elapsed());
    Ok(eval.report)
}

/// Rebuilds the evidence of a completed run from disk.
pub fn load_evidence(root: &Path) -> Result<Evidence> {
    let (cfg, m) = load_run(root)?;
    if m.stage != "complete" {
        return Err(KrfError::Artifact {
            path: root.join("manifest.json"),
            msg: format!("run is at stage {:?}; resume it with the surgery command", m.stage),
        });
    }
    let p = cfg.params;
    let x = load_trajectory(root, p, m.trajectory("x")?)?;
    let y = load_trajectory(root, p, m.trajectory("y")?)?;
    let mut eps = Vec::new();
    for e in m.trajectories.iter().filter(|e| e.eps.is_some()) {
        eps.push((e.eps.unwrap_or(0.0), load_trajectory(root, p, e)?));
    }
    let (eps_k, horizon) = cfg
        .eps_family
        .as_ref()
        .map(|e| (e.big_k, e.horizon))
        .unwrap_or((2 * p.n as u32, 0.0));
    Ok(Evidence {
        run_id: m.run_id.clone(),
        params: p,
        solver: cfg.solver,
        seed: cfg.seed,
        t_star: m.t_star,
        x,
        y,
        y_monitors: m.y_monitors.clone(),
        eps,
        eps_compare: p.singular_time() + horizon,
        eps_k,
        mesh: cfg.mesh,
    })
}

fn evaluate_run(root: &Path) -> Result<estimates::Evaluation> {
    estimates::evaluate(&load_evidence(root)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub stage: String,
    pub kind: String,
    pub message: String,
}

fn write_error(root: &Path, stage: &str, err: &KrfError) {
    let rec = ErrorRecord {
        stage: stage.into(),
        kind: err.kind().into(),
        message: err.to_string(),
    };
    let written = fs::create_dir_all(root)
        .map_err(io_err(root))
        .and_then(|_| json_pretty(&rec))
        .and_then(|s| fs::write(root.join("error.json"), s).map_err(io_err(root.join("error.json"))));
    if let Err(e) = written {
        warn!("could not write the error record: {e}");
    }
}

/// Full pipeline into `root`. Failures leave `error.json` next to whatever was
/// persisted.
pub fn run_pipeline(cfg: &RunConfig, root: &Path) -> Result<EstimateReport> {
    if let Err(e) = stage_extinction(cfg, root) {
        write_error(root, "extinction", &e);
        return Err(e);
    }
    resume_after_extinction(root)
}

/// Resumes a run persisted after its manifold phase.
pub fn resume_after_extinction(root: &Path) -> Result<EstimateReport> {
    // a completed run is left untouched
    if read_manifest(root).is_ok_and(|m| m.stage == "complete") {
        return Err(KrfError::SurgeryRefused("the run in this directory is already complete".into()));
    }
    stage_after_extinction(root).inspect_err(|e| write_error(root, "after_extinction", e))
}

/// Recomputes the report of a completed run and writes it to `report_path`.
pub fn verify(root: &Path, report_path: &Path) -> Result<EstimateReport> {
    let eval = evaluate_run(root)?;
    if let Some(dir) = report_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(report_path, json_pretty(&eval.report)?).map_err(io_err(report_path))?;
    Ok(eval.report)
}

/// Output directory of a config file: its `directory` key relative to the file,
/// or `<stem>_out` beside it.
pub fn output_dir(config_path: &Path, cfg: &RunConfig) -> PathBuf {
    let base = config_path.parent().unwrap_or(Path::new("."));
    match &cfg.directory {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => base.join(d),
        None => {
            let stem = config_path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
            base.join(format!("{stem}_out"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub config: String,
    pub directory: String,
    /// `pass`, `fail` (checks failed) or `error`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub failed_checks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepIndex {
    pub entries: Vec<SweepEntry>,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
}

impl SweepIndex {
    pub fn all_pass(&self) -> bool {
        self.failed == 0 && self.errors == 0
    }
}

/// Runs each config in its own directory on a pool of `jobs` threads. A failing
/// config is recorded and does not stop the others.
pub fn sweep(paths: &[PathBuf], jobs: usize) -> Result<SweepIndex> {
    let mut dirs: Vec<(PathBuf, Result<(RunConfig, PathBuf)>)> = Vec::new();
    for p in paths {
        let r = load_config(p).map(|c| {
            let d = output_dir(p, &c);
            (c, d)
        });
        dirs.push((p.clone(), r));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (p, r) in &dirs {
        if let Ok((_, d)) = r {
            if !seen.insert(d.clone()) {
                return Err(KrfError::InvalidParams(format!(
                    "output directory {} of {} is shared with another config",
                    d.display(),
                    p.display()
                )));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| KrfError::InvalidParams(format!("thread pool: {e}")))?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        dirs.par_iter()
            .map(|(p, r)| {
                let config = p.display().to_string();
                match r {
                    Err(e) => SweepEntry {
                        config,
                        directory: String::new(),
                        status: "error".into(),
                        error: Some(e.to_string()),
                        failed_checks: Vec::new(),
                    },
                    Ok((cfg, dir)) => {
                        let directory = dir.display().to_string();
                        match run_pipeline(cfg, dir) {
                            Ok(rep) => {
                                let failed: Vec<String> =
                                    rep.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
                                SweepEntry {
                                    config,
                                    directory,
                                    status: if failed.is_empty() { "pass" } else { "fail" }.into(),
                                    error: None,
                                    failed_checks: failed,
                                }
                            }
                            Err(e) => SweepEntry {
                                config,
                                directory,
                                status: "error".into(),
                                error: Some(e.to_string()),
                                failed_checks: Vec::new(),
                            },
                        }
                    }
                }
            })
            .collect()
    });
    let count = |s: &str| entries.iter().filter(|e| e.status == s).count();
    Ok(SweepIndex {
        passed: count("pass"),
        failed: count("fail"),
        errors: count("error"),
        entries,
    })
}

pub fn write_index(index: &SweepIndex, path: &Path) -> Result<()> {
    fs::write(path, json_pretty(index)?).map_err(io_err(path))
}

/// Expands a glob into a sorted list of config paths.
pub fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>> {
    let paths = glob::glob(pattern).map_err(|e| KrfError::InvalidParams(format!("bad glob {pattern:?}: {e}")))?;
    let mut out: Vec<PathBuf> = paths.filter_map(|p| p.ok()).filter(|p| p.is_file()).collect();
    out.sort();
    if out.is_empty() {
        return Err(KrfError::InvalidParams(format!("no config files match {pattern:?}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("n=2\nk=1\na0=1\nb0=4").unwrap();
        assert_eq!(cfg.params.singular_time(), 1.0);
        assert_eq!(cfg.grid.points, 2048);
        assert_eq!(cfg.eps_family.as_ref().unwrap().big_k, 4);
        assert_eq!(cfg.solver, SolverConfig::default());
    }

    #[test]
    fn invariant_violations_carry_line_numbers() {
        match parse_config("n=2\nk=2\na0=1\nb0=4") {
            Err(KrfError::ConfigInvalid { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_config("n=2\nk=1\na0=3\nb0=4\n") {
            Err(KrfError::ConfigInvalid { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        match parse_config("# header\nn=2\nk=1\na0=1\nb0=4\nspeed = 3") {
            Err(KrfError::ConfigInvalid { line, msg }) => {
                assert_eq!(line, 6);
                assert!(msg.contains("unknown"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config("n=2\nk=1\na0=1\nb0=4\npoints=64"),
            Err(KrfError::ConfigInvalid { line: 5, .. })
        ));
        assert!(matches!(
            parse_config("n=2\nk=1\na0=1\nn=3\nb0=4"),
            Err(KrfError::ConfigInvalid { line: 4, .. })
        ));
        assert!(matches!(
            parse_config("n=2\nk=1\na0=1\nb0=4\nsnapshot_cadence = 0"),
            Err(KrfError::ConfigInvalid { line: 5, .. })
        ));
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = "n = 3 # dimension\nk=2\na0=1\nb0=10\nscheme=explicit\neps_list = 0.02, 0.001\nseed=42\nrho_min=-20\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.solver.scheme, Scheme::Explicit);
        assert_eq!(cfg.eps_family.as_ref().unwrap().eps_list, vec![0.02, 0.001]);
        assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
        let none = parse_config("n=2\nk=1\na0=1\nb0=4\neps_list=none").unwrap();
        assert!(none.eps_family.is_none());
        assert_eq!(parse_config(&none.to_text()).unwrap(), none);
    }

    #[test]
    fn schedule_covers_the_last_decades() {
        let cfg = parse_config("n=3\nk=1\na0=1\nb0=8").unwrap();
        let s = extinction_schedule(&cfg);
        let t = 0.5;
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|&x| x > 0.0 && x < t));
        let decade = s.iter().filter(|&&x| t - x >= 1e-3 * t * (1.0 - 1e-9) && t - x <= 1e-2 * t * (1.0 + 1e-9)).count();
        assert!(decade >= 10);
        assert!(s.contains(&(t - 1e-4)));
    }

    proptest::proptest! {
        #[test]
        fn any_valid_config_round_trips(
            n in 2usize..6,
            kk in 1usize..5,
            a0 in 0.1f64..5.0,
            gap in 0.1f64..20.0,
            points in 128usize..4096,
            seed in 0u64..1000,
        ) {
            let k = 1 + kk % (n - 1);
            let b0 = a0 * (n + k) as f64 / (n - k) as f64 + gap;
            let text = format!("n={n}\nk={k}\na0={a0}\nb0={b0}\npoints={points}\nseed={seed}\neps_list=0.003,0.0007");
            let cfg = parse_config(&text).unwrap();
            proptest::prop_assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
        }
    }

    #[test]
    fn history_csv_round_trips_exactly() {
        let rows = vec![HistoryRow {
            t: 0.1 + 0.2,
            dt: 1e-4 / 3.0,
            area_d0: std::f64::consts::PI,
            area_dinf: -0.0,
            phi_min: 1e-300,
            left_coeff: 6.02e23,
        }];
        let back = parse_history(&history_csv(&rows), Path::new("h.csv")).unwrap();
        assert_eq!(back, rows);
    }
}
