//! Acceptance criteria on the three reference configurations at the default
//! grid. Prints one pass/fail line per criterion; exits nonzero on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use krf::estimates::EstimateReport;
use krf::runner::{load_evidence, parse_config, run_pipeline};

const CONFIGS: [(usize, usize, f64, f64); 3] = [(2, 1, 1.0, 4.0), (3, 2, 1.0, 10.0), (3, 1, 1.0, 8.0)];
const RUNTIME_LIMIT_S: f64 = 60.0;

struct Outcome {
    label: String,
    report: EstimateReport,
    seconds: f64,
    positivity: Result<usize, String>,
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("readable run directory") {
            let path = entry.expect("directory entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).expect("readable artifact"));
            }
        }
    }
    out
}

/// Every persisted profile of every trajectory has finite, positive φ′.
fn positivity(dir: &Path) -> Result<usize, String> {
    let ev = load_evidence(dir).map_err(|e| e.to_string())?;
    let mut count = 0;
    let trajs = [&ev.x, &ev.y].into_iter().chain(ev.eps.iter().map(|(_, t)| t));
    for traj in trajs {
        for s in &traj.snapshots {
            if let Some(i) = s.dphi.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(format!("phi' = {} at node {i}, t = {}", s.dphi[i], s.t));
            }
            count += 1;
        }
        if let Some(h) = traj.history.iter().find(|h| h.phi_min.is_nan() || h.phi_min <= 0.0) {
            return Err(format!("phi(rho_min) = {} at t = {}", h.phi_min, h.t));
        }
    }
    Ok(count)
}

fn run(params: (usize, usize, f64, f64), dir: &Path) -> Outcome {
    let (n, k, a0, b0) = params;
    let label = format!("({n},{k},{a0},{b0})");
    let cfg = parse_config(&format!("n = {n}\nk = {k}\na0 = {a0}\nb0 = {b0}\n")).expect("reference config");
    let clock = Instant::now();
    let report = run_pipeline(&cfg, dir).unwrap_or_else(|e| panic!("{label}: pipeline failed: {e}"));
    let seconds = clock.elapsed().as_secs_f64();
    Outcome {
        label,
        report,
        seconds,
        positivity: positivity(dir),
    }
}

struct Line {
    ok: bool,
    text: String,
}

fn criterion(outcomes: &[Outcome], names: &[&str]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for o in outcomes {
        let mut cells = Vec::new();
        for name in names {
            match o.report.get(name) {
                Some(c) => {
                    ok &= c.pass;
                    cells.push(format!("{name}={:.4e}{}", c.measured, if c.pass { "" } else { "!" }));
                }
                None => {
                    ok = false;
                    cells.push(format!("{name}=missing"));
                }
            }
        }
        parts.push(format!("{} {}", o.label, cells.join(" ")));
    }
    Line {
        ok,
        text: parts.join("; "),
    }
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("temporary directory");
    let outcomes: Vec<Outcome> = CONFIGS
        .iter()
        .enumerate()
        .map(|(i, &p)| run(p, &scratch.path().join(format!("run{i}"))))
        .collect();

    let rerun_dir = scratch.path().join("rerun0");
    let rerun = run(CONFIGS[0], &rerun_dir);
    let identical = tree(&scratch.path().join("run0")) == tree(&rerun_dir) && rerun.report == outcomes[0].report;

    let mut lines = Vec::new();
    let mut first = criterion(&outcomes, &["extinction_time"]);
    for o in &outcomes {
        first.ok &= o.seconds <= RUNTIME_LIMIT_S;
        first.text.push_str(&format!("; {} runtime {:.1} s", o.label, o.seconds));
    }
    lines.push(("extinction time and runtime", first));
    lines.push(("exact area law", criterion(&outcomes, &["area_law"])));
    lines.push((
        "boundary rates",
        criterion(&outcomes, &["zero_section_rate", "infinity_section_rate"]),
    ));
    lines.push(("divisor diameter", criterion(&outcomes, &["divisor_diameter"])));
    lines.push(("radial exponent", criterion(&outcomes, &["radial_exponent", "radial_length"])));
    lines.push(("annulus diameter", criterion(&outcomes, &["annulus_diameter"])));
    lines.push(("GH collapse", criterion(&outcomes, &["gh_collapse"])));
    lines.push(("surgery continuity", criterion(&outcomes, &["surgery_continuity"])));
    lines.push((
        "regularization convergence",
        criterion(&outcomes, &["eps_convergence", "psi_residual", "psi_convergence"]),
    ));
    lines.push((
        "closed-form oracles",
        criterion(&outcomes, &["cone_volume_oracle", "local_model_oracle", "local_model_sandwich"]),
    ));
    lines.push(("wedge inequality", criterion(&outcomes, &["wedge_inequality"])));
    let mut hygiene = criterion(&outcomes, &["scheme_agreement"]);
    for o in &outcomes {
        match &o.positivity {
            Ok(count) => hygiene.text.push_str(&format!("; {} phi'>0 on {count} profiles", o.label)),
            Err(e) => {
                hygiene.ok = false;
                hygiene.text.push_str(&format!("; {} positivity: {e}", o.label));
            }
        }
    }
    hygiene.ok &= identical;
    hygiene.text.push_str(&format!("; byte-identical rerun: {identical}"));
    lines.push(("solver hygiene", hygiene));

    let mut all = true;
    for (i, (name, line)) in lines.iter().enumerate() {
        all &= line.ok;
        println!(
            "criterion {:2} {} {name}: {}",
            i + 1,
            if line.ok { "PASS" } else { "FAIL" },
            line.text
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
