//! The full staged pipeline into a temporary directory, then an independent
//! verification from the persisted artifacts.

use krf::runner::{parse_config, run_pipeline, verify};

fn main() -> krf::Result<()> {
    let cfg = parse_config("n = 2\nk = 1\na0 = 1\nb0 = 4\npoints = 1024\n")?;
    let dir = std::env::temp_dir().join(format!("krf-pipeline-{}", cfg.run_id()));
    let report = run_pipeline(&cfg, &dir)?;
    for c in &report.checks {
        let tag = if c.informational { "info" } else if c.pass { "pass" } else { "FAIL" };
        println!("{tag:4} {:24} {:.4e}", c.name, c.measured);
    }
    let again = verify(&dir, &dir.join("..").join("krf-pipeline-verify.json"))?;
    println!("artifacts in {}; verification agrees: {}", dir.display(), again == report);
    Ok(())
}
