//! Drives the `run` pipeline from code: a small spin-ring sweep written as
//! CSV, SVG and a manifest into a temporary directory.

use liouville_pt::cli::{run, RunConfig, SweepSpec};

fn main() -> liouville_pt::Result<()> {
    let out = std::env::temp_dir().join("liouville-pt-example");
    let config = RunConfig {
        sweep: SweepSpec { parameter: "delta_omega_over_gamma".into(), start: -3.0, stop: 3.0, points: 21 },
        output: out.clone(),
        ..RunConfig::default()
    };
    let outcome = run(&config)?;
    println!("failed points: {}", outcome.failed_points);
    for p in std::iter::once(&outcome.csv_path).chain([&outcome.manifest_path]).chain(&outcome.svg_paths) {
        println!("{}", p.display());
    }
    let csv = std::fs::read_to_string(&outcome.csv_path)?;
    for line in csv.lines().take(3) {
        println!("{}", &line[..line.len().min(110)]);
    }
    Ok(())
}
