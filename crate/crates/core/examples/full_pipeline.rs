//! Every stage on a synthetic set, with all tables and charts written to a
//! directory (first argument, default `out/example`).

use std::path::PathBuf;

use atr_turret::config::RunConfig;
use atr_turret::hitprob::BudgetTable;
use atr_turret::io::{write_detections, write_ground_truths};
use atr_turret::pipeline::run_all;
use atr_turret::report::emit_reports;
use atr_turret::synthetic::{synthetic_dataset, SyntheticSpec};

fn main() -> atr_turret::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from("out/example"), PathBuf::from);
    let cfg = RunConfig::default();
    let ds = synthetic_dataset(
        &SyntheticSpec::with_images(250),
        &cfg.simulation.calibration,
    )?;
    // inputs too, so the CLI can re-run on them
    write_detections(out.join("detections.csv"), &ds.detections)?;
    write_ground_truths(out.join("ground_truth.csv"), &ds.ground_truths)?;

    let run = run_all(&ds, &BudgetTable::synthetic(), &cfg)?;
    let files = emit_reports(&run, &out)?;
    for f in &files {
        println!("{}", f.display());
    }
    println!("{} files", files.len());
    Ok(())
}
