//! Probability of hit for a single target and for each IoU stratum over range.

use atr_turret::config::RunConfig;
use atr_turret::detgeom::{BoundingBox, Calibration, GroundTruthRecord};
use atr_turret::hitprob::{probability_of_hit, BudgetTable};
use atr_turret::pipeline::run_sweep;
use atr_turret::synthetic::{synthetic_dataset, SyntheticSpec};

fn main() -> atr_turret::Result<()> {
    let table = BudgetTable::synthetic();
    let gt = GroundTruthRecord::new("t", BoundingBox::new(900.0, 500.0, 980.0, 560.0)?);
    for range in [500.0, 1500.0, 3000.0] {
        let cal = Calibration::default().with_range(range);
        let h = probability_of_hit(&table.at(range)?, &gt, &cal)?;
        println!("{range:>5} m: P_h {:.4}", h.p_hit);
    }

    let cfg = RunConfig::default();
    let ds = synthetic_dataset(
        &SyntheticSpec::with_images(300),
        &cfg.simulation.calibration,
    )?;
    let m = run_sweep(&ds, &table, &cfg)?;
    print!("{:<8}", "stratum");
    for o in &m.origins {
        for r in &m.ranges_m {
            print!(" {:>9}", format!("{}@{r}", &o.as_str()[..1]));
        }
    }
    println!();
    for (s, label) in m.labels.iter().enumerate() {
        print!("{label:<8}");
        for o in 0..m.origins.len() {
            for r in 0..m.ranges_m.len() {
                print!(
                    " {:>9}",
                    m.mean[s][r][o].map_or("-".into(), |p| format!("{p:.4}"))
                );
            }
        }
        println!();
    }
    Ok(())
}
