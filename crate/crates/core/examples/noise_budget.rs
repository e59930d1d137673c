//! Aiming error spread caused by reference noise, analytic and sampled.

use atr_turret::controldesign::PiLeadController;
use atr_turret::detgeom::{BoundingBox, DetectionRecord, GroundTruthRecord};
use atr_turret::simengine::{noise_error_std, run_targeting, SimConfig};
use atr_turret::stats::basic_stats;
use atr_turret::turretmodel::{plant_pair, Axis, AxisPair, TurretParams};

fn main() -> atr_turret::Result<()> {
    let plants = plant_pair(&TurretParams::default())?;
    let controllers = AxisPair {
        azimuth: PiLeadController::published(Axis::Azimuth),
        elevation: PiLeadController::published(Axis::Elevation),
    };
    let mut cfg = SimConfig::default();
    cfg.noise.enabled = true;
    for axis in Axis::BOTH {
        let s = noise_error_std(
            plants.get(axis),
            controllers.get(axis),
            &cfg.noise,
            cfg.sample_rate_hz,
        )?;
        println!("{}: steady-state error std {s:.4e} mils", axis.name());
    }

    // repeat one engagement on independent noise streams
    let b = BoundingBox::new(900.0, 500.0, 980.0, 580.0)?;
    let gt = GroundTruthRecord::new("n", b);
    let det = DetectionRecord::new("n", b, 1.0)?;
    let errs = (0..200u64)
        .map(|k| run_targeting(&det, &gt, &plants, &controllers, &cfg, k).map(|r| r.r_br_mils))
        .collect::<atr_turret::Result<Vec<_>>>()?;
    let st = basic_stats(&errs)?;
    println!(
        "controller error over 200 noisy runs: mean {:.4e}, std {:.4e} mils",
        st.mean, st.std
    );
    Ok(())
}
