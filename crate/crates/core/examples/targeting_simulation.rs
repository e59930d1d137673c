//! One closed-loop engagement from each start origin.

use atr_turret::controldesign::PiLeadController;
use atr_turret::detgeom::{BoundingBox, DetectionRecord, GroundTruthRecord, Origin};
use atr_turret::simengine::{run_targeting, SimConfig};
use atr_turret::turretmodel::{plant_pair, Axis, AxisPair, TurretParams};

fn main() -> atr_turret::Result<()> {
    let plants = plant_pair(&TurretParams::default())?;
    let controllers = AxisPair {
        azimuth: PiLeadController::published(Axis::Azimuth),
        elevation: PiLeadController::published(Axis::Elevation),
    };
    let gt = GroundTruthRecord::new("demo", BoundingBox::new(1300.0, 300.0, 1380.0, 380.0)?);
    let det = DetectionRecord::new(
        "demo",
        BoundingBox::new(1306.0, 296.0, 1390.0, 381.0)?,
        0.93,
    )?;

    for origin in [Origin::BottomLeft, Origin::Center] {
        let cfg = SimConfig {
            start_origin: origin,
            ..SimConfig::default()
        };
        let r = run_targeting(&det, &gt, &plants, &controllers, &cfg, 0)?;
        println!(
            "{origin}: fired at {:.3} s, AI error {:.4} mils, controller {:.4} mils, total {:.4} mils",
            r.firing_time_s, r.r_bg_mils, r.r_br_mils, r.r_rg_mils
        );
    }
    Ok(())
}
