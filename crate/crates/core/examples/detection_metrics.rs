//! AP/AR on a seeded synthetic set, overall and per IoU stratum.

use atr_turret::detgeom::{iou, BoundingBox, Calibration};
use atr_turret::detmetrics::{evaluate, stratified_sample, AreaRule, IouBins};
use atr_turret::synthetic::{synthetic_dataset, SyntheticSpec};

fn main() -> atr_turret::Result<()> {
    let a = BoundingBox::new(0.0, 0.0, 10.0, 10.0)?;
    let b = BoundingBox::new(5.0, 0.0, 15.0, 10.0)?;
    println!("IoU of two half-overlapping squares: {:.4}", iou(&a, &b)?);

    let spec = SyntheticSpec {
        clutter_rate: 0.1,
        ..SyntheticSpec::with_images(500)
    };
    let ds = synthetic_dataset(&spec, &Calibration::default())?;
    let all = evaluate(&ds)?;
    let m = all.metrics.expect("dataset has ground truths");
    println!(
        "{} detections / {} objects: AP50 {:.4}  AP75 {:.4}  AP@[.5:.95] {:.4}  AR1 {:.4}  AR10 {:.4}",
        all.n_detections, all.n_ground_truths, m.ap50, m.ap75, m.ap_50_5_95, m.ar1, m.ar10
    );

    let s = stratified_sample(&ds, &IouBins::default(), AreaRule::default())?;
    for st in &s.strata {
        let r = evaluate(&st.dataset)?;
        let ap = r.metrics.map_or("-".into(), |m| format!("{:.4}", m.ap50));
        println!(
            "stratum {} [{:.1}, {:.1}): {:>4} detections, AP50 {ap}",
            st.label, st.lo, st.hi, r.n_detections
        );
    }
    println!(
        "background detections dropped: {}",
        s.excluded_background.len()
    );
    Ok(())
}
