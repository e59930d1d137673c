//! Correlations of AI error with detector outputs, and the split of total
//! aiming error into its AI and controller parts.

use atr_turret::analysis::{
    correlation_study, error_distribution_study, ErrorSource, SampleFilter,
};
use atr_turret::config::RunConfig;
use atr_turret::pipeline::run_simulations;
use atr_turret::synthetic::{synthetic_dataset, SyntheticSpec};

fn main() -> atr_turret::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.simulation.noise.enabled = true;
    let cal = cfg.simulation.calibration;
    let ds = synthetic_dataset(
        &SyntheticSpec {
            clutter_rate: 0.15,
            ..SyntheticSpec::with_images(400)
        },
        &cal,
    )?;

    let corr = correlation_study(&ds, &cal, &SampleFilter::ALL)?;
    let f = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:+.3}"));
    for row in &corr.rows {
        println!(
            "{:<16} n {:>4}  r(AI, conf) {}  r(AI, IoU) {}  r(AI, area) {}",
            row.filter.name(),
            row.n,
            f(row.ai_vs_confidence),
            f(row.ai_vs_iou),
            f(row.ai_vs_area)
        );
    }

    let sims = run_simulations(&ds, &cfg)?;
    let rep = error_distribution_study(&sims, cfg.histogram_bin_mils)?;
    for s in &rep.scenarios {
        let mean = |k| rep.mean(s.origin, k).unwrap_or(f64::NAN);
        println!(
            "{}: mean AI {:.3}, controller {:.3}, total {:.3} mils",
            s.origin,
            mean(ErrorSource::Ai),
            mean(ErrorSource::Controller),
            mean(ErrorSource::Total)
        );
        if let Some(d) = &s.decomposition {
            println!(
                "  var total {:.4e} vs AI + controller {:.4e}",
                d.var_rg, d.approximation
            );
        }
    }
    Ok(())
}
