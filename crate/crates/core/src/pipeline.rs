//! End-to-end runs behind the CLI verbs. Each stage returns plain data; the
//! `report` module turns it into files.

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    correlation_study, error_distribution_study, CorrelationReport, ErrorDistributionReport,
    SampleFilter,
};
use crate::config::RunConfig;
use crate::controldesign::{analyze_loop, LoopAnalysis, PiLeadController};
use crate::detgeom::Origin;
use crate::detmetrics::{
    build_pr_curve, evaluate, stratified_sample, ApReport, MetricsDataset, PrCurve, Stratification,
};
use crate::error::Result;
use crate::hitprob::{ph_range_sweep, BudgetTable, PhMatrix};
use crate::lti::{FrequencyDomain, Series};
use crate::simengine::{
    make_reference, noise_error_std, run_targeting, settling_time, simulate_axis, Engagement,
    SimulationResult,
};
use crate::turretmodel::{Axis, AxisPair, PlantModel};
use crate::units::{mils_to_rad, rad_per_s_to_hz};

/// AP/AR summary of one set of detections.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    /// `all` for the whole dataset, otherwise the IoU bin label.
    pub label: String,
    pub iou_range: Option<(f64, f64)>,
    pub report: ApReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsOutput {
    pub rows: Vec<MetricsRow>,
    pub curves: Vec<PrCurve>,
    pub excluded_background: usize,
    pub excluded_zero_iou: usize,
    pub excluded_area: usize,
}

pub fn run_metrics(ds: &MetricsDataset, cfg: &RunConfig) -> Result<MetricsOutput> {
    let mut rows = vec![MetricsRow {
        label: "all".into(),
        iou_range: None,
        report: evaluate(ds)?,
    }];
    let curves = if ds.g() > 0 {
        [0.5, 0.75]
            .iter()
            .map(|&t| build_pr_curve(ds, t))
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![]
    };
    let mut out = MetricsOutput {
        rows: vec![],
        curves,
        excluded_background: 0,
        excluded_zero_iou: 0,
        excluded_area: 0,
    };
    if !ds.detections.is_empty() {
        let s = stratified_sample(ds, &cfg.bins, cfg.area_rule)?;
        for st in &s.strata {
            rows.push(MetricsRow {
                label: st.label.clone(),
                iou_range: Some((st.lo, st.hi)),
                report: evaluate(&st.dataset)?,
            });
        }
        out.excluded_background = s.excluded_background.len();
        out.excluded_zero_iou = s.excluded_zero_iou.len();
        out.excluded_area = s.excluded_area.len();
    }
    out.rows = rows;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisDesign {
    pub axis: Axis,
    pub inertia: f64,
    pub damping_rate: f64,
    pub controller: PiLeadController,
    pub analysis: LoopAnalysis,
    /// Aiming error spread from reference noise, in mils.
    pub noise_std_mils: f64,
    /// Settling time of the probe move, in seconds.
    pub settling_time_s: Option<f64>,
}

/// One point of the open-loop frequency response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodePoint {
    pub axis: Axis,
    pub frequency_hz: f64,
    pub magnitude_db: f64,
    pub phase_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignOutput {
    pub axes: Vec<AxisDesign>,
    pub probe_mils: f64,
    pub bode: Vec<BodePoint>,
}

/// Size of the move used to report settling time.
pub const PROBE_MILS: f64 = 20.0;

pub fn run_design(cfg: &RunConfig) -> Result<DesignOutput> {
    let plants = cfg.plants()?;
    let controllers = cfg.controllers(&plants)?;
    let sim = cfg.sim_config();
    let mut axes = vec![];
    let mut bode = vec![];
    for axis in Axis::BOTH {
        let (p, c) = (plants.get(axis), controllers.get(axis));
        let analysis = analyze_loop(p, c)?;
        let r = make_reference(mils_to_rad(PROBE_MILS), sim.slope_rad_s())?;
        let tr = simulate_axis(p, c, &r, &sim, r.ramp_duration() + 4.0)?;
        axes.push(AxisDesign {
            axis,
            inertia: p.inertia,
            damping_rate: p.damping_rate,
            controller: *c,
            analysis,
            noise_std_mils: noise_error_std(p, c, &sim.noise, sim.sample_rate_hz)?,
            settling_time_s: settling_time(&tr, r.target, sim.settle_band),
        });
        let l = Series(p, c);
        // 0.01 Hz to 1 kHz, 20 points per decade
        for k in 0..=100 {
            let omega = 2.0 * std::f64::consts::PI * 10f64.powf(-2.0 + k as f64 / 20.0);
            let fr = l.frequency_response(omega)?;
            bode.push(BodePoint {
                axis,
                frequency_hz: rad_per_s_to_hz(omega),
                magnitude_db: 20.0 * fr.magnitude.log10(),
                phase_deg: fr.phase_deg,
            });
        }
    }
    Ok(DesignOutput {
        axes,
        probe_mils: PROBE_MILS,
        bode,
    })
}

/// One engagement per detection that shares an image with a ground truth,
/// scored against its associated ground truth.
pub fn engagements(ds: &MetricsDataset) -> Vec<Engagement> {
    ds.associations()
        .into_iter()
        .enumerate()
        .filter_map(|(i, a)| {
            a.map(|a| Engagement {
                stream: i as u64,
                detection: ds.detections[i].clone(),
                ground_truth: ds.ground_truths[a.gt].clone(),
            })
        })
        .collect()
}

pub fn stratum_engagements(s: &Stratification) -> Vec<(String, Vec<Engagement>)> {
    s.strata
        .iter()
        .map(|st| {
            let e = (0..st.source_indices.len())
                .map(|k| Engagement {
                    stream: st.source_indices[k] as u64,
                    detection: st.dataset.detections[k].clone(),
                    ground_truth: st.dataset.ground_truths[st.gt_of_detection[k]].clone(),
                })
                .collect();
            (st.label.clone(), e)
        })
        .collect()
}

pub type ScenarioResults = Vec<(Origin, Vec<SimulationResult>)>;

fn loop_setup(cfg: &RunConfig) -> Result<(AxisPair<PlantModel>, AxisPair<PiLeadController>)> {
    let plants = cfg.plants()?;
    let controllers = cfg.controllers(&plants)?;
    Ok((plants, controllers))
}

/// Targeting runs for every engagement under each configured origin.
pub fn run_simulations(ds: &MetricsDataset, cfg: &RunConfig) -> Result<ScenarioResults> {
    let (plants, controllers) = loop_setup(cfg)?;
    let engagements = engagements(ds);
    cfg.origins
        .iter()
        .map(|&origin| {
            let sim = crate::simengine::SimConfig {
                start_origin: origin,
                ..cfg.sim_config()
            };
            info!(
                "simulating {} engagements from the {origin} origin",
                engagements.len()
            );
            let results = engagements
                .par_iter()
                .map(|e| {
                    run_targeting(
                        &e.detection,
                        &e.ground_truth,
                        &plants,
                        &controllers,
                        &sim,
                        e.stream,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((origin, results))
        })
        .collect()
}

pub fn run_sweep(ds: &MetricsDataset, table: &BudgetTable, cfg: &RunConfig) -> Result<PhMatrix> {
    let (plants, controllers) = loop_setup(cfg)?;
    let strata = if ds.detections.is_empty() {
        cfg.bins
            .labels
            .iter()
            .map(|l| (l.clone(), vec![]))
            .collect()
    } else {
        stratum_engagements(&stratified_sample(ds, &cfg.bins, cfg.area_rule)?)
    };
    info!(
        "sweeping {} ranges over {} strata",
        cfg.ranges_m.len(),
        strata.len()
    );
    ph_range_sweep(
        &strata,
        &cfg.ranges_m,
        &cfg.origins,
        &plants,
        &controllers,
        &cfg.sim_config(),
        table,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOutput {
    /// `None` when no detection has a same-image ground truth.
    pub correlation: Option<CorrelationReport>,
    pub distribution: ErrorDistributionReport,
}

pub fn run_analysis(
    ds: &MetricsDataset,
    sims: &ScenarioResults,
    cfg: &RunConfig,
) -> Result<AnalysisOutput> {
    let correlation = if engagements(ds).is_empty() {
        None
    } else {
        Some(correlation_study(
            ds,
            &cfg.simulation.calibration,
            &SampleFilter::ALL,
        )?)
    };
    Ok(AnalysisOutput {
        correlation,
        distribution: error_distribution_study(sims, cfg.histogram_bin_mils)?,
    })
}

/// Everything the `all` verb produces.
#[derive(Debug, Clone, PartialEq)]
pub struct FullRun {
    pub metrics: MetricsOutput,
    pub design: DesignOutput,
    pub simulations: ScenarioResults,
    pub sweep: PhMatrix,
    pub analysis: AnalysisOutput,
}

pub fn run_all(ds: &MetricsDataset, table: &BudgetTable, cfg: &RunConfig) -> Result<FullRun> {
    let metrics = run_metrics(ds, cfg)?;
    let design = run_design(cfg)?;
    let simulations = run_simulations(ds, cfg)?;
    let sweep = run_sweep(ds, table, cfg)?;
    let analysis = run_analysis(ds, &simulations, cfg)?;
    Ok(FullRun {
        metrics,
        design,
        simulations,
        sweep,
        analysis,
    })
}
