//! CSV tables and SVG charts for each pipeline stage. Angles are in mils.
//!
//! Every table is written even when it has no rows, so downstream tooling
//! sees a stable set of files.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::hitprob::PhMatrix;
use crate::io::{num, opt_num, write_file, CsvOut};
use crate::pipeline::AnalysisOutput;
use crate::pipeline::{DesignOutput, FullRun, MetricsOutput, ScenarioResults};
use crate::svg::{Chart, Series, Style};
use crate::turretmodel::Axis;
use crate::units::rad_to_mils;

fn svg(dir: &Path, name: &str, chart: &Chart) -> Result<PathBuf> {
    let p = dir.join(name);
    write_file(&p, chart.render().as_bytes())?;
    Ok(p)
}

pub const METRICS_HEADER: [&str; 13] = [
    "stratum",
    "iou_lo",
    "iou_hi",
    "detections",
    "ground_truths",
    "mean_confidence",
    "mean_iou",
    "ap50",
    "ap75",
    "ap_50_5_95",
    "ar1",
    "ar10",
    "note",
];

pub fn write_metrics(dir: &Path, m: &MetricsOutput) -> Result<Vec<PathBuf>> {
    let mut t = CsvOut::new(dir.join("metrics.csv"), &METRICS_HEADER)?;
    for row in &m.rows {
        let r = &row.report;
        let (lo, hi) = row
            .iou_range
            .map_or((String::new(), String::new()), |(a, b)| (num(a), num(b)));
        let mx = r.metrics;
        t.row([
            row.label.clone(),
            lo,
            hi,
            r.n_detections.to_string(),
            r.n_ground_truths.to_string(),
            opt_num(r.mean_confidence),
            opt_num(r.mean_iou),
            opt_num(mx.map(|x| x.ap50)),
            opt_num(mx.map(|x| x.ap75)),
            opt_num(mx.map(|x| x.ap_50_5_95)),
            opt_num(mx.map(|x| x.ar1)),
            opt_num(mx.map(|x| x.ar10)),
            if mx.is_none() {
                "no ground truths".into()
            } else {
                String::new()
            },
        ])?;
    }
    let mut files = vec![t.finish()?];

    let mut ex = CsvOut::new(
        dir.join("stratum_exclusions.csv"),
        &["reason", "detections"],
    )?;
    ex.row([
        "background image".to_string(),
        m.excluded_background.to_string(),
    ])?;
    ex.row(["zero iou".to_string(), m.excluded_zero_iou.to_string()])?;
    ex.row(["area rule".to_string(), m.excluded_area.to_string()])?;
    files.push(ex.finish()?);

    let mut pr = CsvOut::new(
        dir.join("pr_curve.csv"),
        &["iou_threshold", "confidence", "recall", "precision"],
    )?;
    let mut chart = Chart::new("Precision-recall", "recall", "precision").y_range(0.0, 1.0);
    for c in &m.curves {
        for p in &c.points {
            pr.row([
                num(c.iou_threshold),
                num(p.confidence),
                num(p.recall),
                num(p.precision),
            ])?;
        }
        chart.push(Series::new(
            format!("IoU {}", c.iou_threshold),
            c.reference_pairs(),
            Style::Line,
        ));
    }
    files.push(pr.finish()?);
    files.push(svg(dir, "pr_curve.svg", &chart)?);
    Ok(files)
}

pub fn write_design(dir: &Path, d: &DesignOutput) -> Result<Vec<PathBuf>> {
    let header = [
        "axis",
        "inertia_kg_m2",
        "damping_rate_per_s",
        "kp",
        "ti_s",
        "td_s",
        "gamma",
        "crossover_hz",
        "phase_margin_deg",
        "noise_std_mils",
        "probe_mils",
        "settling_time_s",
    ];
    let mut t = CsvOut::new(dir.join("design.csv"), &header)?;
    for a in &d.axes {
        let c = a.controller;
        t.row([
            a.axis.name().to_string(),
            num(a.inertia),
            num(a.damping_rate),
            num(c.kp),
            num(c.ti),
            num(c.td),
            num(c.gamma),
            num(a.analysis.crossover_hz()),
            num(a.analysis.phase_margin_deg),
            num(a.noise_std_mils),
            num(d.probe_mils),
            opt_num(a.settling_time_s),
        ])?;
    }
    let mut files = vec![t.finish()?];

    let mut b = CsvOut::new(
        dir.join("open_loop.csv"),
        &["axis", "frequency_hz", "magnitude_db", "phase_deg"],
    )?;
    let mut mag = Chart::new("Open-loop magnitude", "frequency (Hz)", "|L| (dB)").log_x();
    let mut phase = Chart::new("Open-loop phase", "frequency (Hz)", "phase (deg)").log_x();
    for axis in Axis::BOTH {
        let pts: Vec<_> = d.bode.iter().filter(|p| p.axis == axis).collect();
        for p in &pts {
            b.row([
                axis.name().to_string(),
                num(p.frequency_hz),
                num(p.magnitude_db),
                num(p.phase_deg),
            ])?;
        }
        mag.push(Series::new(
            axis.name(),
            pts.iter()
                .map(|p| (p.frequency_hz, p.magnitude_db))
                .collect(),
            Style::Line,
        ));
        phase.push(Series::new(
            axis.name(),
            pts.iter().map(|p| (p.frequency_hz, p.phase_deg)).collect(),
            Style::Line,
        ));
    }
    files.push(b.finish()?);
    files.push(svg(dir, "open_loop_magnitude.svg", &mag)?);
    files.push(svg(dir, "open_loop_phase.svg", &phase)?);
    Ok(files)
}

pub const SIMULATION_HEADER: [&str; 15] = [
    "origin",
    "image_id",
    "aim_x_px",
    "aim_y_px",
    "true_x_px",
    "true_y_px",
    "shot_x_px",
    "shot_y_px",
    "aim_az_mils",
    "aim_el_mils",
    "ai_error_mils",
    "controller_error_mils",
    "total_error_mils",
    "firing_time_s",
    "settling_time_s",
];

pub fn write_simulations(dir: &Path, sims: &ScenarioResults) -> Result<Vec<PathBuf>> {
    let mut t = CsvOut::new(dir.join("simulations.csv"), &SIMULATION_HEADER)?;
    let mut tr = CsvOut::new(
        dir.join("trajectory.csv"),
        &[
            "origin",
            "t_s",
            "ref_az_mils",
            "out_az_mils",
            "ref_el_mils",
            "out_el_mils",
        ],
    )?;
    let mut chart = Chart::new("First engagement", "time (s)", "angle (mils)");
    for (origin, results) in sims {
        for r in results {
            t.row([
                origin.as_str().to_string(),
                r.image_id.clone(),
                num(r.aimpoint.x),
                num(r.aimpoint.y),
                num(r.true_aimpoint.x),
                num(r.true_aimpoint.y),
                num(r.shot.x),
                num(r.shot.y),
                num(rad_to_mils(r.aimpoint_rad.0)),
                num(rad_to_mils(r.aimpoint_rad.1)),
                num(r.r_bg_mils),
                num(r.r_br_mils),
                num(r.r_rg_mils),
                num(r.firing_time_s),
                opt_num(r.settling_time_s),
            ])?;
        }
        // one representative move per origin
        if let Some(first) = results.first() {
            let m = rad_to_mils;
            for s in &first.trajectory {
                tr.row([
                    origin.as_str().to_string(),
                    num(s.t),
                    num(m(s.r_az)),
                    num(m(s.y_az)),
                    num(m(s.r_el)),
                    num(m(s.y_el)),
                ])?;
            }
            let az = first.trajectory.iter().map(|s| (s.t, m(s.y_az))).collect();
            let el = first.trajectory.iter().map(|s| (s.t, m(s.y_el))).collect();
            chart.push(Series::new(format!("{origin} az"), az, Style::Line));
            chart.push(Series::new(format!("{origin} el"), el, Style::Line));
        }
    }
    Ok(vec![
        t.finish()?,
        tr.finish()?,
        svg(dir, "trajectory.svg", &chart)?,
    ])
}

pub fn write_sweep(dir: &Path, m: &PhMatrix) -> Result<Vec<PathBuf>> {
    let mut t = CsvOut::new(
        dir.join("ph_matrix.csv"),
        &["stratum", "engagements", "range_m", "origin", "mean_ph"],
    )?;
    let mut chart = Chart::new("Probability of hit", "range (m)", "mean P_h").y_range(0.0, 1.0);
    for (s, label) in m.labels.iter().enumerate() {
        for (r, &range) in m.ranges_m.iter().enumerate() {
            for (o, origin) in m.origins.iter().enumerate() {
                t.row([
                    label.clone(),
                    m.counts[s].to_string(),
                    num(range),
                    origin.as_str().to_string(),
                    opt_num(m.mean[s][r][o]),
                ])?;
            }
        }
        for (o, origin) in m.origins.iter().enumerate() {
            let pts: Vec<(f64, f64)> = m
                .ranges_m
                .iter()
                .enumerate()
                .filter_map(|(r, &x)| m.mean[s][r][o].map(|p| (x, p)))
                .collect();
            if !pts.is_empty() {
                chart.push(Series::new(format!("{label} {origin}"), pts, Style::Line));
            }
        }
    }
    Ok(vec![t.finish()?, svg(dir, "ph_vs_range.svg", &chart)?])
}

pub fn write_analysis(dir: &Path, a: &AnalysisOutput) -> Result<Vec<PathBuf>> {
    let mut files = vec![];
    let corr_header = [
        "filter",
        "n",
        "ai_error_mean_mils",
        "ai_error_std_mils",
        "r_ai_confidence",
        "r_ai_iou",
        "r_ai_area",
        "r_iou_confidence",
    ];
    let mut c = CsvOut::new(dir.join("correlation.csv"), &corr_header)?;
    let mut s = CsvOut::new(
        dir.join("scatter.csv"),
        &[
            "detection",
            "ai_error_mils",
            "iou",
            "confidence",
            "normalized_area",
        ],
    )?;
    let mut scatter = Chart::new("AI error against IoU", "IoU", "AI error (mils)");
    if let Some(rep) = &a.correlation {
        for row in &rep.rows {
            c.row([
                row.filter.name().to_string(),
                row.n.to_string(),
                opt_num(row.ai_error.map(|s| s.mean)),
                opt_num(row.ai_error.map(|s| s.std)),
                opt_num(row.ai_vs_confidence),
                opt_num(row.ai_vs_iou),
                opt_num(row.ai_vs_area),
                opt_num(row.iou_vs_confidence),
            ])?;
        }
        for p in &rep.samples {
            s.row([
                p.detection.to_string(),
                num(p.ai_error_mils),
                num(p.iou),
                num(p.confidence),
                num(p.normalized_area),
            ])?;
        }
        scatter.push(Series::new(
            "detections",
            rep.samples
                .iter()
                .map(|p| (p.iou, p.ai_error_mils))
                .collect(),
            Style::Points,
        ));
    }
    files.extend([
        c.finish()?,
        s.finish()?,
        svg(dir, "scatter_ai_iou.svg", &scatter)?,
    ]);

    let d = &a.distribution;
    let mut h = CsvOut::new(
        dir.join("histograms.csv"),
        &["origin", "error", "bin_lo_mils", "bin_hi_mils", "count"],
    )?;
    let mut st = CsvOut::new(
        dir.join("error_stats.csv"),
        &["origin", "error", "n", "mean_mils", "std_mils"],
    )?;
    let dec_header = [
        "origin",
        "n",
        "var_total",
        "var_ai",
        "var_controller",
        "var_eps",
        "cov_ai_controller",
        "cov_ai_eps",
        "cov_controller_eps",
        "approximation",
        "approximation_rel_error",
        "residual",
    ];
    let mut dc = CsvOut::new(dir.join("decomposition.csv"), &dec_header)?;
    for sc in &d.scenarios {
        let origin = sc.origin.as_str();
        let mut chart = Chart::new(
            format!("Error distribution, {origin} origin"),
            "error (mils)",
            "count",
        )
        .bars(d.bin_width_mils);
        for e in &sc.errors {
            for ((lo, hi), n) in e.histogram.edges().zip(&e.histogram.counts) {
                h.row([
                    origin.to_string(),
                    e.kind.name().to_string(),
                    num(lo),
                    num(hi),
                    n.to_string(),
                ])?;
            }
            st.row([
                origin.to_string(),
                e.kind.name().to_string(),
                sc.n.to_string(),
                opt_num(e.stats.map(|s| s.mean)),
                opt_num(e.stats.map(|s| s.std)),
            ])?;
            let pts = e
                .histogram
                .edges()
                .zip(&e.histogram.counts)
                .map(|((lo, hi), &n)| ((lo + hi) / 2.0, n as f64))
                .collect();
            chart.push(Series::new(e.kind.name(), pts, Style::Bars));
        }
        if let Some(x) = &sc.decomposition {
            dc.row([
                origin.to_string(),
                x.n.to_string(),
                num(x.var_rg),
                num(x.var_bg),
                num(x.var_br),
                num(x.var_eps),
                num(x.cov_bg_br),
                num(x.cov_bg_eps),
                num(x.cov_br_eps),
                num(x.approximation),
                opt_num(x.approximation_rel_error),
                num(x.residual),
            ])?;
        }
        files.push(svg(dir, &format!("histogram_{origin}.svg"), &chart)?);
    }
    let mut dl = CsvOut::new(
        dir.join("scenario_deltas.csv"),
        &["error", "from", "to", "mean_change_pct"],
    )?;
    for x in &d.deltas {
        dl.row([
            x.kind.name().to_string(),
            x.from.as_str().to_string(),
            x.to.as_str().to_string(),
            opt_num(x.mean_change_pct),
        ])?;
    }
    files.extend([h.finish()?, st.finish()?, dc.finish()?, dl.finish()?]);
    Ok(files)
}

pub fn emit_reports(run: &FullRun, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = write_metrics(dir, &run.metrics)?;
    files.extend(write_design(dir, &run.design)?);
    files.extend(write_simulations(dir, &run.simulations)?);
    files.extend(write_sweep(dir, &run.sweep)?);
    files.extend(write_analysis(dir, &run.analysis)?);
    Ok(files)
}
