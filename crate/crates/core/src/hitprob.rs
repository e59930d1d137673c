//! Probability of hit for an independent bivariate normal impact
//! distribution over a rectangular target, and error budgets per range.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controldesign::PiLeadController;
use crate::detgeom::{Calibration, GroundTruthRecord, Origin};
use crate::error::{require_positive, Error, Result};
use crate::simengine::{noise_error_std_pair, run_targeting, Engagement, SimConfig};
use crate::turretmodel::{AxisPair, PlantModel};
use crate::units::mils_to_meters_at;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Impact distribution at one range: total biases and dispersions, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBudget {
    pub range_m: f64,
    pub mu_x_m: f64,
    pub mu_y_m: f64,
    pub sigma_x_m: f64,
    pub sigma_y_m: f64,
}

impl ErrorBudget {
    pub fn validate(&self) -> Result<()> {
        require_positive("range_m", self.range_m)?;
        require_positive("sigma_x_m", self.sigma_x_m)?;
        require_positive("sigma_y_m", self.sigma_y_m)?;
        if !(self.mu_x_m.is_finite() && self.mu_y_m.is_finite()) {
            return Err(Error::invalid("bias", "must be finite"));
        }
        Ok(())
    }
}

/// Budget rows keyed by strictly increasing range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetTable {
    rows: Vec<ErrorBudget>,
}

impl BudgetTable {
    pub fn new(rows: Vec<ErrorBudget>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        for r in &rows {
            r.validate()?;
        }
        if rows.windows(2).any(|w| w[0].range_m >= w[1].range_m) {
            return Err(Error::invalid(
                "budget table",
                "ranges must be strictly increasing",
            ));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ErrorBudget] {
        &self.rows
    }

    /// Placeholder ballistic budget with dispersions growing linearly in
    /// range. Not derived from any fire-control model; supply a real table
    /// for meaningful absolute values.
    pub fn synthetic() -> Self {
        let rows = (1..=6)
            .map(|i| {
                let r = 500.0 * i as f64;
                let km = r / 1000.0;
                ErrorBudget {
                    range_m: r,
                    mu_x_m: 0.02,
                    mu_y_m: 0.05,
                    sigma_x_m: 0.10 + 0.12 * km,
                    sigma_y_m: 0.12 + 0.15 * km,
                }
            })
            .collect();
        Self { rows }
    }

    /// Linear interpolation in range; clamped to the end rows outside the
    /// table span.
    pub fn at(&self, range_m: f64) -> Result<ErrorBudget> {
        require_positive("range_m", range_m)?;
        let first = self.rows[0];
        let last = *self.rows.last().unwrap();
        if range_m < first.range_m || range_m > last.range_m {
            warn!(
                "range {range_m} m outside budget table [{}, {}] m; using the nearest row",
                first.range_m, last.range_m
            );
        }
        if range_m <= first.range_m {
            return Ok(ErrorBudget { range_m, ..first });
        }
        if range_m >= last.range_m {
            return Ok(ErrorBudget { range_m, ..last });
        }
        let i = self.rows.partition_point(|r| r.range_m <= range_m);
        let (a, b) = (self.rows[i - 1], self.rows[i]);
        let t = (range_m - a.range_m) / (b.range_m - a.range_m);
        let lerp = |x: f64, y: f64| x + t * (y - x);
        Ok(ErrorBudget {
            range_m,
            mu_x_m: lerp(a.mu_x_m, b.mu_x_m),
            mu_y_m: lerp(a.mu_y_m, b.mu_y_m),
            sigma_x_m: lerp(a.sigma_x_m, b.sigma_x_m),
            sigma_y_m: lerp(a.sigma_y_m, b.sigma_y_m),
        })
    }
}

/// Adds the turret's shot offset to the table bias and its error spread
/// to the table variance, per axis. All quantities in meters.
pub fn compose_budget(
    table: &BudgetTable,
    range_m: f64,
    turret_bias: (f64, f64),
    turret_sigma: (f64, f64),
) -> Result<ErrorBudget> {
    let row = table.at(range_m)?;
    if !(turret_sigma.0 >= 0.0 && turret_sigma.1 >= 0.0) {
        return Err(Error::invalid("turret sigma", "must be ≥ 0"));
    }
    let b = ErrorBudget {
        range_m,
        mu_x_m: row.mu_x_m + turret_bias.0,
        mu_y_m: row.mu_y_m + turret_bias.1,
        sigma_x_m: row.sigma_x_m.hypot(turret_sigma.0),
        sigma_y_m: row.sigma_y_m.hypot(turret_sigma.1),
    };
    b.validate()?;
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HitResult {
    pub p_hit: f64,
    /// `[x1, x2, y1, y2]` in meters about the target centre.
    pub limits_m: [f64; 4],
    pub budget: ErrorBudget,
}

/// `P(x1 ≤ X ≤ x2) · P(y1 ≤ Y ≤ y2)` for independent normal `X`, `Y`.
pub fn rectangle_probability(b: &ErrorBudget, limits_m: [f64; 4]) -> Result<f64> {
    require_positive("sigma_x_m", b.sigma_x_m)?;
    require_positive("sigma_y_m", b.sigma_y_m)?;
    let [x1, x2, y1, y2] = limits_m;
    let axis = |lo: f64, hi: f64, mu: f64, s: f64| {
        // upper tail differences keep precision when both limits are far right
        let (a, c) = ((lo - mu) / s, (hi - mu) / s);
        if a > 0.0 {
            normal_cdf(-a) - normal_cdf(-c)
        } else {
            normal_cdf(c) - normal_cdf(a)
        }
    };
    let p = axis(x1, x2, b.mu_x_m, b.sigma_x_m) * axis(y1, y2, b.mu_y_m, b.sigma_y_m);
    Ok(p.clamp(0.0, 1.0))
}

/// Hit probability on the ground-truth box, with the impact mean measured
/// from the box centre.
pub fn probability_of_hit(
    budget: &ErrorBudget,
    gt: &GroundTruthRecord,
    cal: &Calibration,
) -> Result<HitResult> {
    if gt.bbox.area() <= 0.0 {
        return Err(Error::invalid(
            "ground truth",
            "box must have positive area",
        ));
    }
    let (hw, hh) = (
        cal.px_to_m(gt.bbox.width()) / 2.0,
        cal.px_to_m(gt.bbox.height()) / 2.0,
    );
    let limits_m = [-hw, hw, -hh, hh];
    Ok(HitResult {
        p_hit: rectangle_probability(budget, limits_m)?,
        limits_m,
        budget: *budget,
    })
}

/// Mean `P_h` per stratum, range and start origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhMatrix {
    pub labels: Vec<String>,
    pub ranges_m: Vec<f64>,
    pub origins: Vec<Origin>,
    /// `mean[stratum][range][origin]`; `None` for empty strata.
    pub mean: Vec<Vec<Vec<Option<f64>>>>,
    pub counts: Vec<usize>,
}

/// Hit probability of each engagement at `cfg`'s calibration range.
pub fn engagement_hit_probabilities(
    engagements: &[Engagement],
    plants: &AxisPair<PlantModel>,
    controllers: &AxisPair<PiLeadController>,
    cfg: &SimConfig,
    table: &BudgetTable,
) -> Result<Vec<f64>> {
    let range = cfg.calibration.range_m;
    let sigma = noise_error_std_pair(plants, controllers, cfg)?;
    let turret_sigma = (
        mils_to_meters_at(sigma.azimuth, range),
        mils_to_meters_at(sigma.elevation, range),
    );
    engagements
        .par_iter()
        .map(|e| {
            let sim = run_targeting(
                &e.detection,
                &e.ground_truth,
                plants,
                controllers,
                cfg,
                e.stream,
            )?;
            let offset = sim.r_rg();
            let bias = (
                cfg.calibration.px_to_m(offset.x),
                cfg.calibration.px_to_m(offset.y),
            );
            let budget = compose_budget(table, range, bias, turret_sigma)?;
            Ok(probability_of_hit(&budget, &e.ground_truth, &cfg.calibration)?.p_hit)
        })
        .collect()
}

/// `P_h` averaged over each stratum's engagements for every range and
/// start origin.
#[allow(clippy::too_many_arguments)]
pub fn ph_range_sweep(
    strata: &[(String, Vec<Engagement>)],
    ranges_m: &[f64],
    origins: &[Origin],
    plants: &AxisPair<PlantModel>,
    controllers: &AxisPair<PiLeadController>,
    base: &SimConfig,
    table: &BudgetTable,
) -> Result<PhMatrix> {
    for &r in ranges_m {
        require_positive("range", r)?;
    }
    let mut mean = Vec::with_capacity(strata.len());
    for (label, engagements) in strata {
        if engagements.is_empty() {
            warn!("stratum {label} is empty; skipped in the range sweep");
            mean.push(vec![vec![None; origins.len()]; ranges_m.len()]);
            continue;
        }
        let mut per_range = Vec::with_capacity(ranges_m.len());
        for &range in ranges_m {
            let mut per_origin = Vec::with_capacity(origins.len());
            for &origin in origins {
                let cfg = SimConfig {
                    start_origin: origin,
                    calibration: base.calibration.with_range(range),
                    ..base.clone()
                };
                let p =
                    engagement_hit_probabilities(engagements, plants, controllers, &cfg, table)?;
                per_origin.push(Some(p.iter().sum::<f64>() / p.len() as f64));
            }
            per_range.push(per_origin);
        }
        mean.push(per_range);
    }
    Ok(PhMatrix {
        labels: strata.iter().map(|(l, _)| l.clone()).collect(),
        ranges_m: ranges_m.to_vec(),
        origins: origins.to_vec(),
        mean,
        counts: strata.iter().map(|(_, e)| e.len()).collect(),
    })
}
