//! Discrete-time targeting runs: move-and-settle references, the sampled
//! unity-feedback loop for each axis, firing and settling times, error
//! vectors, and the steady-state error spread caused by aimpoint noise.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::controldesign::PiLeadController;
use crate::detgeom::{
    centroid, convert_origin, Calibration, DetectionRecord, GroundTruthRecord, Origin, PixelVector,
};
use crate::error::{require_positive, Error, Result};
use crate::lti::{ContinuousTf, DiscreteFilter, DiscreteTf};
use crate::turretmodel::{Axis, AxisPair, PlantModel};
use crate::units::{mils_to_rad, rad_to_mils};

/// Slew rate above which a warning is logged.
pub const MAX_SLEW_DEG_S: f64 = 45.0;
/// Elevation above which the linear plant is no longer a fair model.
pub const MAX_ELEVATION_DEG: f64 = 30.0;

/// Ramp at `slope` until `target` is reached, then hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCommand {
    pub slope: f64,
    pub target: f64,
}

pub fn make_reference(target: f64, slope: f64) -> Result<ReferenceCommand> {
    require_positive("ramp slope", slope)?;
    if !target.is_finite() {
        return Err(Error::invalid("aimpoint", "must be finite"));
    }
    Ok(ReferenceCommand { slope, target })
}

impl ReferenceCommand {
    /// Time at which the ramp reaches the target.
    pub fn ramp_duration(&self) -> f64 {
        self.target.abs() / self.slope
    }

    pub fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t < self.ramp_duration() {
            self.target.signum() * self.slope * t
        } else {
            self.target
        }
    }
}

/// Small-angle aimpoints `(P_az, P_el)` in radians for the detected
/// centroid, measured from `start` with elevation positive upward.
pub fn aimpoints_from_detection(
    det: &DetectionRecord,
    cal: &Calibration,
    start: Origin,
) -> Result<(f64, f64)> {
    cal.validate()?;
    if start == Origin::TopLeft {
        return Err(Error::invalid(
            "start origin",
            "must be bottom-left or center",
        ));
    }
    let c = centroid(&det.bbox);
    if c.x > cal.width() || c.y > cal.height() {
        warn!(
            "centroid ({:.1}, {:.1}) of a detection in {} lies outside the {}x{} image",
            c.x, c.y, det.image_id, cal.image_width_px, cal.image_height_px
        );
    }
    let v = convert_origin(c, Origin::TopLeft, start, cal);
    Ok((pixels_to_angle(v.x, cal), pixels_to_angle(v.y, cal)))
}

fn pixels_to_angle(px: f64, cal: &Calibration) -> f64 {
    cal.px_to_m(px) / cal.range_m
}

fn angle_to_pixels(angle: f64, cal: &Calibration) -> f64 {
    cal.m_to_px(angle * cal.range_m)
}

/// `max(|P_az|, |P_el|)/V + delay`.
pub fn firing_time(p_az: f64, p_el: f64, slope: f64, fire_delay: f64) -> f64 {
    p_az.abs().max(p_el.abs()) / slope + fire_delay
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub tau_s: f64,
    pub sigma_w_mils: f64,
    /// Perturb simulated references. The error spread is reported either way.
    pub enabled: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            tau_s: 2.0,
            sigma_w_mils: 0.5,
            enabled: false,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        require_positive("tau_s", self.tau_s)?;
        if !(self.sigma_w_mils.is_finite() && self.sigma_w_mils >= 0.0) {
            return Err(Error::invalid("sigma_w_mils", "must be finite and ≥ 0"));
        }
        Ok(())
    }

    /// `1 / (τ s + 1)`.
    pub fn update_filter(&self) -> ContinuousTf {
        ContinuousTf {
            num: vec![1.0],
            den: vec![1.0, self.tau_s],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub sample_rate_hz: f64,
    pub fire_delay_s: f64,
    pub slope_deg_s: f64,
    pub start_origin: Origin,
    pub calibration: Calibration,
    pub noise: NoiseModel,
    pub settle_band: f64,
    /// Simulated time past the firing instant.
    pub extra_horizon_s: f64,
    /// Keep every n-th trajectory sample in results.
    pub decimation: usize,
    /// Set from the run configuration's top-level seed.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 200.0,
            fire_delay_s: 0.5,
            slope_deg_s: 40.0,
            start_origin: Origin::BottomLeft,
            calibration: Calibration::default(),
            noise: NoiseModel::default(),
            settle_band: 1e-3,
            extra_horizon_s: 1.0,
            decimation: 10,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("sample_rate_hz", self.sample_rate_hz)?;
        require_positive("slope_deg_s", self.slope_deg_s)?;
        if !(self.fire_delay_s.is_finite() && self.fire_delay_s >= 0.0) {
            return Err(Error::invalid("fire_delay_s", "must be finite and ≥ 0"));
        }
        if !(self.extra_horizon_s.is_finite() && self.extra_horizon_s >= 0.0) {
            return Err(Error::invalid("extra_horizon_s", "must be finite and ≥ 0"));
        }
        if !(self.settle_band > 0.0 && self.settle_band < 1.0) {
            return Err(Error::invalid("settle_band", "must lie in (0, 1)"));
        }
        if self.decimation == 0 {
            return Err(Error::invalid("decimation", "must be at least 1"));
        }
        if self.start_origin == Origin::TopLeft {
            return Err(Error::invalid(
                "start_origin",
                "must be bottom-left or center",
            ));
        }
        self.calibration.validate()?;
        self.noise.validate()
    }

    pub fn slope_rad_s(&self) -> f64 {
        self.slope_deg_s.to_radians()
    }
}

/// Sampled loop signals, one entry per sample starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub sample_rate_hz: f64,
    pub reference: Vec<f64>,
    pub output: Vec<f64>,
    pub error: Vec<f64>,
    pub control: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.output.len()
    }

    pub fn is_empty(&self) -> bool {
        self.output.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.sample_rate_hz
    }

    /// Output at `t`, linearly interpolated between samples and held past
    /// the last one.
    pub fn output_at(&self, t: f64) -> f64 {
        let last = self.len() - 1;
        let x = (t * self.sample_rate_hz).max(0.0);
        let k = (x.floor() as usize).min(last);
        if k == last {
            return self.output[last];
        }
        let frac = x - k as f64;
        self.output[k] + frac * (self.output[k + 1] - self.output[k])
    }
}

/// Both discretized blocks of one axis, closed through unity feedback.
///
/// The bilinear plant has a direct feedthrough term, so each sample solves
/// the algebraic loop `y = g₀(c₀(r − y) + c_s) + g_s` exactly.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    controller: DiscreteFilter,
    plant: DiscreteFilter,
}

impl ClosedLoop {
    pub fn new(plant: &PlantModel, c: &PiLeadController, sample_rate_hz: f64) -> Result<Self> {
        let (cd, gd) = discretize(plant, c, sample_rate_hz)?;
        let cl = closed_loop_error_tf(&cd, &gd)?;
        if !cl.is_stable() {
            return Err(Error::Unstable(format!(
                "{} loop has poles on or outside the unit circle at {sample_rate_hz} Hz",
                plant.axis
            )));
        }
        Ok(Self {
            controller: cd.filter(),
            plant: gd.filter(),
        })
    }

    /// Advances one sample with reference `r`; returns `(y, e, u)`.
    pub fn step(&mut self, r: f64) -> (f64, f64, f64) {
        let (c0, cs) = (self.controller.feedthrough(), self.controller.pending());
        let (g0, gs) = (self.plant.feedthrough(), self.plant.pending());
        let y = (g0 * c0 * r + g0 * cs + gs) / (1.0 + g0 * c0);
        let e = r - y;
        let u = self.controller.step(e);
        self.plant.step(u);
        (y, e, u)
    }
}

fn discretize(
    plant: &PlantModel,
    c: &PiLeadController,
    fs: f64,
) -> Result<(DiscreteTf, DiscreteTf)> {
    c.validate()?;
    Ok((
        c.transfer_function().bilinear(fs)?,
        plant.transfer_function().bilinear(fs)?,
    ))
}

/// `E/R = 1 / (1 + C G)` from discretized blocks.
pub fn closed_loop_error_tf(c: &DiscreteTf, g: &DiscreteTf) -> Result<DiscreteTf> {
    let open_den = crate::lti::poly_mul(&c.a, &g.a);
    let den = crate::lti::poly_add(&open_den, &crate::lti::poly_mul(&c.b, &g.b));
    DiscreteTf::new(open_den, den)
}

fn divergence_limit(target: f64) -> f64 {
    1e6 * target.abs() + 1.0
}

fn run_loop(
    plant: &PlantModel,
    c: &PiLeadController,
    reference: &ReferenceCommand,
    sample_rate_hz: f64,
    horizon: f64,
    mut perturb: impl FnMut() -> f64,
) -> Result<Trajectory> {
    require_positive("sample_rate_hz", sample_rate_hz)?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::invalid("horizon", "must be finite and ≥ 0"));
    }
    let mut cl = ClosedLoop::new(plant, c, sample_rate_hz)?;
    let n = (horizon * sample_rate_hz).ceil() as usize + 1;
    let mut tr = Trajectory {
        sample_rate_hz,
        reference: Vec::with_capacity(n),
        output: Vec::with_capacity(n),
        error: Vec::with_capacity(n),
        control: Vec::with_capacity(n),
    };
    let limit = divergence_limit(reference.target);
    for k in 0..n {
        let t = k as f64 / sample_rate_hz;
        let r = reference.at(t) + perturb();
        let (y, e, u) = cl.step(r);
        if !y.is_finite() || y.abs() > limit {
            return Err(Error::Diverged {
                t,
                magnitude: y.abs(),
            });
        }
        tr.reference.push(r);
        tr.output.push(y);
        tr.error.push(e);
        tr.control.push(u);
    }
    Ok(tr)
}

/// Noise-free closed-loop run of one axis from rest over `[0, horizon]`.
pub fn simulate_axis(
    plant: &PlantModel,
    c: &PiLeadController,
    reference: &ReferenceCommand,
    cfg: &SimConfig,
    horizon: f64,
) -> Result<Trajectory> {
    run_loop(plant, c, reference, cfg.sample_rate_hz, horizon, || 0.0)
}

/// As [`simulate_axis`], with the reference perturbed by white noise
/// passed through the aimpoint-update filter.
pub fn simulate_axis_noisy(
    plant: &PlantModel,
    c: &PiLeadController,
    reference: &ReferenceCommand,
    cfg: &SimConfig,
    horizon: f64,
    rng: &mut impl Rng,
) -> Result<Trajectory> {
    cfg.noise.validate()?;
    let mut filter = cfg
        .noise
        .update_filter()
        .bilinear(cfg.sample_rate_hz)?
        .filter();
    let normal = Normal::new(0.0, mils_to_rad(cfg.noise.sigma_w_mils))
        .map_err(|e| Error::invalid("sigma_w_mils", e.to_string()))?;
    run_loop(plant, c, reference, cfg.sample_rate_hz, horizon, || {
        filter.step(normal.sample(rng))
    })
}

/// First sample time after which `|e| ≤ band·|P|` holds for the rest of
/// the trajectory. `None` means the error was still outside the band at
/// the final sample. Zero aimpoints count as settled at `t = 0`.
pub fn settling_time(tr: &Trajectory, target: f64, band: f64) -> Option<f64> {
    if target == 0.0 {
        return Some(0.0);
    }
    let tol = band * target.abs();
    match tr.error.iter().rposition(|e| e.abs() > tol) {
        None => Some(0.0),
        Some(k) if k + 1 >= tr.len() => None,
        Some(k) => Some(tr.time(k + 1)),
    }
}

/// Steady-state error standard deviation in mils due to aimpoint noise.
///
/// The error system is `H = F / (1 + C G)` with `F` the update filter, all
/// discretized at `sample_rate_hz`. Its norm is integrated over the Nyquist
/// band with the trapezoid rule, and `σ_e = ‖H‖₂ σ_w / √f_s`.
pub fn noise_error_std(
    plant: &PlantModel,
    c: &PiLeadController,
    noise: &NoiseModel,
    sample_rate_hz: f64,
) -> Result<f64> {
    noise.validate()?;
    Ok(
        error_system_norm(plant, c, noise, sample_rate_hz)? * noise.sigma_w_mils
            / sample_rate_hz.sqrt(),
    )
}

const NORM_QUADRATURE_POINTS: usize = 1 << 16;

/// `‖H‖₂ = ( (1/2π) ∫_{−ω_N}^{ω_N} |H(e^{jωh})|² dω )^{1/2}`.
pub fn error_system_norm(
    plant: &PlantModel,
    c: &PiLeadController,
    noise: &NoiseModel,
    sample_rate_hz: f64,
) -> Result<f64> {
    let (cd, gd) = discretize(plant, c, sample_rate_hz)?;
    let sensitivity = closed_loop_error_tf(&cd, &gd)?;
    if !sensitivity.is_stable() {
        return Err(Error::Unstable(format!(
            "{} loop at {sample_rate_hz} Hz",
            plant.axis
        )));
    }
    let h = noise
        .update_filter()
        .bilinear(sample_rate_hz)?
        .series(&sensitivity);
    let n = NORM_QUADRATURE_POINTS;
    // The integrand is periodic, so the trapezoid rule over one period is the
    // plain mean of equally spaced samples.
    let mean_sq = (0..n)
        .map(|i| {
            let theta = -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / n as f64;
            h.eval_unit_circle(theta).norm_sqr()
        })
        .sum::<f64>()
        / n as f64;
    Ok((mean_sq * sample_rate_hz).sqrt())
}

/// Discrete error system from white noise to tracking error.
pub fn noise_error_tf(
    plant: &PlantModel,
    c: &PiLeadController,
    noise: &NoiseModel,
    sample_rate_hz: f64,
) -> Result<DiscreteTf> {
    let (cd, gd) = discretize(plant, c, sample_rate_hz)?;
    let fd = noise.update_filter().bilinear(sample_rate_hz)?;
    Ok(fd.series(&closed_loop_error_tf(&cd, &gd)?))
}

/// Converts a pixel offset to per-axis angles in mils.
pub fn pixel_offset_to_mils(v: PixelVector, cal: &Calibration) -> (f64, f64) {
    let f = |px: f64| rad_to_mils((cal.px_to_m(px) / cal.range_m).atan());
    (f(v.x), f(v.y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub r_az: f64,
    pub y_az: f64,
    pub r_el: f64,
    pub y_el: f64,
}

/// Outcome of one targeting run. Pixel vectors are relative to the
/// configured start origin with `y` upward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub image_id: String,
    /// Detected aimpoint `x_b`.
    pub aimpoint: PixelVector,
    /// Ground-truth aimpoint `x_g`.
    pub true_aimpoint: PixelVector,
    /// Turret pointing at the firing instant, `x_r`.
    pub shot: PixelVector,
    pub aimpoint_rad: (f64, f64),
    pub r_bg_mils: f64,
    pub r_br_mils: f64,
    pub r_rg_mils: f64,
    pub firing_time_s: f64,
    /// Slower axis; `None` if either axis failed to settle in the horizon.
    pub settling_time_s: Option<f64>,
    pub trajectory: Vec<TrajectorySample>,
}

impl SimulationResult {
    /// `x_b − x_g`.
    pub fn r_bg(&self) -> PixelVector {
        self.aimpoint - self.true_aimpoint
    }

    /// `x_b − x_r`.
    pub fn r_br(&self) -> PixelVector {
        self.aimpoint - self.shot
    }

    /// `x_r − x_g`.
    pub fn r_rg(&self) -> PixelVector {
        self.shot - self.true_aimpoint
    }
}

fn check_limits(p_el: f64, cfg: &SimConfig) {
    if cfg.slope_deg_s > MAX_SLEW_DEG_S {
        warn!(
            "ramp slope {} °/s exceeds the {MAX_SLEW_DEG_S} °/s slew limit",
            cfg.slope_deg_s
        );
    }
    if p_el.to_degrees() > MAX_ELEVATION_DEG {
        warn!(
            "elevation aimpoint {:.2}° exceeds the {MAX_ELEVATION_DEG}° limit of the linear model",
            p_el.to_degrees()
        );
    }
}

/// Random stream for detection `stream` under `seed`; each detection gets
/// its own stream so results do not depend on evaluation order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A detection paired with the ground truth it is scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct Engagement {
    /// Random stream for this engagement, usually its input index.
    pub stream: u64,
    pub detection: DetectionRecord,
    pub ground_truth: GroundTruthRecord,
}

/// Aims both axes at the detected centroid and fires at `t_f`.
pub fn run_targeting(
    det: &DetectionRecord,
    gt: &GroundTruthRecord,
    plants: &AxisPair<PlantModel>,
    controllers: &AxisPair<PiLeadController>,
    cfg: &SimConfig,
    stream: u64,
) -> Result<SimulationResult> {
    if det.image_id != gt.image_id {
        return Err(Error::ImageMismatch {
            ground_truth: gt.image_id.0.clone(),
            detection: det.image_id.0.clone(),
        });
    }
    cfg.validate()?;
    let cal = &cfg.calibration;
    let (p_az, p_el) = aimpoints_from_detection(det, cal, cfg.start_origin)?;
    check_limits(p_el, cfg);
    let slope = cfg.slope_rad_s();
    let t_f = firing_time(p_az, p_el, slope, cfg.fire_delay_s);
    let horizon = t_f + cfg.extra_horizon_s;

    let mut rng = cfg.noise.enabled.then(|| stream_rng(cfg.seed, stream));
    let mut run = |axis: Axis, target: f64| -> Result<(Trajectory, ReferenceCommand)> {
        let r = make_reference(target, slope)?;
        let tr = match rng.as_mut() {
            Some(rng) => simulate_axis_noisy(
                plants.get(axis),
                controllers.get(axis),
                &r,
                cfg,
                horizon,
                rng,
            )?,
            None => simulate_axis(plants.get(axis), controllers.get(axis), &r, cfg, horizon)?,
        };
        Ok((tr, r))
    };
    let (tr_az, ref_az) = run(Axis::Azimuth, p_az)?;
    let (tr_el, ref_el) = run(Axis::Elevation, p_el)?;

    let aimpoint = convert_origin(centroid(&det.bbox), Origin::TopLeft, cfg.start_origin, cal);
    let true_aimpoint = convert_origin(centroid(&gt.bbox), Origin::TopLeft, cfg.start_origin, cal);
    let shot = PixelVector::new(
        angle_to_pixels(tr_az.output_at(t_f), cal),
        angle_to_pixels(tr_el.output_at(t_f), cal),
    );

    let settle = settling_time(&tr_az, ref_az.target, cfg.settle_band)
        .zip(settling_time(&tr_el, ref_el.target, cfg.settle_band))
        .map(|(a, b)| a.max(b));

    let trajectory = (0..tr_az.len())
        .step_by(cfg.decimation)
        .map(|k| TrajectorySample {
            t: tr_az.time(k),
            r_az: tr_az.reference[k],
            y_az: tr_az.output[k],
            r_el: tr_el.reference[k],
            y_el: tr_el.output[k],
        })
        .collect();

    let mils = |v: PixelVector| cal.pixel_distance_to_mils(v.norm());
    Ok(SimulationResult {
        image_id: det.image_id.0.clone(),
        aimpoint,
        true_aimpoint,
        shot,
        aimpoint_rad: (p_az, p_el),
        r_bg_mils: mils(aimpoint - true_aimpoint),
        r_br_mils: mils(aimpoint - shot),
        r_rg_mils: mils(shot - true_aimpoint),
        firing_time_s: t_f,
        settling_time_s: settle,
        trajectory,
    })
}

/// Per-axis noise-induced error spread for the budget.
pub fn noise_error_std_pair(
    plants: &AxisPair<PlantModel>,
    controllers: &AxisPair<PiLeadController>,
    cfg: &SimConfig,
) -> Result<AxisPair<f64>> {
    Ok(AxisPair {
        azimuth: noise_error_std(
            &plants.azimuth,
            &controllers.azimuth,
            &cfg.noise,
            cfg.sample_rate_hz,
        )?,
        elevation: noise_error_std(
            &plants.elevation,
            &controllers.elevation,
            &cfg.noise,
            cfg.sample_rate_hz,
        )?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detgeom::BoundingBox;
    use crate::turretmodel::{plant_tf, TurretParams};
    use proptest::prelude::*;

    fn plants() -> AxisPair<PlantModel> {
        let p = TurretParams::default();
        AxisPair {
            azimuth: plant_tf(&p, Axis::Azimuth).unwrap(),
            elevation: plant_tf(&p, Axis::Elevation).unwrap(),
        }
    }

    fn published() -> AxisPair<PiLeadController> {
        AxisPair {
            azimuth: PiLeadController::published(Axis::Azimuth),
            elevation: PiLeadController::published(Axis::Elevation),
        }
    }

    fn det_at(x: f64, y: f64, half: f64) -> DetectionRecord {
        DetectionRecord::new(
            "img",
            BoundingBox::new(x - half, y - half, x + half, y + half).unwrap(),
            0.9,
        )
        .unwrap()
    }

    fn gt_at(x: f64, y: f64, half: f64) -> GroundTruthRecord {
        GroundTruthRecord::new(
            "img",
            BoundingBox::new(x - half, y - half, x + half, y + half).unwrap(),
        )
    }

    #[test]
    fn reference_shape() {
        let v = 40f64.to_radians();
        let r = make_reference(20f64.to_radians(), v).unwrap();
        assert_eq!(r.at(-0.1), 0.0);
        assert!((r.at(0.25) - 10f64.to_radians()).abs() < 1e-15);
        assert_eq!(r.at(2.0), r.target);
        let neg = make_reference(-20f64.to_radians(), v).unwrap();
        assert!((neg.at(0.25) + 10f64.to_radians()).abs() < 1e-15);
        let zero = make_reference(0.0, v).unwrap();
        assert!([0.0, 0.1, 5.0].iter().all(|&t| zero.at(t) == 0.0));
        // continuity at the corner
        let d = r.ramp_duration();
        assert!((r.at(d - 1e-12) - r.at(d + 1e-12)).abs() < 1e-10);
        assert!(make_reference(1.0, 0.0).is_err());
    }

    #[test]
    fn aimpoint_examples() {
        let cal = Calibration::default();
        let h = cal.height();
        let corner = det_at(0.0, h, 0.0);
        assert_eq!(
            aimpoints_from_detection(&corner, &cal, Origin::BottomLeft).unwrap(),
            (0.0, 0.0)
        );
        let d = det_at(34.0, h - 68.0, 2.0);
        let (az, el) = aimpoints_from_detection(&d, &cal, Origin::BottomLeft).unwrap();
        assert!((az - 1e-3).abs() < 1e-15 && (el - 2e-3).abs() < 1e-15);
        let mid = det_at(cal.width() / 2.0, h / 2.0, 3.0);
        assert_eq!(
            aimpoints_from_detection(&mid, &cal, Origin::Center).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn center_start_halves_mean_aimpoint() {
        let cal = Calibration::default();
        let mut rng = stream_rng(3, 0);
        let (mut bl, mut ce) = (0.0, 0.0);
        let n = 20_000;
        for _ in 0..n {
            let d = det_at(
                rng.random_range(1.0..cal.width() - 1.0),
                rng.random_range(1.0..cal.height() - 1.0),
                1.0,
            );
            let (a, _) = aimpoints_from_detection(&d, &cal, Origin::BottomLeft).unwrap();
            let (b, _) = aimpoints_from_detection(&d, &cal, Origin::Center).unwrap();
            bl += a.abs();
            ce += b.abs();
        }
        assert!((ce / bl - 0.5).abs() < 0.02, "{}", ce / bl);
    }

    #[test]
    fn firing_time_examples() {
        assert_eq!(firing_time(0.0, 0.0, 1.0, 0.5), 0.5);
        assert!((firing_time(0.3, -0.2, 1.0, 0.5) - 0.8).abs() < 1e-15);
        assert_eq!(
            firing_time(0.2, 0.3, 2.0, 0.5),
            firing_time(0.3, 0.2, 2.0, 0.5)
        );
    }

    #[test]
    fn zero_reference_gives_zero_output() {
        let cfg = SimConfig::default();
        let r = make_reference(0.0, cfg.slope_rad_s()).unwrap();
        let tr = simulate_axis(&plants().azimuth, &published().azimuth, &r, &cfg, 2.0).unwrap();
        assert!(tr.output.iter().all(|&y| y == 0.0));
        assert_eq!(settling_time(&tr, 0.0, 1e-3), Some(0.0));
    }

    #[test]
    fn settling_time_rules() {
        let mut tr = Trajectory {
            sample_rate_hz: 10.0,
            error: vec![0.0; 5],
            ..Default::default()
        };
        tr.output = vec![0.0; 5];
        assert_eq!(settling_time(&tr, 1.0, 1e-3), Some(0.0));
        tr.error = vec![1.0, 0.5, 0.0, 0.002, 0.0];
        assert_eq!(settling_time(&tr, 1.0, 1e-3), Some(0.4));
        tr.error[4] = 0.1;
        assert_eq!(settling_time(&tr, 1.0, 1e-3), None);
    }

    #[test]
    fn published_loops_settle_near_one_second() {
        let cfg = SimConfig::default();
        let (p, c) = (plants(), published());
        for axis in Axis::BOTH {
            for mils in [1.0, 5.0, 20.0, 60.0] {
                let r = make_reference(mils_to_rad(mils), cfg.slope_rad_s()).unwrap();
                let tr = simulate_axis(p.get(axis), c.get(axis), &r, &cfg, 3.0).unwrap();
                let ts = settling_time(&tr, r.target, cfg.settle_band).unwrap();
                assert!((ts - 1.0).abs() <= 0.15, "{axis} {mils} mils: {ts}");
                let e1 = tr.error[(1.0 * cfg.sample_rate_hz) as usize + 10];
                assert!(e1.abs() <= 1e-3 * r.target);
            }
        }
    }

    #[test]
    fn refining_the_step_barely_moves_the_shot() {
        let (p, c) = (plants(), published());
        let coarse = SimConfig::default();
        let fine = SimConfig {
            sample_rate_hz: 400.0,
            ..SimConfig::default()
        };
        for axis in Axis::BOTH {
            let r = make_reference(mils_to_rad(20.0), coarse.slope_rad_s()).unwrap();
            let t_f = firing_time(r.target, 0.0, r.slope, 0.5);
            let a = simulate_axis(p.get(axis), c.get(axis), &r, &coarse, t_f + 0.1).unwrap();
            let b = simulate_axis(p.get(axis), c.get(axis), &r, &fine, t_f + 0.1).unwrap();
            let (ya, yb) = (a.output_at(t_f), b.output_at(t_f));
            assert!(((ya - yb) / yb).abs() < 1e-4, "{axis}: {ya} vs {yb}");
        }
    }

    #[test]
    fn identity_error_system_passes_noise_through() {
        // With F ≡ 1 and C G ≡ 0 the norm integral is σ_w.
        let fs = 200.0;
        let one = DiscreteTf::unity();
        let n = 1 << 12;
        let mean: f64 = (0..n)
            .map(|i| {
                one.eval_unit_circle(
                    -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / n as f64,
                )
                .norm_sqr()
            })
            .sum::<f64>()
            / n as f64;
        let norm = (mean * fs).sqrt();
        assert!((norm * 0.5 / fs.sqrt() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_gives_zero_spread() {
        let noise = NoiseModel {
            sigma_w_mils: 0.0,
            ..Default::default()
        };
        let s = noise_error_std(&plants().azimuth, &published().azimuth, &noise, 200.0).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn error_norm_converges_in_sample_rate() {
        // σ_w is fixed per sample, so σ_e itself falls like 1/√f_s. The rate
        // independent quantity is ‖H‖₂, which approaches the continuous norm
        // at first order; each doubling roughly halves the change.
        let noise = NoiseModel::default();
        for axis in Axis::BOTH {
            let norm = |fs| {
                error_system_norm(plants().get(axis), published().get(axis), &noise, fs).unwrap()
            };
            let gap = |fs: f64| (norm(2.0 * fs) / norm(fs) - 1.0).abs();
            assert!(gap(200.0) < 0.05, "{axis}");
            assert!(gap(800.0) < 0.02, "{axis}");
            assert!(gap(800.0) < 0.6 * gap(200.0) && gap(1600.0) < 0.6 * gap(400.0));
            let s200 =
                noise_error_std(plants().get(axis), published().get(axis), &noise, 200.0).unwrap();
            let s400 =
                noise_error_std(plants().get(axis), published().get(axis), &noise, 400.0).unwrap();
            assert!((s400 * 2f64.sqrt() / s200 - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn norm_matches_impulse_response_energy() {
        for axis in Axis::BOTH {
            let noise = NoiseModel::default();
            let h =
                noise_error_tf(plants().get(axis), published().get(axis), &noise, 200.0).unwrap();
            let mut f = h.filter();
            let mut energy = f.step(1.0).powi(2);
            for _ in 0..400_000 {
                energy += f.step(0.0).powi(2);
            }
            let sigma =
                noise_error_std(plants().get(axis), published().get(axis), &noise, 200.0).unwrap();
            assert!((energy.sqrt() * 0.5 / sigma - 1.0).abs() < 1e-6, "{axis}");
        }
    }

    #[test]
    fn exact_detection_leaves_only_controller_error() {
        let cfg = SimConfig::default();
        let d = det_at(400.0, 700.0, 10.0);
        let g = gt_at(400.0, 700.0, 10.0);
        let res = run_targeting(&d, &g, &plants(), &published(), &cfg, 0).unwrap();
        assert_eq!(res.r_bg_mils, 0.0);
        assert!((res.r_rg_mils - res.r_br_mils).abs() < 1e-12);
        assert!(res.settling_time_s.is_some());
    }

    #[test]
    fn noise_free_runs_repeat_exactly() {
        let cfg = SimConfig::default();
        let d = det_at(900.0, 300.0, 12.0);
        let g = gt_at(905.0, 297.0, 11.0);
        let a = run_targeting(&d, &g, &plants(), &published(), &cfg, 7).unwrap();
        let b = run_targeting(&d, &g, &plants(), &published(), &cfg, 7).unwrap();
        assert_eq!(a, b);
        let noisy = SimConfig {
            noise: NoiseModel {
                enabled: true,
                ..Default::default()
            },
            ..cfg
        };
        let c = run_targeting(&d, &g, &plants(), &published(), &noisy, 7).unwrap();
        let e = run_targeting(&d, &g, &plants(), &published(), &noisy, 7).unwrap();
        assert_eq!(c, e);
        assert_ne!(c.shot, a.shot);
    }

    #[test]
    fn mismatched_images_rejected() {
        let d = det_at(100.0, 100.0, 5.0);
        let g = GroundTruthRecord::new("other", BoundingBox::new(0., 0., 10., 10.).unwrap());
        let err =
            run_targeting(&d, &g, &plants(), &published(), &SimConfig::default(), 0).unwrap_err();
        assert!(matches!(err, Error::ImageMismatch { .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn error_vectors_compose(
            x in 20.0..1900.0f64, y in 20.0..1060.0f64,
            dx in -15.0..15.0f64, dy in -15.0..15.0f64,
            center in any::<bool>(),
        ) {
            let cfg = SimConfig {
                start_origin: if center { Origin::Center } else { Origin::BottomLeft },
                ..SimConfig::default()
            };
            let d = det_at(x, y, 8.0);
            let g = gt_at((x + dx).max(10.0), (y + dy).max(10.0), 9.0);
            let r = run_targeting(&d, &g, &plants(), &published(), &cfg, 0).unwrap();
            let lhs = r.r_rg();
            let rhs = r.r_bg() - r.r_br();
            prop_assert!((lhs.x - rhs.x).abs() < 1e-9 && (lhs.y - rhs.y).abs() < 1e-9);
            prop_assert!(r.r_rg_mils <= r.r_bg_mils + r.r_br_mils + 1e-12);
        }

        #[test]
        fn error_trajectory_scales_with_aimpoint(p in 1.0..60.0f64, k in 0.1..10.0f64) {
            let cfg = SimConfig::default();
            let v = cfg.slope_rad_s();
            let base = make_reference(mils_to_rad(p), v).unwrap();
            let scaled = make_reference(mils_to_rad(k * p), k * v).unwrap();
            let a = simulate_axis(&plants().elevation, &published().elevation, &base, &cfg, 2.0).unwrap();
            let b = simulate_axis(&plants().elevation, &published().elevation, &scaled, &cfg, 2.0).unwrap();
            let peak = a.error.iter().fold(0.0f64, |m, e| m.max(e.abs()));
            for (ea, eb) in a.error.iter().zip(&b.error) {
                prop_assert!((eb - k * ea).abs() <= 1e-9 * k * peak);
            }
        }
    }
}
