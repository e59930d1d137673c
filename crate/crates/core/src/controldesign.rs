//! PI+lead controllers, frequency-response loop shaping and loop analysis.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::lti::{
    require_positive_frequency, ContinuousTf, FrequencyDomain, FrequencyResponse, Series,
};
use crate::turretmodel::{Axis, PlantModel};
use crate::units::rad_per_s_to_hz;

/// `C(s) = K_P · (s + 1/T_I)/s · (T_D s + 1)/(γ T_D s + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiLeadController {
    pub kp: f64,
    #[serde(rename = "ti_s")]
    pub ti: f64,
    #[serde(rename = "td_s")]
    pub td: f64,
    pub gamma: f64,
}

impl PiLeadController {
    pub fn new(kp: f64, ti: f64, td: f64, gamma: f64) -> Result<Self> {
        let c = Self { kp, ti, td, gamma };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("kp", self.kp)?;
        require_positive("ti", self.ti)?;
        require_positive("td", self.td)?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(
                "gamma",
                format!("must lie in (0, 1), got {}", self.gamma),
            ));
        }
        Ok(())
    }

    /// Published coefficients for each axis (gain already boosted).
    pub fn published(axis: Axis) -> Self {
        match axis {
            Axis::Azimuth => Self {
                kp: 3.33e7,
                ti: 0.22,
                td: 0.17,
                gamma: 0.017,
            },
            Axis::Elevation => Self {
                kp: 4.48e6,
                ti: 0.50,
                td: 0.32,
                gamma: 0.024,
            },
        }
    }

    pub fn transfer_function(&self) -> ContinuousTf {
        let num = crate::lti::poly_mul(&[self.kp / self.ti, self.kp], &[1.0, self.td]);
        let den = vec![0.0, 1.0, self.gamma * self.td];
        ContinuousTf { num, den }
    }
}

pub fn controller_response(c: &PiLeadController, omega: f64) -> Result<FrequencyResponse> {
    require_positive_frequency(omega)?;
    let pi_mag = (omega * omega + (1.0 / c.ti).powi(2)).sqrt() / omega;
    let lead_mag = (omega * c.td).hypot(1.0) / (c.gamma * c.td * omega).hypot(1.0);
    let phase = (omega * c.ti).atan() - std::f64::consts::FRAC_PI_2 + (omega * c.td).atan()
        - (c.gamma * c.td * omega).atan();
    Ok(FrequencyResponse {
        magnitude: c.kp * pi_mag * lead_mag,
        phase_deg: phase.to_degrees(),
    })
}

impl FrequencyDomain for PiLeadController {
    fn frequency_response(&self, omega: f64) -> Result<FrequencyResponse> {
        controller_response(self, omega)
    }
}

/// How the design picks `K_P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainRule {
    /// Unit loop gain at the target crossover, counting the PI factor.
    #[default]
    UnityAtCrossover,
    /// `K_P = √γ / |G(jω_gc)|`, ignoring the PI factor's magnitude.
    PlantOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub crossover_rad_s: f64,
    pub phase_margin_deg: f64,
    /// Extra lead added on top of the phase deficit.
    #[serde(default = "DesignSpec::default_safety")]
    pub safety_margin_deg: f64,
    /// `T_I = ti_factor / ω_gc`.
    #[serde(default = "DesignSpec::default_ti_factor")]
    pub ti_factor: f64,
    #[serde(default)]
    pub gain_rule: GainRule,
}

impl DesignSpec {
    fn default_safety() -> f64 {
        6.0
    }

    fn default_ti_factor() -> f64 {
        10.0
    }

    pub fn new(crossover_rad_s: f64, phase_margin_deg: f64) -> Self {
        Self {
            crossover_rad_s,
            phase_margin_deg,
            safety_margin_deg: Self::default_safety(),
            ti_factor: Self::default_ti_factor(),
            gain_rule: GainRule::default(),
        }
    }

    /// Targets that, followed by a 1.5× gain boost, land near the published
    /// controllers.
    pub fn published_fit(axis: Axis) -> Self {
        match axis {
            Axis::Azimuth => Self::new(10.0 / 0.22, 70.0),
            Axis::Elevation => Self::new(20.0, 70.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("crossover_rad_s", self.crossover_rad_s)?;
        require_positive("ti_factor", self.ti_factor)?;
        if !(self.phase_margin_deg > 0.0 && self.phase_margin_deg < 180.0) {
            return Err(Error::invalid(
                "phase_margin_deg",
                format!("must lie in (0, 180), got {}", self.phase_margin_deg),
            ));
        }
        if !self.safety_margin_deg.is_finite() {
            return Err(Error::invalid("safety_margin_deg", "must be finite"));
        }
        Ok(())
    }
}

/// `γ = (1 − sin φ)/(1 + sin φ)` for a lead that adds `φ` degrees at its
/// centre frequency.
pub fn lead_ratio(phase_add_deg: f64) -> f64 {
    let s = phase_add_deg.to_radians().sin();
    (1.0 - s) / (1.0 + s)
}

/// Single-pass loop-shaping design for `plant` meeting `spec`.
pub fn design_pi_lead(plant: &PlantModel, spec: &DesignSpec) -> Result<PiLeadController> {
    spec.validate()?;
    let w = spec.crossover_rad_s;
    let g = plant_at(plant, w)?;
    let phase_add = spec.phase_margin_deg - 180.0 - g.phase_deg + spec.safety_margin_deg;
    if phase_add >= 90.0 {
        return Err(Error::InfeasibleLead(format!(
            "{phase_add:.3}° of lead required at {w} rad/s; a single lead stage gives < 90°"
        )));
    }
    if phase_add <= 0.0 {
        warn!("no phase lead needed at {w} rad/s ({phase_add:.3}°)");
        return Err(Error::InfeasibleLead(format!(
            "required lead {phase_add:.3}° is not positive, so γ ≥ 1"
        )));
    }
    let gamma = lead_ratio(phase_add);
    let td = 1.0 / (gamma.sqrt() * w);
    let ti = spec.ti_factor / w;
    let mut kp = gamma.sqrt() / g.magnitude;
    if spec.gain_rule == GainRule::UnityAtCrossover {
        kp /= (1.0 + (1.0 / (w * ti)).powi(2)).sqrt();
    }
    PiLeadController::new(kp, ti, td, gamma)
}

fn plant_at(plant: &PlantModel, w: f64) -> Result<FrequencyResponse> {
    plant.frequency_response(w)
}

pub fn boost_gain(c: &PiLeadController, factor: f64) -> Result<PiLeadController> {
    require_positive("boost factor", factor)?;
    Ok(PiLeadController {
        kp: c.kp * factor,
        ..*c
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopAnalysis {
    pub crossover_rad_s: f64,
    pub phase_margin_deg: f64,
}

impl LoopAnalysis {
    pub fn crossover_hz(&self) -> f64 {
        rad_per_s_to_hz(self.crossover_rad_s)
    }
}

pub const CROSSOVER_WINDOW: (f64, f64) = (1e-3, 1e5);

pub fn analyze_loop(plant: &PlantModel, c: &PiLeadController) -> Result<LoopAnalysis> {
    analyze_response(&Series(plant, c), CROSSOVER_WINDOW)
}

/// Gain crossover and phase margin of an open-loop response.
///
/// Scans `window` on a log grid for the first point where `|L|` falls
/// through 1, then bisects in `log ω` to a relative width of 1e-9.
pub fn analyze_response(l: &impl FrequencyDomain, window: (f64, f64)) -> Result<LoopAnalysis> {
    let (lo, hi) = window;
    require_positive_frequency(lo)?;
    if !(hi > lo && hi.is_finite()) {
        return Err(Error::invalid(
            "window",
            format!("need 0 < lo < hi, got [{lo}, {hi}]"),
        ));
    }
    let excess = |w: f64| -> Result<f64> { Ok(l.frequency_response(w)?.magnitude.ln()) };

    const PER_DECADE: f64 = 50.0;
    let n = ((hi / lo).log10() * PER_DECADE).ceil().max(1.0) as usize;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut prev = (lo, excess(lo)?);
    let mut bracket = None;
    for i in 1..=n {
        let w = (llo + (lhi - llo) * i as f64 / n as f64).exp();
        let v = excess(w)?;
        if prev.1 >= 0.0 && v < 0.0 {
            bracket = Some((prev.0, w));
            break;
        }
        prev = (w, v);
    }
    let (mut a, mut b) = bracket.ok_or(Error::NoCrossover { lo, hi })?;
    while b / a - 1.0 > 1e-9 {
        let m = (a * b).sqrt();
        if excess(m)? >= 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let w = (a * b).sqrt();
    Ok(LoopAnalysis {
        crossover_rad_s: w,
        phase_margin_deg: 180.0 + l.frequency_response(w)?.phase_deg,
    })
}

/// Where an axis controller comes from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControllerSource {
    /// Published coefficients.
    #[default]
    Published,
    /// Re-run the design from targets fitted to the published results.
    PublishedDesign,
    Coefficients {
        kp: f64,
        ti_s: f64,
        td_s: f64,
        gamma: f64,
    },
    Design {
        crossover_rad_s: f64,
        phase_margin_deg: f64,
        #[serde(default = "DesignSpec::default_safety")]
        safety_margin_deg: f64,
        #[serde(default = "DesignSpec::default_ti_factor")]
        ti_factor: f64,
        #[serde(default)]
        gain_rule: GainRule,
        #[serde(default = "default_boost")]
        boost: f64,
    },
}

fn default_boost() -> f64 {
    1.5
}

impl ControllerSource {
    pub fn controller(&self, plant: &PlantModel) -> Result<PiLeadController> {
        match *self {
            ControllerSource::Published => Ok(PiLeadController::published(plant.axis)),
            ControllerSource::PublishedDesign => {
                let c = design_pi_lead(plant, &DesignSpec::published_fit(plant.axis))?;
                boost_gain(&c, default_boost())
            }
            ControllerSource::Coefficients {
                kp,
                ti_s,
                td_s,
                gamma,
            } => PiLeadController::new(kp, ti_s, td_s, gamma),
            ControllerSource::Design {
                crossover_rad_s,
                phase_margin_deg,
                safety_margin_deg,
                ti_factor,
                gain_rule,
                boost,
            } => {
                let spec = DesignSpec {
                    crossover_rad_s,
                    phase_margin_deg,
                    safety_margin_deg,
                    ti_factor,
                    gain_rule,
                };
                boost_gain(&design_pi_lead(plant, &spec)?, boost)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turretmodel::{plant_tf, TurretParams};
    use crate::units::hz_to_rad_per_s;
    use num_complex::Complex64;

    fn plant(axis: Axis) -> PlantModel {
        plant_tf(&TurretParams::default(), axis).unwrap()
    }

    fn c_oracle(c: &PiLeadController, w: f64) -> Complex64 {
        let s = Complex64::new(0.0, w);
        c.kp * (s + 1.0 / c.ti) / s * (c.td * s + 1.0) / (c.gamma * c.td * s + 1.0)
    }

    struct Integrator(f64);
    impl FrequencyDomain for Integrator {
        fn frequency_response(&self, w: f64) -> Result<FrequencyResponse> {
            Ok(FrequencyResponse {
                magnitude: self.0 / w,
                phase_deg: -90.0,
            })
        }
    }

    #[test]
    fn controller_matches_complex_oracle() {
        for axis in Axis::BOTH {
            let c = PiLeadController::published(axis);
            for w in [1e-2, 0.7, hz_to_rad_per_s(10.8), 300.0, 1e4] {
                let got = controller_response(&c, w).unwrap().to_complex();
                let want = c_oracle(&c, w);
                assert!((got - want).norm() < 1e-12 * want.norm());
                let tf = c.transfer_function().eval(Complex64::new(0.0, w));
                assert!((tf - want).norm() < 1e-10 * want.norm());
            }
        }
    }

    #[test]
    fn controller_limits() {
        let c = PiLeadController::new(2.0, 0.3, 0.1, 1.0 - 1e-12).unwrap();
        for w in [0.5, 5.0, 500.0] {
            let lead = (w * c.td).hypot(1.0) / (c.gamma * c.td * w).hypot(1.0);
            assert!((lead - 1.0).abs() < 1e-9);
        }
        let c = PiLeadController::published(Axis::Azimuth);
        let r = controller_response(&c, 1e9).unwrap();
        assert!((r.magnitude / (c.kp / c.gamma) - 1.0).abs() < 1e-6);
        assert!(r.phase_deg.abs() < 1e-4);
        assert!(controller_response(&c, 0.0).is_err());
    }

    #[test]
    fn lead_ratio_values() {
        assert_eq!(lead_ratio(0.0), 1.0);
        let want = (1.0 - 0.5f64.sqrt()) / (1.0 + 0.5f64.sqrt());
        assert!((lead_ratio(45.0) - want).abs() < 1e-15);
        assert!((lead_ratio(45.0) - 0.1716).abs() < 1e-4);
    }

    #[test]
    fn design_hits_unit_gain_at_target() {
        for axis in Axis::BOTH {
            let p = plant(axis);
            for (w, pm) in [(5.0, 50.0), (20.0, 70.0), (45.0, 65.0), (80.0, 45.0)] {
                let spec = DesignSpec::new(w, pm);
                let c = design_pi_lead(&p, &spec).unwrap();
                let l = Series(&p, &c).frequency_response(w).unwrap();
                assert!((l.magnitude - 1.0).abs() < 1e-6, "{axis} {w}");
                // PI lag at ω_gc is atan(1/10) = 5.71°, slightly under the 6° allowance
                let achieved = 180.0 + l.phase_deg;
                assert!((achieved - pm - (6.0 - 0.1f64.atan().to_degrees())).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn plant_only_rule_overshoots_by_pi_gain() {
        let p = plant(Axis::Azimuth);
        let spec = DesignSpec {
            gain_rule: GainRule::PlantOnly,
            ..DesignSpec::new(30.0, 60.0)
        };
        let c = design_pi_lead(&p, &spec).unwrap();
        let l = Series(&p, &c).frequency_response(30.0).unwrap();
        assert!((l.magnitude - 1.01f64.sqrt()).abs() < 1e-9);
        assert!((l.magnitude - 1.0).abs() < 0.02);
    }

    #[test]
    fn infeasible_designs_rejected() {
        let p = plant(Axis::Azimuth);
        let err = design_pi_lead(&p, &DesignSpec::new(45.0, 170.0)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleLead(_)));
        // near 0.01 rad/s the plant alone has ~89° margin, so nothing to add
        let err = design_pi_lead(&p, &DesignSpec::new(0.01, 60.0)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleLead(_)));
        assert!(design_pi_lead(&p, &DesignSpec::new(10.0, 0.0)).is_err());
        assert!(design_pi_lead(&p, &DesignSpec::new(-1.0, 60.0)).is_err());
    }

    #[test]
    fn fitted_design_reproduces_published_coefficients() {
        for axis in Axis::BOTH {
            let c = ControllerSource::PublishedDesign
                .controller(&plant(axis))
                .unwrap();
            let want = PiLeadController::published(axis);
            for (got, want, name) in [
                (c.kp, want.kp, "kp"),
                (c.ti, want.ti, "ti"),
                (c.td, want.td, "td"),
                (c.gamma, want.gamma, "gamma"),
            ] {
                assert!(
                    (got / want - 1.0).abs() < 0.10,
                    "{axis} {name}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn boost_scales_only_gain() {
        let c = PiLeadController::new(2.22e7, 0.22, 0.17, 0.017).unwrap();
        assert_eq!(boost_gain(&c, 1.0).unwrap(), c);
        let b = boost_gain(&c, 1.5).unwrap();
        assert_eq!(b.kp / c.kp, 1.5);
        assert!((b.kp - 3.33e7).abs() < 1.0);
        assert_eq!((b.ti, b.td, b.gamma), (c.ti, c.td, c.gamma));
        assert!(boost_gain(&c, 0.0).is_err());
    }

    #[test]
    fn integrator_crossover() {
        let a = analyze_response(&Integrator(10.0), CROSSOVER_WINDOW).unwrap();
        assert!((a.crossover_rad_s / 10.0 - 1.0).abs() < 1e-9);
        assert!((a.phase_margin_deg - 90.0).abs() < 1e-12);
        assert!(matches!(
            analyze_response(&Integrator(1e-6), CROSSOVER_WINDOW),
            Err(Error::NoCrossover { .. })
        ));
    }

    #[test]
    fn published_loops() {
        let a = analyze_loop(
            &plant(Axis::Azimuth),
            &PiLeadController::published(Axis::Azimuth),
        )
        .unwrap();
        assert!((a.crossover_hz() / 10.8 - 1.0).abs() < 0.05, "{a:?}");
        assert!((a.phase_margin_deg - 70.7).abs() < 3.0);
        let e = analyze_loop(
            &plant(Axis::Elevation),
            &PiLeadController::published(Axis::Elevation),
        )
        .unwrap();
        assert!((e.crossover_hz() / 4.70 - 1.0).abs() < 0.05, "{e:?}");
        assert!((e.phase_margin_deg - 69.7).abs() < 3.0);
    }

    #[test]
    fn analysis_is_self_consistent_and_window_invariant() {
        for axis in Axis::BOTH {
            let (p, c) = (plant(axis), PiLeadController::published(axis));
            let a = analyze_loop(&p, &c).unwrap();
            let l = Series(&p, &c)
                .frequency_response(a.crossover_rad_s)
                .unwrap();
            assert!((l.magnitude - 1.0).abs() < 1e-8);
            assert!((a.phase_margin_deg - (180.0 + l.phase_deg)).abs() < 1e-6);
            let wide = analyze_response(&Series(&p, &c), (1e-5, 1e7)).unwrap();
            assert!((wide.crossover_rad_s / a.crossover_rad_s - 1.0).abs() < 2e-9);
            assert!((wide.phase_margin_deg - a.phase_margin_deg).abs() < 1e-6);
        }
    }

    #[test]
    fn source_parses_from_toml() {
        let s: ControllerSource =
            toml::from_str("source = \"design\"\ncrossover_rad_s = 20.0\nphase_margin_deg = 70.0")
                .unwrap();
        assert!(matches!(s, ControllerSource::Design { boost, .. } if boost == 1.5));
        let s: ControllerSource = toml::from_str("source = \"published\"").unwrap();
        assert_eq!(s, ControllerSource::Published);
    }
}
