//! Two-axis rigid-body turret: inertias, equations of motion and the
//! per-axis plant `G(s) = 1 / (J s (s + c))`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::lti::{require_positive_frequency, ContinuousTf, FrequencyDomain, FrequencyResponse};

pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Physical parameters of the platform and gun barrel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TurretParams {
    /// Platform mass.
    #[serde(rename = "m1_kg")]
    pub m1: f64,
    /// Barrel mass.
    #[serde(rename = "m2_kg")]
    pub m2: f64,
    /// Platform bearing damping, N·m·s.
    #[serde(rename = "b1_nms")]
    pub b1: f64,
    /// Barrel bearing damping, N·m·s.
    #[serde(rename = "b2_nms")]
    pub b2: f64,
    #[serde(rename = "radius_m")]
    pub radius: f64,
    #[serde(rename = "barrel_length_m")]
    pub barrel_length: f64,
}

impl Default for TurretParams {
    fn default() -> Self {
        Self {
            m1: 8.67e3,
            m2: 4.97e3,
            b1: 6.00e4,
            b2: 6.00e4,
            radius: 2.7,
            barrel_length: 5.4,
        }
    }
}

impl TurretParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("m1", self.m1)?;
        require_positive("m2", self.m2)?;
        require_positive("b1", self.b1)?;
        require_positive("b2", self.b2)?;
        require_positive("radius", self.radius)?;
        require_positive("barrel_length", self.barrel_length)?;
        Ok(())
    }
}

/// `(J1, J2)`.
///
/// With `elevation = None` the barrel term of `J1` uses `cos²α = 1`, which is
/// the small-elevation approximation; otherwise `α` is in radians.
pub fn compute_inertias(p: &TurretParams, elevation: Option<f64>) -> (f64, f64) {
    let barrel = p.m2 * p.barrel_length * p.barrel_length / 3.0;
    let cos2 = elevation.map_or(1.0, |a| a.cos().powi(2));
    (0.5 * p.m1 * p.radius * p.radius + barrel * cos2, barrel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Azimuth,
    Elevation,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::Azimuth, Axis::Elevation];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Azimuth => "azimuth",
            Axis::Elevation => "elevation",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "azimuth" | "az" => Ok(Axis::Azimuth),
            "elevation" | "el" => Ok(Axis::Elevation),
            _ => Err(Error::invalid("axis", format!("unknown axis {s:?}"))),
        }
    }
}

/// A value for each axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisPair<T> {
    pub azimuth: T,
    pub elevation: T,
}

impl<T> AxisPair<T> {
    pub fn get(&self, axis: Axis) -> &T {
        match axis {
            Axis::Azimuth => &self.azimuth,
            Axis::Elevation => &self.elevation,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Axis, &T) -> U) -> AxisPair<U> {
        AxisPair {
            azimuth: f(Axis::Azimuth, &self.azimuth),
            elevation: f(Axis::Elevation, &self.elevation),
        }
    }

    pub fn try_map<U>(&self, mut f: impl FnMut(Axis, &T) -> Result<U>) -> Result<AxisPair<U>> {
        Ok(AxisPair {
            azimuth: f(Axis::Azimuth, &self.azimuth)?,
            elevation: f(Axis::Elevation, &self.elevation)?,
        })
    }
}

/// Both plants for `p`.
pub fn plant_pair(p: &TurretParams) -> Result<AxisPair<PlantModel>> {
    Ok(AxisPair {
        azimuth: plant_tf(p, Axis::Azimuth)?,
        elevation: plant_tf(p, Axis::Elevation)?,
    })
}

/// One axis of the turret as `1 / (J s (s + c))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantModel {
    pub axis: Axis,
    /// Moment of inertia `J`.
    pub inertia: f64,
    /// `c = b / J`, 1/s.
    pub damping_rate: f64,
}

impl PlantModel {
    pub fn new(axis: Axis, inertia: f64, damping_rate: f64) -> Result<Self> {
        require_positive("inertia", inertia)?;
        require_positive("damping rate", damping_rate)?;
        Ok(Self {
            axis,
            inertia,
            damping_rate,
        })
    }

    /// Bearing damping `b = J c`.
    pub fn damping(&self) -> f64 {
        self.inertia * self.damping_rate
    }

    pub fn transfer_function(&self) -> ContinuousTf {
        ContinuousTf {
            num: vec![1.0],
            den: vec![0.0, self.damping(), self.inertia],
        }
    }
}

pub fn plant_tf(p: &TurretParams, axis: Axis) -> Result<PlantModel> {
    p.validate()?;
    let (j1, j2) = compute_inertias(p, None);
    match axis {
        Axis::Azimuth => PlantModel::new(axis, j1, p.b1 / j1),
        Axis::Elevation => PlantModel::new(axis, j2, p.b2 / j2),
    }
}

pub fn plant_response(m: &PlantModel, omega: f64) -> Result<FrequencyResponse> {
    require_positive_frequency(omega)?;
    let c = m.damping_rate;
    Ok(FrequencyResponse {
        magnitude: 1.0 / (m.inertia * omega * omega.hypot(c)),
        phase_deg: -90.0 - (omega / c).atan().to_degrees(),
    })
}

impl FrequencyDomain for PlantModel {
    fn frequency_response(&self, omega: f64) -> Result<FrequencyResponse> {
        plant_response(self, omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisState {
    pub angle: f64,
    pub rate: f64,
}

/// Gravitational torque on the barrel, `½ m₂ g L cos α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityTorque {
    pub moment: f64,
}

impl GravityTorque {
    pub fn from_params(p: &TurretParams) -> Self {
        Self {
            moment: 0.5 * p.m2 * STANDARD_GRAVITY * p.barrel_length,
        }
    }
}

/// Angular acceleration for torque `u`. Gravity only acts on the elevation
/// axis and is ignored for azimuth.
pub fn eom_rhs(state: AxisState, u: f64, m: &PlantModel, gravity: Option<GravityTorque>) -> f64 {
    let load = match (m.axis, gravity) {
        (Axis::Elevation, Some(g)) => g.moment * state.angle.cos(),
        _ => 0.0,
    };
    (u - m.damping() * state.rate - load) / m.inertia
}

/// Classical RK4 on the open-loop axis for a torque profile `u(t)`.
/// Returns `steps + 1` states including the initial one.
pub fn integrate_open_loop(
    m: &PlantModel,
    u: impl Fn(f64) -> f64,
    initial: AxisState,
    dt: f64,
    steps: usize,
    gravity: Option<GravityTorque>,
) -> Vec<AxisState> {
    let f = |t: f64, s: AxisState| (s.rate, eom_rhs(s, u(t), m, gravity));
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = initial;
    out.push(s);
    for k in 0..steps {
        let t = k as f64 * dt;
        let shift = |s: AxisState, d: (f64, f64), h: f64| AxisState {
            angle: s.angle + h * d.0,
            rate: s.rate + h * d.1,
        };
        let k1 = f(t, s);
        let k2 = f(t + dt / 2.0, shift(s, k1, dt / 2.0));
        let k3 = f(t + dt / 2.0, shift(s, k2, dt / 2.0));
        let k4 = f(t + dt, shift(s, k3, dt));
        s = AxisState {
            angle: s.angle + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            rate: s.rate + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        };
        out.push(s);
    }
    out
}
