//! Angle and frequency unit conversions.
//!
//! Angles are carried internally in radians and frequencies in rad/s. The NATO
//! mil divides a full circle into 6400 parts, so 1 mil = 2π/6400 rad
//! (0.05625°).

use std::f64::consts::TAU;

/// NATO mils in one revolution.
pub const MILS_PER_REVOLUTION: f64 = 6400.0;

pub fn rad_to_mils(rad: f64) -> f64 {
    rad * MILS_PER_REVOLUTION / TAU
}

pub fn mils_to_rad(mils: f64) -> f64 {
    mils * TAU / MILS_PER_REVOLUTION
}

pub fn hz_to_rad_per_s(hz: f64) -> f64 {
    hz * TAU
}

pub fn rad_per_s_to_hz(omega: f64) -> f64 {
    omega / TAU
}

/// Linear miss distance at `range_m` subtended by an angle in mils.
pub fn mils_to_meters_at(mils: f64, range_m: f64) -> f64 {
    mils_to_rad(mils) * range_m
}
