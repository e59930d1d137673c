//! Rational transfer functions: frequency-response evaluation, bilinear
//! discretization and difference-equation filtering.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Magnitude and phase of a response at one frequency.
///
/// The phase is the analytically continued value in degrees, not the
/// principal argument, so sums of phases stay meaningful across `±180°`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyResponse {
    pub magnitude: f64,
    pub phase_deg: f64,
}

impl FrequencyResponse {
    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase_deg.to_radians())
    }

    pub fn series(self, other: FrequencyResponse) -> FrequencyResponse {
        FrequencyResponse {
            magnitude: self.magnitude * other.magnitude,
            phase_deg: self.phase_deg + other.phase_deg,
        }
    }
}

/// Anything with an evaluable response on the `jω` axis.
pub trait FrequencyDomain {
    fn frequency_response(&self, omega: f64) -> Result<FrequencyResponse>;
}

/// Cascade `a · b`.
#[derive(Debug, Clone, Copy)]
pub struct Series<A, B>(pub A, pub B);

impl<A: FrequencyDomain, B: FrequencyDomain> FrequencyDomain for Series<A, B> {
    fn frequency_response(&self, omega: f64) -> Result<FrequencyResponse> {
        Ok(self
            .0
            .frequency_response(omega)?
            .series(self.1.frequency_response(omega)?))
    }
}

impl<T: FrequencyDomain + ?Sized> FrequencyDomain for &T {
    fn frequency_response(&self, omega: f64) -> Result<FrequencyResponse> {
        (**self).frequency_response(omega)
    }
}

pub(crate) fn require_positive_frequency(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveFrequency(omega))
    }
}

/// Polynomial product; coefficients in ascending powers.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

fn poly_eval(c: &[f64], x: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &k| acc * x + k)
}

fn trim(mut c: Vec<f64>) -> Vec<f64> {
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    c
}

/// `N(s)/D(s)` with coefficients in ascending powers of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousTf {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl ContinuousTf {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let (num, den) = (trim(num), trim(den));
        if den.iter().all(|&d| d == 0.0) || num.is_empty() {
            return Err(Error::invalid("transfer function", "zero denominator"));
        }
        Ok(Self { num, den })
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    pub fn series(&self, other: &ContinuousTf) -> ContinuousTf {
        ContinuousTf {
            num: poly_mul(&self.num, &other.num),
            den: poly_mul(&self.den, &other.den),
        }
    }

    /// Tustin map `s = 2 f_s (1 − z⁻¹)/(1 + z⁻¹)`.
    pub fn bilinear(&self, fs: f64) -> Result<DiscreteTf> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::invalid(
                "sample rate",
                format!("must be > 0, got {fs}"),
            ));
        }
        let k = 2.0 * fs;
        let n = self.num.len().max(self.den.len()) - 1;
        let minus = [1.0, -1.0];
        let plus = [1.0, 1.0];
        let powers = |base: &[f64], e: usize| -> Vec<f64> {
            (0..e).fold(vec![1.0], |acc, _| poly_mul(&acc, base))
        };
        let map = |c: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n + 1];
            for (i, &ci) in c.iter().enumerate() {
                if ci == 0.0 {
                    continue;
                }
                let term = poly_mul(&powers(&minus, i), &powers(&plus, n - i));
                let scale = ci * k.powi(i as i32);
                for (o, t) in out.iter_mut().zip(term) {
                    *o += scale * t;
                }
            }
            out
        };
        DiscreteTf::new(map(&self.num), map(&self.den))
    }
}

/// `B(z⁻¹)/A(z⁻¹)` with coefficients in ascending powers of `z⁻¹`,
/// normalized so that `a[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTf {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

impl DiscreteTf {
    pub fn new(b: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        let a0 = *a.first().unwrap_or(&0.0);
        if a0 == 0.0 || !a0.is_finite() {
            return Err(Error::invalid(
                "discrete transfer function",
                "a[0] must be non-zero",
            ));
        }
        Ok(Self {
            b: b.iter().map(|v| v / a0).collect(),
            a: a.iter().map(|v| v / a0).collect(),
        })
    }

    /// Identity system.
    pub fn unity() -> Self {
        Self {
            b: vec![1.0],
            a: vec![1.0],
        }
    }

    /// `H(e^{jθ})` for normalized frequency `θ = ω h` in rad/sample.
    pub fn eval_unit_circle(&self, theta: f64) -> Complex64 {
        let q = Complex64::from_polar(1.0, -theta);
        poly_eval(&self.b, q) / poly_eval(&self.a, q)
    }

    pub fn series(&self, other: &DiscreteTf) -> DiscreteTf {
        DiscreteTf {
            b: poly_mul(&self.b, &other.b),
            a: poly_mul(&self.a, &other.a),
        }
    }

    /// All poles strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        schur_cohn_stable(&self.a)
    }

    pub fn filter(&self) -> DiscreteFilter {
        DiscreteFilter::new(self)
    }
}

/// Step-down (Schur–Cohn) test on `1 + a₁z⁻¹ + … + aₙz⁻ⁿ`.
pub fn schur_cohn_stable(a: &[f64]) -> bool {
    let mut c: Vec<f64> = trim(a.to_vec());
    if c.is_empty() || c[0] == 0.0 {
        return false;
    }
    let c0 = c[0];
    c.iter_mut().for_each(|v| *v /= c0);
    while c.len() > 1 {
        let n = c.len() - 1;
        let k = c[n];
        if !k.is_finite() || k.abs() >= 1.0 {
            return false;
        }
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..n).map(|i| (c[i] - k * c[n - i]) / denom).collect();
        c = next;
    }
    true
}

/// Transposed direct-form II realization of a [`DiscreteTf`].
///
/// Output is `b₀·x + pending()`; splitting the feedthrough from the stored
/// part lets several filters be closed into an algebraic loop and solved
/// exactly each sample.
#[derive(Debug, Clone)]
pub struct DiscreteFilter {
    b: Vec<f64>,
    a: Vec<f64>,
    state: Vec<f64>,
}

impl DiscreteFilter {
    pub fn new(tf: &DiscreteTf) -> Self {
        let n = tf.a.len().max(tf.b.len());
        let pad = |c: &[f64]| {
            let mut v = c.to_vec();
            v.resize(n, 0.0);
            v
        };
        Self {
            b: pad(&tf.b),
            a: pad(&tf.a),
            state: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn feedthrough(&self) -> f64 {
        self.b[0]
    }

    /// Output contribution of past samples.
    pub fn pending(&self) -> f64 {
        self.state.first().copied().unwrap_or(0.0)
    }

    /// Applies input `x`, advances the state, and returns the output.
    pub fn step(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.pending();
        let n = self.state.len();
        for i in 0..n {
            let carry = if i + 1 < n { self.state[i + 1] } else { 0.0 };
            self.state[i] = self.b[i + 1] * x - self.a[i + 1] * y + carry;
        }
        y
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|s| *s = 0.0);
    }
}
