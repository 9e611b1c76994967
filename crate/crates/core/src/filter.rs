//! Synapse filters as linear constant-coefficient difference equations.
//!
//! A channel's trace obeys
//!
//! ```text
//! F[t] = sum_{p=1..P} a_p F[t-p] + sum_{q=0..Q} b_q x[t-q]
//! ```
//!
//! with zero state for every index before `t = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pole modulus at or above which trained coefficients are pulled back inside the unit circle.
pub const STABILITY_MARGIN: f64 = 1.0 - 1e-6;
/// Pole modulus the radial clamp rescales to.
pub const CLAMP_RADIUS: f64 = 0.999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCoeffs {
    feedback: Vec<f64>,
    feedforward: Vec<f64>,
    trainable: bool,
}

impl FilterCoeffs {
    /// `feedback` holds `a_1..a_P`, `feedforward` holds `b_0..b_Q` (at least one tap).
    pub fn new(feedback: Vec<f64>, feedforward: Vec<f64>, trainable: bool) -> Result<Self> {
        if feedforward.is_empty() {
            return Err(Error::param("feedforward", "needs at least the b_0 tap"));
        }
        if feedback.iter().chain(&feedforward).any(|c| !c.is_finite()) {
            return Err(Error::param("coefficients", "must be finite"));
        }
        let coeffs = FilterCoeffs {
            feedback,
            feedforward,
            trainable,
        };
        let modulus = coeffs.max_pole_modulus();
        if modulus >= 1.0 {
            return Err(Error::UnstableFilter { modulus });
        }
        Ok(coeffs)
    }

    /// Second-order filter whose impulse response is `exp(-n/tau_m) - exp(-n/tau_s)`.
    pub fn dual_exp(tau_m: f64, tau_s: f64) -> Result<Self> {
        if !(tau_m > 0.0) {
            return Err(Error::param("tau_m", format!("must be > 0, got {tau_m}")));
        }
        if !(tau_s > 0.0) {
            return Err(Error::param("tau_s", format!("must be > 0, got {tau_s}")));
        }
        if tau_m == tau_s {
            return Err(Error::DegenerateKernel(tau_m));
        }
        let dm = (-1.0 / tau_m).exp();
        let ds = (-1.0 / tau_s).exp();
        FilterCoeffs::new(
            vec![dm + ds, -(-(tau_m + tau_s) / (tau_m * tau_s)).exp()],
            vec![0.0, dm - ds],
            false,
        )
    }

    /// Alpha synapse: repeated pole at `exp(-1/tau)`, impulse response `(n/tau) exp(-n/tau)`.
    pub fn alpha(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::param("tau", format!("must be > 0, got {tau}")));
        }
        let d = (-1.0 / tau).exp();
        FilterCoeffs::new(vec![2.0 * d, -(-2.0 / tau).exp()], vec![0.0, d / tau], false)
    }

    /// Identity filter: the trace equals the presynaptic spike train.
    pub fn simple_lif() -> Self {
        FilterCoeffs {
            feedback: Vec::new(),
            feedforward: vec![1.0],
            trainable: false,
        }
    }

    pub fn with_trainable(mut self, trainable: bool) -> Self {
        self.trainable = trainable;
        self
    }

    /// Multiplies every feedforward tap by `gain`.
    pub fn scaled(mut self, gain: f64) -> Self {
        for b in &mut self.feedforward {
            *b *= gain;
        }
        self
    }

    /// Extends the filter to orders `(p, q)` with zero coefficients.
    pub fn padded(mut self, p: usize, q: usize) -> Result<Self> {
        if p < self.feedback_order() || q < self.feedforward_order() {
            return Err(Error::param(
                "orders",
                format!(
                    "({p}, {q}) is below the kernel's natural orders ({}, {})",
                    self.feedback_order(),
                    self.feedforward_order()
                ),
            ));
        }
        self.feedback.resize(p, 0.0);
        self.feedforward.resize(q + 1, 0.0);
        Ok(self)
    }

    /// Feedback order `P`.
    pub fn feedback_order(&self) -> usize {
        self.feedback.len()
    }

    /// Feedforward order `Q` (there are `Q + 1` taps).
    pub fn feedforward_order(&self) -> usize {
        self.feedforward.len() - 1
    }

    pub fn feedback(&self) -> &[f64] {
        &self.feedback
    }

    pub fn feedforward(&self) -> &[f64] {
        &self.feedforward
    }

    pub fn trainable(&self) -> bool {
        self.trainable
    }

    pub fn num_coeffs(&self) -> usize {
        self.feedback.len() + self.feedforward.len()
    }

    pub(crate) fn coeffs_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.feedback, &mut self.feedforward)
    }

    /// Largest modulus among the roots of `z^P - a_1 z^(P-1) - ... - a_P`.
    pub fn max_pole_modulus(&self) -> f64 {
        self.poles().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.max_pole_modulus() < 1.0
    }

    pub fn poles(&self) -> Vec<Complex64> {
        let a = &self.feedback;
        match a.len() {
            0 => Vec::new(),
            1 => vec![Complex64::new(a[0], 0.0)],
            2 => {
                let disc = a[0] * a[0] + 4.0 * a[1];
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    vec![
                        Complex64::new((a[0] + s) / 2.0, 0.0),
                        Complex64::new((a[0] - s) / 2.0, 0.0),
                    ]
                } else {
                    let s = (-disc).sqrt();
                    vec![
                        Complex64::new(a[0] / 2.0, s / 2.0),
                        Complex64::new(a[0] / 2.0, -s / 2.0),
                    ]
                }
            }
            _ => durand_kerner(a),
        }
    }

    /// Rescales the poles radially when any of them reaches [`STABILITY_MARGIN`].
    /// Scaling every pole by `s` maps `a_p` to `a_p s^p`. Returns true if it clamped.
    pub fn clamp_poles(&mut self) -> bool {
        let modulus = self.max_pole_modulus();
        if !(modulus >= STABILITY_MARGIN) {
            return false;
        }
        let s = CLAMP_RADIUS / modulus;
        let mut scale = 1.0;
        for a in &mut self.feedback {
            scale *= s;
            *a *= scale;
        }
        true
    }

    /// Runs the recurrence over a whole input sequence.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; input.len()];
        for t in 0..input.len() {
            let mut acc = 0.0;
            for (q, b) in self.feedforward.iter().enumerate() {
                if q > t {
                    break;
                }
                acc += b * input[t - q];
            }
            for (p, a) in self.feedback.iter().enumerate() {
                let lag = p + 1;
                if lag > t {
                    break;
                }
                acc += a * out[t - lag];
            }
            out[t] = acc;
        }
        out
    }

    /// Response to a unit spike at `t = 0`, for `n` steps.
    pub fn impulse_response(&self, n: usize) -> Vec<f64> {
        let mut impulse = vec![0.0; n];
        if n > 0 {
            impulse[0] = 1.0;
        }
        self.apply(&impulse)
    }
}

/// One step of the recurrence. `history_f[p - 1]` is `F[t - p]` and `history_in[q]` is
/// `x[t - q]`; missing trailing entries count as the zero state before `t = 0`.
pub fn filter_step(coeffs: &FilterCoeffs, history_f: &[f64], history_in: &[f64]) -> f64 {
    let fb: f64 = coeffs.feedback.iter().zip(history_f).map(|(a, f)| a * f).sum();
    let ff: f64 = coeffs.feedforward.iter().zip(history_in).map(|(b, x)| b * x).sum();
    fb + ff
}

/// Closed-form dual-exponential kernel `exp(-n/tau_m) - exp(-n/tau_s)`, without the
/// continuous-model normalisation.
pub fn dual_exp_kernel(n: f64, tau_m: f64, tau_s: f64) -> f64 {
    (-n / tau_m).exp() - (-n / tau_s).exp()
}

fn durand_kerner(feedback: &[f64]) -> Vec<Complex64> {
    // monic: z^P + c_1 z^(P-1) + ... + c_P with c_p = -a_p
    let degree = feedback.len();
    let eval = |z: Complex64| {
        let mut acc = Complex64::new(1.0, 0.0);
        for a in feedback {
            acc = acc * z - a;
        }
        acc
    };
    let radius = 1.0 + feedback.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..1000 {
        let mut shift = 0.0_f64;
        for i in 0..degree {
            let zi = roots[i];
            let mut denom = Complex64::new(1.0, 0.0);
            for (j, zj) in roots.iter().enumerate() {
                if j != i {
                    denom *= zi - zj;
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(1e-300, 0.0);
            }
            let delta = eval(zi) / denom;
            roots[i] = zi - delta;
            shift = shift.max(delta.norm());
        }
        if shift < 1e-15 {
            break;
        }
    }
    roots
}
