//! Adaptive Dormand-Prince 5(4) integration of `dpsi/dt = -i H psi`.
//!
//! The working state is renormalized after every accepted step and the
//! discarded scale is accumulated as a log-norm, so long non-unitary runs
//! stay finite.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default relative step tolerance.
pub const DEFAULT_RTOL: f64 = 1e-9;

const MAX_STEPS: usize = 2_000_000;

// Dormand-Prince tableau
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Normalized state plus the natural log of its raw 2-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct LogState {
    pub state: Vec<Complex64>,
    pub log_norm: f64,
}

impl LogState {
    pub fn from_raw(raw: Vec<Complex64>, extra_log: f64) -> Self {
        let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Self {
                state: raw,
                log_norm: f64::NEG_INFINITY,
            };
        }
        Self {
            state: raw.into_iter().map(|z| z / norm).collect(),
            log_norm: extra_log + norm.ln(),
        }
    }

    /// Raw amplitudes `state * exp(log_norm)`; may overflow for long runs.
    pub fn raw(&self) -> Vec<Complex64> {
        let scale = self.log_norm.exp();
        self.state.iter().map(|z| z * scale).collect()
    }

    pub fn is_finite(&self) -> bool {
        !self.log_norm.is_nan()
            && self
                .state
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

fn derivative(h: &Array2<Complex64>, y: &[Complex64], out: &mut [Complex64]) {
    let minus_i = Complex64::new(0.0, -1.0);
    for (o, row) in out.iter_mut().zip(h.rows()) {
        let s: Complex64 = row.iter().zip(y).map(|(a, b)| a * b).sum();
        *o = minus_i * s;
    }
}

/// Integrate from `t = 0` with state `psi0`, reporting the state at each of
/// `times` (non-decreasing, non-negative).
pub fn integrate(
    h: &Array2<Complex64>,
    psi0: &[Complex64],
    times: &[f64],
    rtol: f64,
) -> Result<Vec<LogState>> {
    let n = psi0.len();
    assert_eq!(h.nrows(), n);
    let atol = rtol * 1e-3;
    let hnorm = h
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);

    let start = LogState::from_raw(psi0.to_vec(), 0.0);
    if start.log_norm == f64::NEG_INFINITY {
        return Ok(times
            .iter()
            .map(|_| LogState {
                state: psi0.to_vec(),
                log_norm: f64::NEG_INFINITY,
            })
            .collect());
    }
    let mut y = start.state;
    let mut log_norm = start.log_norm;
    let mut t = 0.0;
    let mut step = if hnorm > 0.0 { 0.1 / hnorm } else { 1.0 };
    let mut steps = 0usize;

    let mut k: [Vec<Complex64>; 7] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]);
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let mut y_new = vec![Complex64::new(0.0, 0.0); n];
    let mut out = Vec::with_capacity(times.len());

    derivative(h, &y, &mut k[0]);
    for &target in times {
        if target < t {
            return Err(Error::Integrator {
                t: target,
                reason: "output times must be non-decreasing and start at or after 0".into(),
            });
        }
        while t < target {
            if steps >= MAX_STEPS {
                return Err(Error::Integrator {
                    t,
                    reason: format!("step budget of {MAX_STEPS} exhausted"),
                });
            }
            steps += 1;
            let dt = step.min(target - t);
            let last = dt >= target - t;

            let stage = |tmp: &mut [Complex64], k: &[Vec<Complex64>], coeffs: &[f64]| {
                for i in 0..n {
                    let mut acc = y[i];
                    for (kk, &c) in k.iter().zip(coeffs) {
                        if c != 0.0 {
                            acc += kk[i] * (dt * c);
                        }
                    }
                    tmp[i] = acc;
                }
            };
            stage(&mut tmp, &k[..1], &[A21]);
            derivative(h, &tmp, &mut k[1]);
            stage(&mut tmp, &k[..2], &[A31, A32]);
            derivative(h, &tmp, &mut k[2]);
            stage(&mut tmp, &k[..3], &[A41, A42, A43]);
            derivative(h, &tmp, &mut k[3]);
            stage(&mut tmp, &k[..4], &[A51, A52, A53, A54]);
            derivative(h, &tmp, &mut k[4]);
            stage(&mut tmp, &k[..5], &[A61, A62, A63, A64, A65]);
            derivative(h, &tmp, &mut k[5]);
            stage(&mut y_new, &k[..6], &[B1, 0.0, B3, B4, B5, B6]);
            derivative(h, &y_new, &mut k[6]);

            let mut err_sq = 0.0;
            for i in 0..n {
                let e = (k[0][i] * E1
                    + k[2][i] * E3
                    + k[3][i] * E4
                    + k[4][i] * E5
                    + k[5][i] * E6
                    + k[6][i] * E7)
                    * dt;
                let scale = atol + rtol * y[i].norm().max(y_new[i].norm());
                err_sq += (e.norm() / scale).powi(2);
            }
            let err = (err_sq / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Overflow { t });
            }

            if err <= 1.0 {
                t = if last { target } else { t + dt };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                // keep the working state at unit norm; the scale goes to the log
                let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if !(norm > 0.0 && norm.is_finite()) {
                    return Err(Error::Overflow { t });
                }
                log_norm += norm.ln();
                for (yi, ki) in y.iter_mut().zip(k[0].iter_mut()) {
                    *yi /= norm;
                    *ki /= norm;
                }
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // a shortened final step says nothing about the natural step size
            if !(last && err <= 1.0) || factor < 1.0 {
                step = dt * factor;
            }
        }
        let checkpoint = LogState {
            state: y.clone(),
            log_norm,
        };
        if !checkpoint.is_finite() {
            return Err(Error::Overflow { t });
        }
        out.push(checkpoint);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_rabi_oscillation() {
        // H = [[0, g], [g, 0]]: |psi_0(t)|^2 = cos^2(g t)
        let g = 0.7;
        let h = ndarray::arr2(&[
            [Complex64::new(0.0, 0.0), Complex64::new(g, 0.0)],
            [Complex64::new(g, 0.0), Complex64::new(0.0, 0.0)],
        ]);
        let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
        let psi0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let out = integrate(&h, &psi0, &times, 1e-10).unwrap();
        for (t, s) in times.iter().zip(&out) {
            let p0 = s.state[0].norm_sqr();
            assert!((p0 - (g * t).cos().powi(2)).abs() < 1e-8, "t={t}");
            assert!(s.log_norm.abs() < 1e-8);
        }
    }

    #[test]
    fn decaying_mode_tracks_log_norm() {
        // H = [-i gamma]: psi(t) = exp(-gamma t)
        let gamma = 3.0;
        let h = Array2::from_elem((1, 1), Complex64::new(0.0, -gamma));
        let times = [0.0, 10.0, 200.0];
        let out = integrate(&h, &[Complex64::new(1.0, 0.0)], &times, 1e-10).unwrap();
        for (t, s) in times.iter().zip(&out) {
            assert!((s.log_norm + gamma * t).abs() < 1e-6 * (1.0 + gamma * t));
        }
    }

    #[test]
    fn growing_mode_does_not_overflow() {
        let h = Array2::from_elem((1, 1), Complex64::new(0.0, 5.0));
        let out = integrate(&h, &[Complex64::new(1.0, 0.0)], &[0.0, 300.0], 1e-9).unwrap();
        assert!((out[1].log_norm - 1500.0).abs() < 1e-4 * 1500.0);
        assert!(out[1].is_finite());
    }

    #[test]
    fn rejects_decreasing_times() {
        let h = Array2::from_elem((1, 1), Complex64::new(1.0, 0.0));
        assert!(integrate(&h, &[Complex64::new(1.0, 0.0)], &[1.0, 0.5], 1e-9).is_err());
    }
}
