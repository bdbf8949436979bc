//! Dormand–Prince 4(5) embedded Runge–Kutta pair with dense output.
//!
//! The stepper advances the 5th-order solution (local extrapolation), uses
//! the embedded 4th-order result for error control, and evaluates the
//! standard quartic interpolant to sample the solution at requested output
//! times without constraining the step size.

use crate::error::{Error, Result};

/// State dimension: the six model compartments plus a cumulative-elimination
/// accumulator used for mass-balance checks.
pub(crate) const DIM: usize = 7;

pub(crate) type State = [f64; DIM];

// Butcher tableau.
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

// 5th-order weights (advancing solution).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// (5th − 4th)-order weight differences for the error estimate.
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

// Dense-output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_STEPS: usize = 2_000_000;

pub(crate) struct Tolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

/// Integrates `dy/dt = f(t, y)` over `[t0, t1]`, mutating `y` in place.
///
/// `outputs` must be sorted ascending and lie in `(t0, t1]`; each is sampled
/// from the dense interpolant of the step that covers it and passed to
/// `emit` in order. Returns a suggested initial step size for a following
/// segment.
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate_segment<F, E>(
    f: &F,
    t0: f64,
    t1: f64,
    y: &mut State,
    h_suggest: Option<f64>,
    tol: &Tolerances,
    outputs: &[f64],
    mut emit: E,
) -> Result<f64>
where
    F: Fn(f64, &State) -> State,
    E: FnMut(usize, &State),
{
    let span = t1 - t0;
    debug_assert!(span >= 0.0);
    if span == 0.0 {
        for (i, _) in outputs.iter().enumerate() {
            emit(i, y);
        }
        return Ok(h_suggest.unwrap_or(1.0));
    }

    let mut t = t0;
    let mut k1 = f(t, y);
    let mut h = match h_suggest {
        Some(h) => h.min(span),
        None => initial_step(f, t, y, &k1, span, tol),
    };

    let mut out_idx = 0;
    let mut rejected = false;
    let mut steps = 0;
    let done_eps = 4.0 * f64::EPSILON * t1.abs().max(1.0);

    while t1 - t > done_eps {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Integration {
                t,
                reason: format!("exceeded {MAX_STEPS} steps in one segment"),
            });
        }

        // Stretch onto the endpoint rather than leaving a sliver behind.
        let mut last = false;
        let mut hs = h;
        if t + 1.01 * hs >= t1 {
            hs = t1 - t;
            last = true;
        }
        if hs < 1e-14 * t.abs().max(1.0) && !last {
            return Err(Error::Integration {
                t,
                reason: "step size underflow".into(),
            });
        }

        let mut yt = [0.0; DIM];
        for i in 0..DIM {
            yt[i] = y[i] + hs * A21 * k1[i];
        }
        let k2 = f(t + 0.2 * hs, &yt);
        for i in 0..DIM {
            yt[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = f(t + 0.3 * hs, &yt);
        for i in 0..DIM {
            yt[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = f(t + 0.8 * hs, &yt);
        for i in 0..DIM {
            yt[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = f(t + 8.0 / 9.0 * hs, &yt);
        for i in 0..DIM {
            yt[i] =
                y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = f(t + hs, &yt);

        let mut y_new = [0.0; DIM];
        for i in 0..DIM {
            y_new[i] = y[i] + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let k7 = f(t + hs, &y_new);

        let mut err = 0.0;
        for i in 0..DIM {
            let e =
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.abs_tol + tol.rel_tol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / DIM as f64).sqrt();

        if err <= 1.0 {
            // Dense output for every requested time inside this step.
            if out_idx < outputs.len() {
                let t_new = if last { t1 } else { t + hs };
                let eps = 1e-9 * t_new.abs().max(1.0);
                if outputs[out_idx] <= t_new + eps {
                    let dense = DenseStep::new(y, &y_new, &k1, &k3, &k4, &k5, &k6, &k7, hs);
                    while out_idx < outputs.len() && outputs[out_idx] <= t_new + eps {
                        let theta = ((outputs[out_idx] - t) / hs).clamp(0.0, 1.0);
                        emit(out_idx, &dense.eval(theta));
                        out_idx += 1;
                    }
                }
            }

            *y = y_new;
            k1 = k7;

            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
            };
            h = hs * if rejected { fac.min(1.0) } else { fac };
            rejected = false;

            if last {
                break;
            }
            t += hs;
        } else {
            h = hs * (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            rejected = true;
        }
    }

    // Floating-point dust: anything still pending sits at t1 itself.
    while out_idx < outputs.len() {
        emit(out_idx, y);
        out_idx += 1;
    }

    Ok(h)
}

struct DenseStep {
    r1: State,
    r2: State,
    r3: State,
    r4: State,
    r5: State,
}

impl DenseStep {
    #[allow(clippy::too_many_arguments)]
    fn new(
        y: &State,
        y_new: &State,
        k1: &State,
        k3: &State,
        k4: &State,
        k5: &State,
        k6: &State,
        k7: &State,
        h: f64,
    ) -> Self {
        let mut d = DenseStep {
            r1: [0.0; DIM],
            r2: [0.0; DIM],
            r3: [0.0; DIM],
            r4: [0.0; DIM],
            r5: [0.0; DIM],
        };
        for i in 0..DIM {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            d.r1[i] = y[i];
            d.r2[i] = ydiff;
            d.r3[i] = bspl;
            d.r4[i] = ydiff - h * k7[i] - bspl;
            d.r5[i] =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        d
    }

    fn eval(&self, theta: f64) -> State {
        let th1 = 1.0 - theta;
        let mut out = [0.0; DIM];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.r1[i]
                + theta
                    * (self.r2[i] + th1 * (self.r3[i] + theta * (self.r4[i] + th1 * self.r5[i])));
        }
        out
    }
}

/// Classic starting-step heuristic: balance the scaled magnitudes of the
/// state and its first two derivatives.
fn initial_step<F>(f: &F, t0: f64, y: &State, f0: &State, span: f64, tol: &Tolerances) -> f64
where
    F: Fn(f64, &State) -> State,
{
    let sc = |i: usize| tol.abs_tol + tol.rel_tol * y[i].abs();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..DIM {
        d0 += (y[i] / sc(i)).powi(2);
        d1 += (f0[i] / sc(i)).powi(2);
    }
    d0 = (d0 / DIM as f64).sqrt();
    d1 = (d1 / DIM as f64).sqrt();

    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);

    let mut y1 = [0.0; DIM];
    for i in 0..DIM {
        y1[i] = y[i] + h0 * f0[i];
    }
    let f1 = f(t0 + h0, &y1);
    let mut d2 = 0.0;
    for i in 0..DIM {
        d2 += ((f1[i] - f0[i]) / sc(i)).powi(2);
    }
    d2 = (d2 / DIM as f64).sqrt() / h0;

    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };

    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(k: f64) -> impl Fn(f64, &State) -> State {
        move |_t, y| {
            let mut d = [0.0; DIM];
            for i in 0..DIM {
                d[i] = -k * y[i];
            }
            d
        }
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let f = decay(1.3);
        let mut y = [2.0; DIM];
        let tol = Tolerances {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
        };
        integrate_segment(&f, 0.0, 1.0, &mut y, None, &tol, &[], |_, _| {}).unwrap();
        let expected = 2.0 * (-1.3f64).exp();
        assert!(
            (y[0] - expected).abs() < 1e-8,
            "got {} want {expected}",
            y[0]
        );
    }

    #[test]
    fn dense_output_samples_match_closed_form() {
        let f = decay(0.7);
        let mut y = [1.0; DIM];
        let tol = Tolerances {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
        };
        let outputs: Vec<f64> = (1..=40).map(|k| k as f64 * 0.25).collect();
        let mut got = Vec::new();
        integrate_segment(&f, 0.0, 10.0, &mut y, None, &tol, &outputs, |_, s| {
            got.push(s[0])
        })
        .unwrap();
        assert_eq!(got.len(), outputs.len());
        for (t, v) in outputs.iter().zip(&got) {
            let expected = (-0.7 * t).exp();
            assert!(
                (v - expected).abs() < 1e-7,
                "t={t}: got {v} want {expected}"
            );
        }
    }

    #[test]
    fn zero_span_emits_current_state() {
        let f = decay(1.0);
        let mut y = [1.0; DIM];
        let tol = Tolerances {
            abs_tol: 1e-8,
            rel_tol: 1e-6,
        };
        let mut n = 0;
        integrate_segment(&f, 5.0, 5.0, &mut y, None, &tol, &[5.0], |_, s| {
            n += 1;
            assert_eq!(s[0], 1.0);
        })
        .unwrap();
        assert_eq!(n, 1);
    }
}
