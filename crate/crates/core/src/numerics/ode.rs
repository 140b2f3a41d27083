//! Adaptive Dormand–Prince 5(4) integration of complex first-order systems.

use num_complex::Complex64;

use super::NumericsError;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-15,
            initial_step: 1e-3,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` and returns the state at each entry
/// of `outputs`, which must be monotone in the direction of integration.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: &[Complex64],
    outputs: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Vec<Complex64>>, NumericsError>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let dim = y0.len();
    let Some(&last) = outputs.last() else {
        return Ok(Vec::new());
    };
    let dir = if last >= t0 { 1.0 } else { -1.0 };
    if outputs.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) || (outputs[0] - t0) * dir < 0.0 {
        return Err(NumericsError::Ode("output points are not monotone".into()));
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut k: Vec<Vec<Complex64>> = vec![vec![zero; dim]; 7];
    let mut tmp = vec![zero; dim];
    let mut y = y0.to_vec();
    let mut y_new = vec![zero; dim];
    let mut t = t0;
    let mut h = opts.initial_step.abs() * dir;
    let mut out = Vec::with_capacity(outputs.len());
    let mut steps = 0usize;

    f(t, &y, &mut k[0]);
    for &target in outputs {
        while (target - t) * dir > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                return Err(NumericsError::Ode(format!(
                    "step budget exhausted at t = {t}"
                )));
            }
            let remaining = target - t;
            let last_step = (h * dir) >= remaining * dir;
            let step = if last_step { remaining } else { h };

            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += kj[i] * (step * a);
                        }
                    }
                    tmp[i] = acc;
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                f(t + C[s] * step, &tmp, &mut tail[0]);
                if s == 6 {
                    y_new.copy_from_slice(&tmp);
                }
            }
            // stage 7 evaluated at the fifth-order solution (FSAL)
            let mut k7 = vec![zero; dim];
            f(t + step, &y_new, &mut k7);

            let mut err: f64 = 0.0;
            for i in 0..dim {
                let mut e = k7[i] * E[6];
                for (j, kj) in k.iter().enumerate().take(6) {
                    if E[j] != 0.0 {
                        e += kj[i] * E[j];
                    }
                }
                let scale = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
                err = err.max((e * step).norm() / scale);
            }
            if !err.is_finite() {
                return Err(NumericsError::Ode(format!("non-finite state near t = {t}")));
            }
            if err <= 1.0 {
                t = if last_step { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k[0] = k7;
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).min(5.0)
                };
                if !last_step {
                    h = step * grow.max(1.0);
                } else {
                    h = h.abs().max(step.abs() * grow.max(1.0)) * dir;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).max(0.2);
                if (t + h) == t {
                    return Err(NumericsError::Ode(format!(
                        "step size underflow at t = {t}"
                    )));
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
