//! Dormand–Prince 5(4) with dense output, and classical RK4.

use serde::Serialize;

use super::TransportError;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
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
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
/// Dense-output weights (Hairer, Nørsett & Wanner).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Method {
    /// Adaptive Dormand–Prince 5(4).
    Dopri5 { rtol: f64, atol: f64 },
    /// Fixed-step classical Runge–Kutta with this many steps per unit time.
    Rk4 { steps: usize },
}

impl Default for Method {
    fn default() -> Self {
        Method::Dopri5 {
            rtol: 1e-10,
            atol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Sum of the absolute local error estimates over accepted steps.
    pub error_estimate: f64,
}

const MAX_STEPS: usize = 200_000;

/// Integrates `y' = rhs(t, y)` from `t0` to `t1 > t0`, appending a sample
/// for every time in `samples` that falls in `(t0, t1]`.
pub(crate) fn integrate<F>(
    method: Method,
    mut rhs: F,
    t0: f64,
    t1: f64,
    y0: Vec<f64>,
    samples: &[f64],
    out: &mut Vec<(f64, Vec<f64>)>,
    stats: &mut IntegratorStats,
) -> Result<Vec<f64>, TransportError>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, TransportError>,
{
    let pending: Vec<f64> = samples.iter().copied().filter(|&s| s > t0 && s <= t1).collect();
    match method {
        Method::Dopri5 { rtol, atol } => dopri5(&mut rhs, t0, t1, y0, rtol, atol, &pending, out, stats),
        Method::Rk4 { steps } => rk4(&mut rhs, t0, t1, y0, steps, &pending, out, stats),
    }
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (w, k) in terms {
        if *w != 0.0 {
            for (o, v) in out.iter_mut().zip(*k) {
                *o += h * w * v;
            }
        }
    }
    out
}

fn dopri5<F>(
    rhs: &mut F,
    t0: f64,
    t1: f64,
    y0: Vec<f64>,
    rtol: f64,
    atol: f64,
    pending: &[f64],
    out: &mut Vec<(f64, Vec<f64>)>,
    stats: &mut IntegratorStats,
) -> Result<Vec<f64>, TransportError>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, TransportError>,
{
    let span = t1 - t0;
    let dim = y0.len();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;
    stats.evaluations += 1;
    let mut h = span.min(0.05);
    let mut next_sample = 0;
    let mut steps = 0;
    while t < t1 {
        steps += 1;
        if steps > MAX_STEPS || h < 1e-14 * span.max(1e-300) {
            return Err(TransportError::StepUnderflow { t });
        }
        let last = t + h >= t1 - 1e-15 * span;
        if last {
            h = t1 - t;
        }
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(k1.clone());
        for s in 1..7 {
            let terms: Vec<(f64, &[f64])> = (0..s).map(|j| (A[s][j], k[j].as_slice())).collect();
            let ys = axpy(&y, h, &terms);
            k.push(rhs(t + C[s] * h, &ys)?);
            stats.evaluations += 1;
        }
        let terms: Vec<(f64, &[f64])> = (0..6).map(|j| (A[6][j], k[j].as_slice())).collect();
        let y_new = axpy(&y, h, &terms);
        let mut err_sq = 0.0;
        let mut err_abs = 0.0f64;
        for i in 0..dim {
            let e: f64 = h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>();
            let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale).powi(2);
            err_abs = err_abs.max(e.abs());
        }
        let err = (err_sq / dim as f64).sqrt();
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            let t_new = if last { t1 } else { t + h };
            while next_sample < pending.len() && pending[next_sample] <= t_new {
                let theta = (pending[next_sample] - t) / h;
                out.push((pending[next_sample], dense(&y, &y_new, &k, h, theta)));
                next_sample += 1;
            }
            stats.accepted += 1;
            stats.error_estimate += err_abs;
            t = t_new;
            y = y_new;
            k1 = k.swap_remove(6);
            if last {
                break;
            }
        } else {
            stats.rejected += 1;
        }
        let factor = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
        h *= if err > 1.0 { factor.min(1.0) } else { factor };
    }
    Ok(y)
}

fn dense(y0: &[f64], y1: &[f64], k: &[Vec<f64>], h: f64, theta: f64) -> Vec<f64> {
    let th1 = 1.0 - theta;
    (0..y0.len())
        .map(|i| {
            let diff = y1[i] - y0[i];
            let bspl = h * k[0][i] - diff;
            let r4 = diff - h * k[6][i] - bspl;
            let r5 = h * (0..7).map(|s| D[s] * k[s][i]).sum::<f64>();
            y0[i] + theta * (diff + th1 * (bspl + theta * (r4 + th1 * r5)))
        })
        .collect()
}

fn rk4<F>(
    rhs: &mut F,
    t0: f64,
    t1: f64,
    y0: Vec<f64>,
    steps_per_unit: usize,
    pending: &[f64],
    out: &mut Vec<(f64, Vec<f64>)>,
    stats: &mut IntegratorStats,
) -> Result<Vec<f64>, TransportError>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, TransportError>,
{
    let count = ((t1 - t0) * steps_per_unit as f64).ceil().max(1.0) as usize;
    let h = (t1 - t0) / count as f64;
    let mut y = y0;
    let mut next_sample = 0;
    for step in 0..count {
        let t = t0 + step as f64 * h;
        let k1 = rhs(t, &y)?;
        let k2 = rhs(t + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k1)]))?;
        let k3 = rhs(t + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k2)]))?;
        let k4 = rhs(t + h, &axpy(&y, h, &[(1.0, &k3)]))?;
        stats.evaluations += 4;
        stats.accepted += 1;
        let y_new = axpy(&y, h / 6.0, &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
        let t_new = if step + 1 == count { t1 } else { t + h };
        // cubic Hermite between nodes
        while next_sample < pending.len() && pending[next_sample] <= t_new {
            let theta = (pending[next_sample] - t) / h;
            let f_new = rhs(t_new, &y_new)?;
            stats.evaluations += 1;
            let sample = (0..y.len())
                .map(|i| {
                    let (p0, p1, m0, m1) = (y[i], y_new[i], h * k1[i], h * f_new[i]);
                    let t2 = theta * theta;
                    let t3 = t2 * theta;
                    (2.0 * t3 - 3.0 * t2 + 1.0) * p0
                        + (t3 - 2.0 * t2 + theta) * m0
                        + (-2.0 * t3 + 3.0 * t2) * p1
                        + (t3 - t2) * m1
                })
                .collect();
            out.push((pending[next_sample], sample));
            next_sample += 1;
        }
        y = y_new;
    }
    Ok(y)
}
