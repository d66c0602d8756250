//! Nonlinear parallel transport `ẏⁱ + σ̇ʲ ∂Gⁱ/∂yʲ(σ, y) = 0` along base
//! curves, its differential, and horizontal stability of fiber tensors.

mod curve;
mod ode;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::finsler::{connection_with_vertical_derivative, nonlinear_connection, FinslerMetric, MetricError};

pub use curve::Curve;
pub use ode::{IntegratorStats, Method};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("curve leaves the chart interior at t = {t}")]
    CurveOutside { t: f64 },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("transport time {0} is outside [0, 1]")]
    InvalidTime(f64),
    #[error("degenerate sample set: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportOptions {
    pub method: Method,
    /// Number of uniformly spaced trajectory samples, including both ends.
    pub samples: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            method: Method::default(),
            samples: 33,
        }
    }
}

impl TransportOptions {
    pub fn with_tolerance(rtol: f64, atol: f64) -> Self {
        TransportOptions {
            method: Method::Dopri5 { rtol, atol },
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportResult {
    pub times: Vec<f64>,
    pub trajectory: Vec<Vec<f64>>,
    /// `F(σ(t_k), y(t_k))`.
    pub norms: Vec<f64>,
    /// `|F(σ(t_k), y(t_k)) − F(p, y₀)|`.
    pub drift: Vec<f64>,
    pub y: Vec<f64>,
    pub stats: IntegratorStats,
    pub method: Method,
}

impl TransportResult {
    pub fn max_drift(&self) -> f64 {
        self.drift.iter().fold(0.0, |m, d| m.max(*d))
    }

    /// Columns `t, y1..yn, F, drift`.
    pub fn to_csv(&self) -> String {
        let n = self.y.len();
        let mut s = String::from("t");
        for i in 1..=n {
            let _ = write!(s, ",y{i}");
        }
        s.push_str(",F,drift\n");
        for k in 0..self.times.len() {
            let _ = write!(s, "{:.17e}", self.times[k]);
            for v in &self.trajectory[k] {
                let _ = write!(s, ",{v:.17e}");
            }
            let _ = writeln!(s, ",{:.17e},{:.17e}", self.norms[k], self.drift[k]);
        }
        s
    }
}

fn check_inputs(
    m: &FinslerMetric,
    curve: &Curve,
    y0: &[f64],
    t: f64,
    strict: bool,
) -> Result<(), TransportError> {
    curve.check_shape().map_err(TransportError::InvalidCurve)?;
    if curve.dimension() != m.dimension() {
        return Err(TransportError::InvalidCurve(format!(
            "curve dimension {} differs from metric dimension {}",
            curve.dimension(),
            m.dimension()
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(TransportError::InvalidTime(t));
    }
    let region = if strict {
        m.domain().interior()
    } else {
        m.domain().clone()
    };
    curve
        .stays_inside(&region)
        .map_err(|t| TransportError::CurveOutside { t })?;
    m.check_point(&curve.point(0.0), y0)?;
    Ok(())
}

/// Integrates `state' = rhs(x, σ̇, state)` piece by piece over `[0, t]`.
fn integrate_along<F>(
    m: &FinslerMetric,
    curve: &Curve,
    t: f64,
    state: Vec<f64>,
    method: Method,
    samples: &[f64],
    out: &mut Vec<(f64, Vec<f64>)>,
    rhs: F,
) -> Result<(Vec<f64>, IntegratorStats), TransportError>
where
    F: Fn(&[f64], &[f64], &[f64]) -> Result<Vec<f64>, MetricError>,
{
    let mut stats = IntegratorStats::default();
    let mut state = state;
    let bps = curve.breakpoints();
    for w in bps.windows(2) {
        let (lo, hi) = (w[0], w[1].min(t));
        if lo >= t {
            break;
        }
        let f = |tau: f64, s: &[f64]| -> Result<Vec<f64>, TransportError> {
            let x = curve.point(tau);
            if !m.domain().contains(&x) {
                return Err(TransportError::CurveOutside { t: tau });
            }
            let v = curve.velocity_on(tau, w[0], w[1]);
            Ok(rhs(&x, &v, s)?)
        };
        state = ode::integrate(method, f, lo, hi, state, samples, out, &mut stats)?;
        if hi >= t {
            break;
        }
    }
    Ok((state, stats))
}

fn transport_rhs(m: &FinslerMetric) -> impl Fn(&[f64], &[f64], &[f64]) -> Result<Vec<f64>, MetricError> + '_ {
    move |x, v, y| {
        let conn = nonlinear_connection(m, x, y)?;
        let dv = DVector::from_column_slice(v);
        Ok((-(conn * dv)).iter().copied().collect())
    }
}

fn run_transport(
    m: &FinslerMetric,
    curve: &Curve,
    y0: &[f64],
    t: f64,
    opts: &TransportOptions,
    strict: bool,
) -> Result<TransportResult, TransportError> {
    check_inputs(m, curve, y0, t, strict)?;
    let count = opts.samples.max(2);
    let sample_times: Vec<f64> = (0..count).map(|k| t * k as f64 / (count - 1) as f64).collect();
    let mut out = vec![(0.0, y0.to_vec())];
    let (y, stats) = if t == 0.0 {
        (y0.to_vec(), IntegratorStats::default())
    } else {
        integrate_along(m, curve, t, y0.to_vec(), opts.method, &sample_times, &mut out, transport_rhs(m))?
    };
    if out.len() < count {
        out.push((t, y.clone()));
    }
    let f0 = m.eval(&curve.point(0.0), y0)?;
    let mut norms = Vec::with_capacity(out.len());
    for (tk, yk) in &out {
        norms.push(m.eval(&curve.point(*tk), yk)?);
    }
    Ok(TransportResult {
        drift: norms.iter().map(|f| (f - f0).abs()).collect(),
        times: out.iter().map(|p| p.0).collect(),
        trajectory: out.into_iter().map(|p| p.1).collect(),
        norms,
        y,
        stats,
        method: opts.method,
    })
}

/// Transports `y0 ∈ T_{σ(0)}M` to `T_{σ(t)}M`.
pub fn transport(
    m: &FinslerMetric,
    curve: &Curve,
    y0: &[f64],
    t: f64,
    opts: &TransportOptions,
) -> Result<TransportResult, TransportError> {
    run_transport(m, curve, y0, t, opts, true)
}

/// Independent transports in parallel; results keep the input order.
pub fn transport_batch(
    m: &FinslerMetric,
    items: &[(Curve, Vec<f64>)],
    t: f64,
    opts: &TransportOptions,
) -> Vec<Result<TransportResult, TransportError>> {
    items
        .par_iter()
        .map(|(c, y0)| transport(m, c, y0, t, opts))
        .collect()
}

/// `y(t)` together with the Jacobian `∂y(t)/∂y₀` of the transport map.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowJacobian {
    pub y: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub stats: IntegratorStats,
}

fn run_jacobian(
    m: &FinslerMetric,
    curve: &Curve,
    y0: &[f64],
    t: f64,
    method: Method,
    strict: bool,
) -> Result<FlowJacobian, TransportError> {
    check_inputs(m, curve, y0, t, strict)?;
    let n = m.dimension();
    let mut state = y0.to_vec();
    state.extend(DMatrix::<f64>::identity(n, n).iter());
    if t == 0.0 {
        return Ok(FlowJacobian {
            y: y0.to_vec(),
            jacobian: DMatrix::identity(n, n),
            stats: IntegratorStats::default(),
        });
    }
    let rhs = |x: &[f64], v: &[f64], s: &[f64]| -> Result<Vec<f64>, MetricError> {
        let (y, phi) = s.split_at(n);
        let (conn, derivs) = connection_with_vertical_derivative(m, x, y)?;
        let dv = DVector::from_column_slice(v);
        let mut out: Vec<f64> = (-(&conn * &dv)).iter().copied().collect();
        // linearization: (∂/∂yˡ)(−σ̇ᵏ Nⁱ_k) = −σ̇ᵏ ∂Nⁱ_k/∂yˡ
        let lin = DMatrix::from_fn(n, n, |i, l| -(derivs[l].row(i) * &dv)[(0, 0)]);
        let phi = DMatrix::from_column_slice(n, n, phi);
        out.extend((lin * phi).iter());
        Ok(out)
    };
    let mut sink = Vec::new();
    let (state, stats) = integrate_along(m, curve, t, state, method, &[], &mut sink, rhs)?;
    Ok(FlowJacobian {
        y: state[..n].to_vec(),
        jacobian: DMatrix::from_column_slice(n, n, &state[n..]),
        stats,
    })
}

pub fn transport_jacobian(
    m: &FinslerMetric,
    curve: &Curve,
    y0: &[f64],
    t: f64,
    opts: &TransportOptions,
) -> Result<FlowJacobian, TransportError> {
    run_jacobian(m, curve, y0, t, opts.method, true)
}

/// `(P_{σ,t})_* u` from the variational equation.
pub fn transport_differential(
    m: &FinslerMetric,
    curve: &Curve,
    y0: &[f64],
    u: &[f64],
    t: f64,
    opts: &TransportOptions,
) -> Result<DVector<f64>, TransportError> {
    let jac = transport_jacobian(m, curve, y0, t, opts)?;
    Ok(jac.jacobian * DVector::from_column_slice(u))
}

/// Fiber tensors that can be pulled back by the transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberTensor {
    /// `g / F²`.
    GHat,
    /// `A / F³`.
    AHat,
    /// The Cartan form.
    Eta,
}

impl FiberTensor {
    pub const ALL: [FiberTensor; 3] = [FiberTensor::GHat, FiberTensor::AHat, FiberTensor::Eta];

    pub fn name(self) -> &'static str {
        match self {
            FiberTensor::GHat => "ghat",
            FiberTensor::AHat => "ahat",
            FiberTensor::Eta => "eta",
        }
    }
}

/// Components of a fiber tensor at `(x, y)`, pulled back by `frame`
/// (row-major flattening; the identity frame gives the tensor itself).
pub fn fiber_tensor(
    m: &FinslerMetric,
    x: &[f64],
    y: &[f64],
    which: FiberTensor,
    frame: &DMatrix<f64>,
) -> Result<Vec<f64>, TransportError> {
    let t = m.fiber_norm(x)?.tensors(y).map_err(|source| MetricError::Fiber {
        x: x.to_vec(),
        source,
    })?;
    Ok(match which {
        FiberTensor::GHat => {
            let g = frame.transpose() * t.g_hat() * frame;
            g.transpose().iter().copied().collect()
        }
        FiberTensor::AHat => t.a_hat().pullback(frame).data,
        FiberTensor::Eta => (frame.transpose() * &t.eta).iter().copied().collect(),
    })
}

fn pullback_inner(
    m: &FinslerMetric,
    curve: &Curve,
    t: f64,
    which: FiberTensor,
    y0: &[f64],
    method: Method,
    strict: bool,
) -> Result<Vec<f64>, TransportError> {
    let flow = run_jacobian(m, curve, y0, t, method, strict)?;
    fiber_tensor(m, &curve.point(t), &flow.y, which, &flow.jacobian)
}

/// `(P_{σ,t})^* T` evaluated at `y0`, all components.
pub fn pullback_tensor(
    m: &FinslerMetric,
    curve: &Curve,
    t: f64,
    which: FiberTensor,
    y0: &[f64],
    opts: &TransportOptions,
) -> Result<Vec<f64>, TransportError> {
    pullback_inner(m, curve, t, which, y0, opts.method, true)
}

/// Step used by [`stability_rate`].
pub const RATE_STEP: f64 = 1e-4;

/// `d/dt|₀ (P_{σ,t})^* T` along `t ↦ p + t·direction`, by a central
/// difference with one Richardson step.
pub fn stability_rate(
    m: &FinslerMetric,
    p: &[f64],
    y: &[f64],
    direction: &[f64],
    which: FiberTensor,
    opts: &TransportOptions,
) -> Result<Vec<f64>, TransportError> {
    if direction.iter().all(|&c| c == 0.0) {
        return Err(TransportError::InvalidCurve("zero direction".into()));
    }
    // transport depends only on the traced path, so the segments p ± 2h·d
    // evaluated at t = ½ and t = 1 give the pullbacks at times h and 2h
    let reach = |sign: f64| -> Vec<f64> { direction.iter().map(|c| sign * 2.0 * RATE_STEP * c).collect() };
    let fwd = Curve::ray(p, &reach(1.0));
    let bwd = Curve::ray(p, &reach(-1.0));
    let central = |t: f64, h: f64| -> Result<Vec<f64>, TransportError> {
        let a = pullback_inner(m, &fwd, t, which, y, opts.method, false)?;
        let b = pullback_inner(m, &bwd, t, which, y, opts.method, false)?;
        Ok(a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * h)).collect())
    };
    let d1 = central(0.5, RATE_STEP)?;
    let d2 = central(1.0, 2.0 * RATE_STEP)?;
    Ok(d1.iter().zip(&d2).map(|(a, b)| (4.0 * a - b) / 3.0).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linearity {
    /// Least-squares map `Λ` with `P(y_k) ≈ Λ y_k`.
    pub map: DMatrix<f64>,
    /// `sup_k ‖P(y_k) − Λ y_k‖ / ‖y_k‖`.
    pub residual: f64,
    /// `sup ‖P(y_a + y_b) − P(y_a) − P(y_b)‖ / (‖y_a‖ + ‖y_b‖)` over consecutive pairs.
    pub additivity: f64,
}

/// How far `P_{σ,t}` is from a linear map on the given samples.
pub fn linearity_residual(
    m: &FinslerMetric,
    curve: &Curve,
    t: f64,
    samples: &[Vec<f64>],
    opts: &TransportOptions,
) -> Result<Linearity, TransportError> {
    let n = m.dimension();
    if samples.len() < 2 * n {
        return Err(TransportError::Degenerate(format!(
            "need at least {} samples, got {}",
            2 * n,
            samples.len()
        )));
    }
    let y = DMatrix::from_fn(n, samples.len(), |i, k| samples[k][i]);
    let svd = y.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.rank(1e-12 * smax) < n {
        return Err(TransportError::Degenerate("samples do not span".into()));
    }
    let sums: Vec<Vec<f64>> = samples
        .chunks_exact(2)
        .map(|p| p[0].iter().zip(&p[1]).map(|(a, b)| a + b).collect())
        .collect();
    let all: Vec<&Vec<f64>> = samples.iter().chain(&sums).collect();
    let images: Vec<Vec<f64>> = all
        .par_iter()
        .map(|y0| transport(m, curve, y0, t, opts).map(|r| r.y))
        .collect::<Result<_, _>>()?;
    let (direct, summed) = images.split_at(samples.len());
    let img = DMatrix::from_fn(n, samples.len(), |i, k| direct[k][i]);
    let pinv = svd
        .pseudo_inverse(1e-12 * smax)
        .map_err(|e| TransportError::Degenerate(e.to_string()))?;
    let map = &img * pinv;
    let fitted = &map * &y;
    let residual = (0..samples.len())
        .map(|k| (img.column(k) - fitted.column(k)).norm() / y.column(k).norm())
        .fold(0.0, f64::max);
    let additivity = summed
        .iter()
        .enumerate()
        .map(|(p, s)| {
            let (a, b) = (2 * p, 2 * p + 1);
            let d = DVector::from_column_slice(s) - img.column(a) - img.column(b);
            d.norm() / (y.column(a).norm() + y.column(b).norm())
        })
        .fold(0.0, f64::max);
    Ok(Linearity {
        map,
        residual,
        additivity,
    })
}

#[cfg(test)]
mod tests;
