use rayon::prelude::*;
use serde::Serialize;

use super::{curvature_bundle, FinslerMetric, MetricError};
use crate::sampling;
use crate::tensor::{matrix_max_abs, max_abs};

/// Absolute thresholds for the Landsberg-not-Berwald candidate flag:
/// `‖L‖ < 1e-8`, `‖E‖ < 1e-8`, `‖B‖ > 1e-4`.
pub const UNICORN: (f64, f64, f64) = (1e-8, 1e-8, 1e-4);

/// Sample layout: `points` base points in the interior box, each paired with
/// `directions` unit fiber vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub points: usize,
    pub directions: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 10,
            directions: 10,
            seed: 0,
        }
    }
}

impl GridSpec {
    /// The `(x, y)` samples, in a fixed order.
    pub fn samples(&self, m: &FinslerMetric) -> Vec<(Vec<f64>, Vec<f64>)> {
        let inner = m.domain().interior();
        let n = m.dimension();
        let mut rng = sampling::rng(self.seed);
        let mut out = Vec::with_capacity(self.points * self.directions);
        for _ in 0..self.points {
            let x = sampling::point_in_box(&mut rng, &inner.lo, &inner.hi);
            for _ in 0..self.directions {
                out.push((x.clone(), sampling::unit_vector(&mut rng, n)));
            }
        }
        out
    }
}

/// "Small" means `≤ relative · (1 + grid max of |g|)` unless an absolute
/// threshold is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub relative: f64,
    pub absolute: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            relative: 1e-7,
            absolute: None,
        }
    }
}

/// Where a sup-norm was attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub value: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Witness {
    fn zero() -> Self {
        Witness {
            value: 0.0,
            x: vec![],
            y: vec![],
        }
    }

    fn absorb(&mut self, value: f64, x: &[f64], y: &[f64]) {
        if value > self.value || self.x.is_empty() {
            *self = Witness {
                value,
                x: x.to_vec(),
                y: y.to_vec(),
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub metric: String,
    pub samples: usize,
    pub threshold: f64,
    pub g_scale: f64,
    pub cartan: Witness,
    pub berwald: Witness,
    pub mean_berwald: Witness,
    pub landsberg: Witness,
    pub mean_landsberg: Witness,
    pub hv_curvature: Witness,
    pub s_curvature: Witness,
    pub riemannian: bool,
    pub is_berwald: bool,
    pub is_landsberg: bool,
    pub is_weak_landsberg: bool,
    /// Samples with small `L` and `E` but large `B`.
    pub unicorn_candidates: Vec<Witness>,
    /// `false` when the sup-norms say Landsberg with vanishing mean Berwald
    /// curvature yet not Berwald.
    pub consistent: bool,
}

struct SampleNorms {
    g: f64,
    a: f64,
    b: f64,
    e: f64,
    l: f64,
    j: f64,
    p: f64,
    s: f64,
}

pub fn classify(
    m: &FinslerMetric,
    grid: &GridSpec,
    tol: &Tolerances,
) -> Result<ClassificationReport, MetricError> {
    let samples = grid.samples(m);
    if samples.is_empty() {
        return Err(MetricError::InvalidParams("empty classification grid".into()));
    }
    let norms: Vec<SampleNorms> = samples
        .par_iter()
        .map(|(x, y)| {
            let c = curvature_bundle(m, x, y)?;
            Ok(SampleNorms {
                g: matrix_max_abs(&c.g),
                a: c.a.max_abs(),
                b: c.b.max_abs(),
                e: matrix_max_abs(&c.e),
                l: c.l.max_abs(),
                j: max_abs(c.j.as_slice()),
                p: c.p.max_abs(),
                s: c.s.abs(),
            })
        })
        .collect::<Result<_, MetricError>>()?;

    let mut w = [(); 7].map(|_| Witness::zero());
    let mut g_scale: f64 = 0.0;
    let mut unicorn_candidates = Vec::new();
    for ((x, y), s) in samples.iter().zip(&norms) {
        g_scale = g_scale.max(s.g);
        for (slot, v) in w.iter_mut().zip([s.a, s.b, s.e, s.l, s.j, s.p, s.s]) {
            slot.absorb(v, x, y);
        }
        if s.l < UNICORN.0 && s.e < UNICORN.1 && s.b > UNICORN.2 {
            unicorn_candidates.push(Witness {
                value: s.b,
                x: x.clone(),
                y: y.clone(),
            });
        }
    }
    let threshold = tol.absolute.unwrap_or(tol.relative * (1.0 + g_scale));
    let [cartan, berwald, mean_berwald, landsberg, mean_landsberg, hv_curvature, s_curvature] = w;
    let small = |w: &Witness| w.value <= threshold;
    let consistent = unicorn_candidates.is_empty()
        && !(small(&landsberg) && small(&mean_berwald) && !small(&berwald));
    Ok(ClassificationReport {
        metric: m.label().to_string(),
        samples: samples.len(),
        threshold,
        g_scale,
        riemannian: small(&cartan),
        is_berwald: small(&berwald),
        is_landsberg: small(&landsberg),
        is_weak_landsberg: small(&mean_landsberg),
        cartan,
        berwald,
        mean_berwald,
        landsberg,
        mean_landsberg,
        hv_curvature,
        s_curvature,
        unicorn_candidates,
        consistent,
    })
}
