use serde::Serialize;

use crate::finsler::Domain;

/// A base curve `σ: [0, 1] → chart` with analytic velocity.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Curve {
    Segment { from: Vec<f64>, to: Vec<f64> },
    /// `σ(t) = Σ_k c_k t^k`; `coefficients[k]` is the vector `c_k`.
    Polynomial { coefficients: Vec<Vec<f64>> },
    /// Piecewise-linear through `points`, uniformly parameterized.
    Chain { points: Vec<Vec<f64>> },
}

impl Curve {
    pub fn segment(from: Vec<f64>, to: Vec<f64>) -> Self {
        Curve::Segment { from, to }
    }

    /// `t ↦ p + t v`.
    pub fn ray(p: &[f64], v: &[f64]) -> Self {
        Curve::Segment {
            from: p.to_vec(),
            to: p.iter().zip(v).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Curve::Segment { from, .. } => from.len(),
            Curve::Polynomial { coefficients } => coefficients.first().map_or(0, Vec::len),
            Curve::Chain { points } => points.first().map_or(0, Vec::len),
        }
    }

    /// Well-formedness: consistent dimensions and at least one piece.
    pub fn check_shape(&self) -> Result<(), String> {
        let n = self.dimension();
        if n == 0 {
            return Err("curve has no coordinates".into());
        }
        let ok = match self {
            Curve::Segment { from, to } => from.len() == to.len(),
            Curve::Polynomial { coefficients } => coefficients.iter().all(|c| c.len() == n),
            Curve::Chain { points } => points.len() >= 2 && points.iter().all(|c| c.len() == n),
        };
        let finite = match self {
            Curve::Segment { from, to } => from.iter().chain(to).all(|c| c.is_finite()),
            Curve::Polynomial { coefficients } => coefficients.iter().flatten().all(|c| c.is_finite()),
            Curve::Chain { points } => points.iter().flatten().all(|c| c.is_finite()),
        };
        if ok && finite {
            Ok(())
        } else {
            Err("inconsistent or non-finite curve data".into())
        }
    }

    /// Parameters where the velocity may jump, including both ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Curve::Chain { points } => {
                let m = points.len() - 1;
                (0..=m).map(|k| k as f64 / m as f64).collect()
            }
            _ => vec![0.0, 1.0],
        }
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        match self {
            Curve::Segment { from, to } => from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect(),
            Curve::Polynomial { coefficients } => {
                let n = self.dimension();
                let mut out = vec![0.0; n];
                for c in coefficients.iter().rev() {
                    for (o, ci) in out.iter_mut().zip(c) {
                        *o = *o * t + ci;
                    }
                }
                out
            }
            Curve::Chain { points } => {
                let (k, s) = self.piece(t, points.len() - 1);
                points[k]
                    .iter()
                    .zip(&points[k + 1])
                    .map(|(a, b)| a + s * (b - a))
                    .collect()
            }
        }
    }

    /// `σ̇(t)`. On a chain the velocity of the piece containing `t` is used,
    /// with ties going to the later piece.
    pub fn velocity(&self, t: f64) -> Vec<f64> {
        match self {
            Curve::Segment { from, to } => from.iter().zip(to).map(|(a, b)| b - a).collect(),
            Curve::Polynomial { coefficients } => {
                let n = self.dimension();
                let mut out = vec![0.0; n];
                for (k, c) in coefficients.iter().enumerate().skip(1).rev() {
                    for (o, ci) in out.iter_mut().zip(c) {
                        *o = *o * t + k as f64 * ci;
                    }
                }
                out
            }
            Curve::Chain { points } => {
                let m = points.len() - 1;
                let (k, _) = self.piece(t, m);
                points[k]
                    .iter()
                    .zip(&points[k + 1])
                    .map(|(a, b)| m as f64 * (b - a))
                    .collect()
            }
        }
    }

    /// Like [`Curve::velocity`] but resolving ties to the piece `[lo, hi]`.
    pub(crate) fn velocity_on(&self, t: f64, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            Curve::Chain { .. } => self.velocity(0.5 * (lo + hi)),
            _ => self.velocity(t),
        }
    }

    fn piece(&self, t: f64, m: usize) -> (usize, f64) {
        let u = t.clamp(0.0, 1.0) * m as f64;
        let k = (u.floor() as usize).min(m - 1);
        (k, u - k as f64)
    }

    /// `s ↦ σ(1 − s)`.
    pub fn reversed(&self) -> Curve {
        match self {
            Curve::Segment { from, to } => Curve::Segment {
                from: to.clone(),
                to: from.clone(),
            },
            Curve::Polynomial { coefficients } => {
                // expand Σ c_k (1 − s)^k
                let n = self.dimension();
                let deg = coefficients.len();
                let mut out = vec![vec![0.0; n]; deg];
                for (k, c) in coefficients.iter().enumerate() {
                    let mut binom = 1.0;
                    for j in 0..=k {
                        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                        for (o, ci) in out[j].iter_mut().zip(c) {
                            *o += sign * binom * ci;
                        }
                        binom = binom * (k - j) as f64 / (j + 1) as f64;
                    }
                }
                Curve::Polynomial { coefficients: out }
            }
            Curve::Chain { points } => Curve::Chain {
                points: points.iter().rev().cloned().collect(),
            },
        }
    }

    /// Checks the image stays inside `domain` (sampled for polynomials,
    /// exact for linear pieces). Returns the first offending parameter.
    pub fn stays_inside(&self, domain: &Domain) -> Result<(), f64> {
        let ts: Vec<f64> = match self {
            Curve::Polynomial { .. } => (0..=400).map(|k| k as f64 / 400.0).collect(),
            _ => self.breakpoints(),
        };
        match ts.into_iter().find(|&t| !domain.contains(&self.point(t))) {
            Some(t) => Err(t),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_velocity_and_reverse() {
        let c = Curve::Polynomial {
            coefficients: vec![vec![0.1, 0.0], vec![0.2, 0.3], vec![0.0, -0.4], vec![0.05, 0.0]],
        };
        let t = 0.37;
        let h = 1e-6;
        let fd: Vec<f64> = c
            .point(t + h)
            .iter()
            .zip(c.point(t - h))
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        for (a, b) in fd.iter().zip(c.velocity(t)) {
            assert!((a - b).abs() < 1e-9);
        }
        let r = c.reversed();
        for (a, b) in r.point(t).iter().zip(c.point(1.0 - t)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn chain_pieces() {
        let c = Curve::Chain {
            points: vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.5, 0.5]],
        };
        assert_eq!(c.point(0.75), vec![0.5, 0.25]);
        assert_eq!(c.velocity(0.25), vec![1.0, 0.0]);
        assert_eq!(c.velocity_on(0.5, 0.0, 0.5), vec![1.0, 0.0]);
        assert_eq!(c.velocity_on(0.5, 0.5, 1.0), vec![0.0, 1.0]);
        assert_eq!(c.breakpoints(), vec![0.0, 0.5, 1.0]);
        assert!(c.stays_inside(&Domain::cube(2, 0.4)).is_err());
    }
}
