use super::{check_arity, EvalError, MultiIndex, ScalarField};

/// A central-difference derivative estimate with error metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEstimate {
    pub value: f64,
    pub step: f64,
    /// `|D(h) - D(2h)| / 3`, the leading O(h²) term.
    pub truncation_error: f64,
    /// Floating-point noise bound `eps · Σ|w f| / h^d`.
    pub rounding_error: f64,
    /// Set when rounding noise dominates the truncation estimate.
    pub cancellation: bool,
}

/// Step used when the caller has no preference. Higher derivative degrees
/// divide by larger powers of `h`, so they need larger steps to keep
/// rounding noise below the truncation error.
pub fn default_step(point: &[f64], degree: usize) -> f64 {
    let scale = point.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let base = match degree {
        0..=2 => 1e-4,
        3 => 1e-3,
        _ => 3e-3,
    };
    base * scale
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Tensor-product central difference. Returns the estimate and `Σ|w f|`.
fn stencil<F: ScalarField + ?Sized>(
    f: &F,
    point: &[f64],
    index: &MultiIndex,
    h: f64,
) -> Result<(f64, f64), EvalError> {
    let axes: Vec<(usize, usize)> = index
        .exponents()
        .enumerate()
        .filter(|&(_, k)| k > 0)
        .collect();
    let degree = index.degree();
    let mut counters = vec![0usize; axes.len()];
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut x = point.to_vec();
    loop {
        let mut weight = 1.0;
        x.copy_from_slice(point);
        for (&(axis, k), &j) in axes.iter().zip(&counters) {
            x[axis] += (k as f64 / 2.0 - j as f64) * h;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            weight *= sign * binomial(k, j);
        }
        let fx = f.eval_real(&x)?;
        sum += weight * fx;
        abs_sum += (weight * fx).abs();

        let mut pos = 0;
        loop {
            if pos == axes.len() {
                let scale = h.powi(degree as i32);
                return Ok((sum / scale, abs_sum / scale));
            }
            counters[pos] += 1;
            if counters[pos] <= axes[pos].1 {
                break;
            }
            counters[pos] = 0;
            pos += 1;
        }
    }
}

/// Central finite-difference estimate of `∂^index f(point)`, accurate to O(step²).
pub fn fd_oracle<F: ScalarField + ?Sized>(
    f: &F,
    point: &[f64],
    index: &MultiIndex,
    step: f64,
) -> Result<FdEstimate, EvalError> {
    check_arity(f.dimension(), point.len())?;
    assert!(step > 0.0, "finite-difference step must be positive");
    assert!(index.degree() <= 4, "finite-difference oracle supports degree <= 4");
    let (d1, abs1) = stencil(f, point, index, step)?;
    let (d2, _) = stencil(f, point, index, 2.0 * step)?;
    let truncation_error = (d1 - d2).abs() / 3.0;
    let rounding_error = f64::EPSILON * abs1;
    let cancellation = index.degree() > 0
        && rounding_error > truncation_error.max(1e-8 * d1.abs().max(1.0));
    Ok(FdEstimate {
        value: d1,
        step,
        truncation_error,
        rounding_error,
        cancellation,
    })
}

/// One Richardson step on top of [`fd_oracle`]: `(4 D(h) - D(2h)) / 3`, O(step⁴).
pub fn fd_oracle_extrapolated<F: ScalarField + ?Sized>(
    f: &F,
    point: &[f64],
    index: &MultiIndex,
    step: f64,
) -> Result<FdEstimate, EvalError> {
    let base = fd_oracle(f, point, index, step)?;
    let (d2, _) = stencil(f, point, index, 2.0 * step)?;
    let (d4, abs4) = stencil(f, point, index, 4.0 * step)?;
    let coarse = (4.0 * d2 - d4) / 3.0;
    let value = (4.0 * base.value - d2) / 3.0;
    let truncation_error = (value - coarse).abs() / 15.0;
    let rounding_error = base.rounding_error * 5.0 / 3.0 + f64::EPSILON * abs4 / 3.0;
    Ok(FdEstimate {
        value,
        step,
        truncation_error,
        rounding_error,
        cancellation: index.degree() > 0
            && rounding_error > truncation_error.max(1e-8 * value.abs().max(1.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::PolynomialField;

    #[test]
    fn cubic_second_derivative() {
        let f = PolynomialField::new(1, vec![(1.0, MultiIndex::new(&[3]))]);
        let e = fd_oracle(&f, &[2.0], &MultiIndex::new(&[2]), 1e-3).unwrap();
        assert!((e.value - 12.0).abs() < 1e-5, "{e:?}");
    }

    #[test]
    fn bilinear_mixed_partial() {
        let f = PolynomialField::new(2, vec![(1.0, MultiIndex::new(&[1, 1]))]);
        let e = fd_oracle(&f, &[1.0, 1.0], &MultiIndex::new(&[1, 1]), 1e-3).unwrap();
        assert!((e.value - 1.0).abs() < 1e-6, "{e:?}");
    }

    #[test]
    fn tiny_step_raises_cancellation_flag() {
        let f = PolynomialField::new(1, vec![(1.0, MultiIndex::new(&[4]))]);
        let e = fd_oracle(&f, &[1.3], &MultiIndex::new(&[3]), 1e-6).unwrap();
        assert!(e.cancellation, "{e:?}");
        let ok = fd_oracle(&f, &[1.3], &MultiIndex::new(&[3]), 1e-2).unwrap();
        assert!(!ok.cancellation, "{ok:?}");
    }
}
