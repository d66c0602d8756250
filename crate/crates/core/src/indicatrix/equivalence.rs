use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::jets::jet_eval;
use crate::minkowski::{MinkowskiNorm, NormError};
use crate::sampling;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquivalenceError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("linear map is singular")]
    Singular,
    #[error("empty sample set")]
    NoSamples,
    #[error(transparent)]
    Norm(#[from] NormError),
}

fn check_dims(f1: &MinkowskiNorm, f2: &MinkowskiNorm) -> Result<usize, EquivalenceError> {
    let (a, b) = (f1.dimension(), f2.dimension());
    if a == b {
        Ok(a)
    } else {
        Err(EquivalenceError::DimensionMismatch(a, b))
    }
}

fn apply(l: &DMatrix<f64>, u: &[f64]) -> Vec<f64> {
    (l * DVector::from_column_slice(u)).iter().copied().collect()
}

fn is_singular(l: &DMatrix<f64>) -> bool {
    let s = l.singular_values();
    !(s.min() > 1e-12 * s.max())
}

/// `sup_u |F1(u) − F2(L u)|` over the samples.
pub fn equivalence_check(
    f1: &MinkowskiNorm,
    f2: &MinkowskiNorm,
    l: &DMatrix<f64>,
    samples: &[Vec<f64>],
) -> Result<f64, EquivalenceError> {
    let n = check_dims(f1, f2)?;
    if l.nrows() != n || l.ncols() != n {
        return Err(EquivalenceError::DimensionMismatch(n, l.nrows()));
    }
    if is_singular(l) {
        return Err(EquivalenceError::Singular);
    }
    if samples.is_empty() {
        return Err(EquivalenceError::NoSamples);
    }
    let mut worst: f64 = 0.0;
    for u in samples {
        worst = worst.max((f1.eval(u)? - f2.eval(&apply(l, u))?).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct EquivalenceOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Success threshold on the sup residual.
    pub tol: f64,
    /// Number of fitting directions; `None` means `32 n²`.
    pub samples: Option<usize>,
    pub max_iterations: usize,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            restarts: 20,
            seed: 0,
            tol: 1e-6,
            samples: None,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquivalenceResult {
    /// Best `L` found; defined only up to the linear symmetry group of `F1`.
    pub matrix: DMatrix<f64>,
    /// Sup residual over fitting and validation directions.
    pub residual: f64,
    pub success: bool,
    pub restarts_used: usize,
    pub restart_residuals: Vec<f64>,
}

/// Searches for `L` with `F2(L u) = F1(u)` by damped Gauss–Newton
/// (Levenberg–Marquardt) on the entries of `L`, restarting from the identity
/// and then from seeded moment-matched guesses `Q2^{-1/2} O Q1^{1/2}` built
/// from quadratic fits `F_i² ≈ uᵀ Q_i u` and random orthogonal `O`.
pub fn equivalence_solve(
    f1: &MinkowskiNorm,
    f2: &MinkowskiNorm,
    options: &EquivalenceOptions,
) -> Result<EquivalenceResult, EquivalenceError> {
    let n = check_dims(f1, f2)?;
    let count = options.samples.unwrap_or(32 * n * n);
    let mut rng = sampling::rng(options.seed);
    let dirs: Vec<Vec<f64>> = (0..count).map(|_| sampling::unit_vector(&mut rng, n)).collect();
    let validation: Vec<Vec<f64>> = (0..count).map(|_| sampling::unit_vector(&mut rng, n)).collect();
    let targets: Vec<f64> = dirs.iter().map(|u| f1.eval(u)).collect::<Result<_, _>>()?;

    let shape_root = |f: &MinkowskiNorm| -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let fit = quadratic_fit(f, &dirs).ok()?;
        let eig = fit.matrix.symmetric_eigen();
        if eig.eigenvalues.min() <= 0.0 {
            return None;
        }
        let root = |p: f64| {
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| e.powf(p)));
            &eig.eigenvectors * d * eig.eigenvectors.transpose()
        };
        Some((root(0.5), root(-0.5)))
    };
    let moments = shape_root(f1).zip(shape_root(f2));

    let mut best: Option<(DMatrix<f64>, f64)> = None;
    let mut residuals = Vec::new();
    for restart in 0..options.restarts.max(1) {
        let start = if restart == 0 {
            DMatrix::identity(n, n)
        } else {
            let o = sampling::orthogonal(&mut rng, n);
            let jitter = DMatrix::from_fn(n, n, |_, _| 0.05 * rng.gen_range(-1.0..1.0));
            let base = match &moments {
                Some(((q1_root, _), (_, q2_inv_root))) => q2_inv_root * o * q1_root,
                None => o,
            };
            &base + &base * jitter
        };
        let l = levenberg_marquardt(f2, &dirs, &targets, start, options.max_iterations, options.tol);
        let residual = if is_singular(&l) {
            f64::INFINITY
        } else {
            let a = equivalence_check(f1, f2, &l, &dirs).unwrap_or(f64::INFINITY);
            let b = equivalence_check(f1, f2, &l, &validation).unwrap_or(f64::INFINITY);
            a.max(b)
        };
        residuals.push(residual);
        if best.as_ref().is_none_or(|(_, r)| residual < *r) {
            best = Some((l, residual));
        }
        if residual < options.tol {
            break;
        }
    }
    let (matrix, residual) = best.expect("at least one restart");
    Ok(EquivalenceResult {
        matrix,
        residual,
        success: residual < options.tol,
        restarts_used: residuals.len(),
        restart_residuals: residuals,
    })
}

fn levenberg_marquardt(
    f2: &MinkowskiNorm,
    dirs: &[Vec<f64>],
    targets: &[f64],
    start: DMatrix<f64>,
    max_iterations: usize,
    tol: f64,
) -> DMatrix<f64> {
    let n = start.nrows();
    let p = n * n;
    // residuals and Jacobian at L
    let evaluate = |l: &DMatrix<f64>, with_jac: bool| -> Option<(DVector<f64>, DMatrix<f64>)> {
        let mut r = DVector::zeros(dirs.len());
        let mut jac = DMatrix::zeros(if with_jac { dirs.len() } else { 0 }, p);
        for (k, u) in dirs.iter().enumerate() {
            let lu = apply(l, u);
            if with_jac {
                let j = jet_eval(&**f2.gauge(), &lu, 1).ok()?;
                r[k] = targets[k] - j.value();
                for i in 0..n {
                    let di = j.partial(&[i]);
                    for c in 0..n {
                        jac[(k, i * n + c)] = -di * u[c];
                    }
                }
            } else {
                r[k] = targets[k] - f2.gauge().eval_real(&lu).ok()?;
            }
        }
        Some((r, jac))
    };
    let to_matrix = |theta: &DVector<f64>| DMatrix::from_row_slice(n, n, theta.as_slice());
    let mut theta = DVector::from_row_slice(start.transpose().as_slice());
    let Some((mut r, mut jac)) = evaluate(&start, true) else {
        return start;
    };
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..max_iterations {
        if r.amax() < 1e-3 * tol {
            break;
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut improved = false;
        while mu < 1e12 {
            let mut a = jtj.clone();
            for d in 0..p {
                a[(d, d)] += mu * (jtj[(d, d)] + 1e-12);
            }
            let Some(chol) = a.cholesky() else {
                mu *= 2.0;
                continue;
            };
            let step = chol.solve(&(-&jtr));
            let trial = &theta + &step;
            match evaluate(&to_matrix(&trial), false) {
                Some((rt, _)) if rt.norm_squared() < cost => {
                    theta = trial;
                    mu = (mu * 0.5).max(1e-15);
                    improved = true;
                    break;
                }
                _ => mu *= 2.0,
            }
        }
        if !improved {
            break;
        }
        match evaluate(&to_matrix(&theta), true) {
            Some((rn, jn)) => {
                let new_cost = rn.norm_squared();
                let stalled = cost - new_cost <= 1e-16 * cost;
                r = rn;
                jac = jn;
                cost = new_cost;
                if stalled {
                    break;
                }
            }
            None => break,
        }
    }
    to_matrix(&theta)
}

#[derive(Debug, Clone)]
pub struct QuadraticFit {
    pub matrix: DMatrix<f64>,
    /// `max_u |F²(u) − uᵀQu|`.
    pub max_residual: f64,
}

/// Least-squares fit `F²(u) ≈ uᵀ Q u` over symmetric `Q`.
pub fn quadratic_fit(f: &MinkowskiNorm, samples: &[Vec<f64>]) -> Result<QuadraticFit, EquivalenceError> {
    if samples.is_empty() {
        return Err(EquivalenceError::NoSamples);
    }
    let n = f.dimension();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let design = DMatrix::from_fn(samples.len(), pairs.len(), |k, c| {
        let (i, j) = pairs[c];
        let w = if i == j { 1.0 } else { 2.0 };
        w * samples[k][i] * samples[k][j]
    });
    let rhs = DVector::from_iterator(
        samples.len(),
        samples
            .iter()
            .map(|u| f.eval(u).map(|v| v * v))
            .collect::<Result<Vec<_>, _>>()?,
    );
    let svd = design.clone().svd(true, true);
    let coeffs = svd
        .solve(&rhs, 1e-12 * svd.singular_values.max())
        .expect("SVD computed with both factors");
    let mut q = DMatrix::zeros(n, n);
    for (c, &(i, j)) in pairs.iter().enumerate() {
        q[(i, j)] = coeffs[c];
        q[(j, i)] = coeffs[c];
    }
    let max_residual = (design * coeffs - rhs).amax();
    Ok(QuadraticFit {
        matrix: q,
        max_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlaschkeDeicke {
    /// `sup ‖η‖_ĝ = sup √(F² ηᵀ g⁻¹ η)`.
    pub sup_eta: f64,
    pub fit_residual: f64,
}

/// The Cartan form and the failure of `F²` to be a quadratic form: both vanish
/// exactly for inner-product norms.
pub fn blaschke_deicke_residual(
    f: &MinkowskiNorm,
    samples: &[Vec<f64>],
) -> Result<BlaschkeDeicke, EquivalenceError> {
    let mut sup_eta: f64 = 0.0;
    for u in samples {
        let t = f.tensors(u)?;
        let norm2 = t.f * t.f * (t.eta.transpose() * &t.g_inv * &t.eta)[(0, 0)];
        sup_eta = sup_eta.max(norm2.max(0.0).sqrt());
    }
    let fit = quadratic_fit(f, samples)?;
    Ok(BlaschkeDeicke {
        sup_eta,
        fit_residual: fit.max_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignReport {
    /// `max |ĝ1 − L*ĝ2|`; the comparison is meaningful only when this is small.
    pub metric_defect: f64,
    pub plus_defect: f64,
    pub minus_defect: f64,
    /// Per sample: `+1` if `Â1 = L*Â2`, `−1` if `Â1 = −L*Â2`, `0` if neither.
    pub signs: Vec<i8>,
    pub mixed: bool,
}

/// Compares `Â1` with `±L*Â2` sample by sample.
pub fn cartan_sign_report(
    f1: &MinkowskiNorm,
    f2: &MinkowskiNorm,
    l: &DMatrix<f64>,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<SignReport, EquivalenceError> {
    check_dims(f1, f2)?;
    let mut report = SignReport {
        metric_defect: 0.0,
        plus_defect: 0.0,
        minus_defect: 0.0,
        signs: Vec::with_capacity(samples.len()),
        mixed: false,
    };
    for u in samples {
        let t1 = f1.tensors(u)?;
        let t2 = f2.tensors(&apply(l, u))?;
        let g_pull = l.transpose() * t2.g_hat() * l;
        report.metric_defect = report.metric_defect.max((t1.g_hat() - g_pull).amax());
        let a1 = t1.a_hat();
        let a2 = t2.a_hat().pullback(l);
        let plus = a1.data.iter().zip(&a2.data).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let minus = a1.data.iter().zip(&a2.data).map(|(p, q)| (p + q).abs()).fold(0.0, f64::max);
        report.plus_defect = report.plus_defect.max(plus);
        report.minus_defect = report.minus_defect.max(minus);
        report.signs.push(if plus <= tol {
            1
        } else if minus <= tol {
            -1
        } else {
            0
        });
    }
    report.mixed = report.signs.contains(&1) && report.signs.contains(&-1);
    Ok(report)
}
