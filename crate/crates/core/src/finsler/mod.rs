//! Finsler metrics on a single coordinate chart and their curvatures.

mod bundle;
mod classify;
mod metrics;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{BaseField, BundleField, GaugeExpr};
use crate::jets::{EvalError, Jet, ScalarField};
use crate::minkowski::{check_minkowski, MinkowskiNorm, NormError, CATALOG as NORM_CATALOG};
use crate::sampling;
use crate::tensor::jet_inverse_det;
use metrics::{FrozenBase, LocallyMinkowski, ProductRanders, RandersHyperbolic, RiemannHyperbolic};

pub use bundle::{
    berwald_curvature, chern_coefficients, chern_hv_curvature, connection_with_vertical_derivative,
    curvature_bundle, distortion, horizontal_dtau, landsberg_curvature, mean_berwald,
    mean_landsberg, nonlinear_connection, s_curvature, spray, CurvatureBundle,
};
pub use classify::{classify, ClassificationReport, GridSpec, Tolerances, Witness, UNICORN};

/// Built-in metrics with base dependence. Every norm catalog name is also
/// accepted and yields a locally Minkowski metric.
pub const CATALOG: [&str; 4] = [
    "euclidean",
    "riemannian-hyperbolic",
    "randers-hyperbolic",
    "randers-berwald-product",
];

/// Box-margin fraction that curves and sample points keep from the chart boundary.
pub const DOMAIN_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("unknown metric '{0}'")]
    UnknownName(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("point {x:?} lies outside the chart domain")]
    OutsideDomain { x: Vec<f64> },
    #[error("the zero vector has no tangent data")]
    ZeroVector,
    #[error("fundamental tensor is not positive definite at x = {x:?}, y = {y:?}")]
    NotPositive { x: Vec<f64>, y: Vec<f64> },
    #[error("fiber norm at x = {x:?} is invalid: {source}")]
    Fiber { x: Vec<f64>, source: NormError },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Axis-aligned chart box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn cube(n: usize, half_width: f64) -> Self {
        Domain {
            lo: vec![-half_width; n],
            hi: vec![half_width; n],
        }
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len()
            && x.iter().zip(&self.lo).zip(&self.hi).all(|((c, l), h)| l <= c && c <= h)
    }

    /// The box shrunk by `fraction` of its width on every side.
    pub fn shrunk(&self, fraction: f64) -> Domain {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| {
                let m = fraction * (h - l);
                (l + m, h - m)
            })
            .unzip();
        Domain { lo, hi }
    }

    pub fn interior(&self) -> Domain {
        self.shrunk(DOMAIN_MARGIN)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }
}

/// The volume form `σ(x) dx¹…dxⁿ` entering the distortion.
#[derive(Clone)]
pub enum Volume {
    /// `σ ≡ 1`.
    Coordinate,
    /// `σ = √det a` for an auxiliary Riemannian metric given entrywise, row-major.
    RiemannianAux(Vec<Arc<dyn ScalarField>>),
    Custom(Arc<dyn ScalarField>),
}

impl fmt::Debug for Volume {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Volume::Coordinate => f.write_str("Coordinate"),
            Volume::RiemannianAux(_) => f.write_str("RiemannianAux"),
            Volume::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl Volume {
    pub fn kind(&self) -> &'static str {
        match self {
            Volume::Coordinate => "coordinate",
            Volume::RiemannianAux(_) => "riemannian-aux",
            Volume::Custom(_) => "custom",
        }
    }

    /// Auxiliary metric entries from text, row-major over `x1..xn`.
    pub fn riemannian_from_exprs(entries: Vec<GaugeExpr>) -> Self {
        Volume::RiemannianAux(
            entries
                .into_iter()
                .map(|e| Arc::new(BaseField(e)) as Arc<dyn ScalarField>)
                .collect(),
        )
    }

    pub fn custom_from_expr(e: GaugeExpr) -> Self {
        Volume::Custom(Arc::new(BaseField(e)))
    }

    /// `ln σ` evaluated on jets of the base coordinates.
    pub fn log_sigma(&self, x: &[Jet]) -> Result<Jet, EvalError> {
        let t = &x[0];
        match self {
            Volume::Coordinate => Ok(Jet::constant(t.dimension(), t.order(), 0.0)),
            Volume::RiemannianAux(entries) => {
                let n = x.len();
                let a: Vec<Vec<Jet>> = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| entries[i * n + j].eval_jet(x))
                            .collect::<Result<_, _>>()
                    })
                    .collect::<Result<_, _>>()?;
                let (_, det) = jet_inverse_det(&a)?;
                Ok(det.ln()? * 0.5)
            }
            Volume::Custom(sigma) => sigma.eval_jet(x)?.ln(),
        }
    }

    pub fn sigma(&self, x: &[f64]) -> Result<f64, EvalError> {
        let jets: Vec<Jet> = Jet::variables(x, 0);
        Ok(self.log_sigma(&jets)?.value().exp())
    }
}

/// A Finsler gauge `F(x, y)` on a chart box, with a chosen volume form.
#[derive(Clone)]
pub struct FinslerMetric {
    label: String,
    params: Vec<f64>,
    n: usize,
    domain: Domain,
    /// Field of `2n` variables, `(x1..xn, y1..yn)`.
    gauge: Arc<dyn ScalarField>,
    volume: Volume,
}

impl fmt::Debug for FinslerMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FinslerMetric")
            .field("label", &self.label)
            .field("dimension", &self.n)
            .field("params", &self.params)
            .field("domain", &self.domain)
            .field("volume", &self.volume)
            .finish()
    }
}

impl FinslerMetric {
    /// Builds a metric and checks the fiber norms at the center and corners
    /// of the interior box.
    pub fn new(
        label: impl Into<String>,
        params: Vec<f64>,
        gauge: Arc<dyn ScalarField>,
        domain: Domain,
        volume: Volume,
    ) -> Result<Self, MetricError> {
        let n = domain.dimension();
        if n < 2 || gauge.dimension() != 2 * n {
            return Err(MetricError::InvalidParams(format!(
                "gauge has {} variables, expected 2n with n = {n} >= 2",
                gauge.dimension()
            )));
        }
        if domain.lo.iter().zip(&domain.hi).any(|(l, h)| !(l < h)) {
            return Err(MetricError::InvalidParams("empty chart domain".into()));
        }
        if let Volume::RiemannianAux(entries) = &volume {
            if entries.len() != n * n {
                return Err(MetricError::InvalidParams(format!(
                    "auxiliary metric needs {} entries, got {}",
                    n * n,
                    entries.len()
                )));
            }
        }
        let metric = FinslerMetric {
            label: label.into(),
            params,
            n,
            domain,
            gauge,
            volume,
        };
        metric.validate(&metric.check_points(), 64)?;
        Ok(metric)
    }

    /// Runs the Minkowski checks on the fiber over each point and checks the
    /// volume density is positive there.
    pub fn validate(&self, points: &[Vec<f64>], directions: usize) -> Result<(), MetricError> {
        let dirs = sampling::directions(self.n, directions, 0x0f1b);
        for x in points {
            let norm = self.fiber_norm(x)?;
            let report = check_minkowski(&norm, &dirs, 1e-9);
            if !report.valid {
                return Err(MetricError::Fiber {
                    x: x.clone(),
                    source: NormError::NotConvex {
                        min_eigenvalue: report.min_eigenvalue,
                        witness: report.witness,
                    },
                });
            }
            let sigma = self.volume.sigma(x)?;
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(MetricError::InvalidParams(format!(
                    "volume density {sigma} at {x:?} is not positive"
                )));
            }
        }
        Ok(())
    }

    /// Center plus up to 16 corners of the interior box.
    fn check_points(&self) -> Vec<Vec<f64>> {
        let inner = self.domain.interior();
        let mut pts = vec![inner.center()];
        let corners = 1usize << self.n.min(4);
        for mask in 0..corners {
            pts.push(
                (0..self.n)
                    .map(|i| {
                        if i < 4 && mask >> i & 1 == 1 {
                            inner.hi[i]
                        } else if i < 4 {
                            inner.lo[i]
                        } else {
                            inner.center()[i]
                        }
                    })
                    .collect(),
            );
        }
        pts
    }

    /// Built-in metrics on the default domain `[−1, 1]^n`.
    ///
    /// * `euclidean`: `|y|`.
    /// * `riemannian-hyperbolic`: `√((y¹)² + e^{2x¹} Σ_{i≥2} (yⁱ)²)`.
    /// * `randers-hyperbolic`: the above plus `⟨b, y⟩`; `params = b`,
    ///   default `(0.3, 0, …)`.
    /// * `randers-berwald-product` (`n = 3`): `√((y¹)² + (y²)² + e^{2x²}(y³)²) + c y¹`;
    ///   `params = [c]`, default 0.3.
    /// * any norm catalog name: the norm, independent of `x`.
    ///
    /// Metrics with a natural auxiliary Riemannian metric default to its
    /// volume; the rest to the coordinate volume.
    pub fn catalog(name: &str, n: usize, params: &[f64]) -> Result<Self, MetricError> {
        let domain = Domain::cube(n, 1.0);
        if n < 2 {
            return Err(MetricError::InvalidParams(format!("dimension {n} < 2")));
        }
        match name {
            "euclidean" => {
                expect_len(name, params, &[0])?;
                let norm = MinkowskiNorm::euclidean(n);
                Self::new(
                    name,
                    vec![],
                    Arc::new(LocallyMinkowski::new(norm)),
                    domain,
                    Volume::Coordinate,
                )
            }
            "riemannian-hyperbolic" => {
                expect_len(name, params, &[0])?;
                Self::new(
                    name,
                    vec![],
                    Arc::new(RiemannHyperbolic { n }),
                    domain,
                    hyperbolic_volume(n),
                )
            }
            "randers-hyperbolic" => {
                expect_len(name, params, &[0, n])?;
                let b = if params.is_empty() {
                    let mut b = vec![0.0; n];
                    b[0] = 0.3;
                    b
                } else {
                    params.to_vec()
                };
                // |β|_α = √(b₁² + e^{−2x¹} Σ_{i≥2} b_i²) is largest at the lowest x¹
                let worst = b[0] * b[0] + (2.0f64).exp() * b[1..].iter().map(|c| c * c).sum::<f64>();
                if !(worst.sqrt() < 1.0) {
                    return Err(MetricError::InvalidParams(format!(
                        "randers-hyperbolic drift {b:?} reaches α-length {} >= 1 on the domain",
                        worst.sqrt()
                    )));
                }
                Self::new(
                    name,
                    b.clone(),
                    Arc::new(RandersHyperbolic { b }),
                    domain,
                    hyperbolic_volume(n),
                )
            }
            "randers-berwald-product" => {
                if n != 3 {
                    return Err(MetricError::InvalidParams(
                        "randers-berwald-product is defined for n = 3".into(),
                    ));
                }
                expect_len(name, params, &[0, 1])?;
                let c = params.first().copied().unwrap_or(0.3);
                if !(c.abs() < 1.0) {
                    return Err(MetricError::InvalidParams(format!(
                        "randers-berwald-product needs |c| < 1, got {c}"
                    )));
                }
                let volume = Volume::Custom(Arc::new(metrics::ExpCoordinate {
                    n,
                    index: 1,
                    rate: 1.0,
                }));
                Self::new(name, vec![c], Arc::new(ProductRanders { c }), domain, volume)
            }
            other if NORM_CATALOG.contains(&other) => {
                let norm = MinkowskiNorm::catalog(other, n, params).map_err(|e| match e {
                    NormError::InvalidParams(m) => MetricError::InvalidParams(m),
                    e => MetricError::InvalidParams(e.to_string()),
                })?;
                Self::locally_minkowski(norm, domain)
            }
            other => Err(MetricError::UnknownName(other.to_string())),
        }
    }

    pub fn locally_minkowski(norm: MinkowskiNorm, domain: Domain) -> Result<Self, MetricError> {
        let label = format!("locally-minkowski({})", norm.label());
        let params = norm.params().to_vec();
        Self::new(
            label,
            params,
            Arc::new(LocallyMinkowski::new(norm)),
            domain,
            Volume::Coordinate,
        )
    }

    /// Metric from a text gauge in `x1..xn, y1..yn`.
    pub fn from_expr(expr: GaugeExpr, domain: Domain, volume: Volume) -> Result<Self, MetricError> {
        if expr.dimension() != domain.dimension() {
            return Err(MetricError::InvalidParams(format!(
                "expression dimension {} differs from domain dimension {}",
                expr.dimension(),
                domain.dimension()
            )));
        }
        let label = expr.to_string();
        Self::new(label, vec![], Arc::new(BundleField(expr)), domain, volume)
    }

    pub fn with_volume(mut self, volume: Volume) -> Result<Self, MetricError> {
        self.volume = volume;
        self.validate(&self.check_points(), 1)?;
        Ok(self)
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self, MetricError> {
        if domain.dimension() != self.n {
            return Err(MetricError::InvalidParams("domain dimension mismatch".into()));
        }
        self.domain = domain;
        self.validate(&self.check_points(), 64)?;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn gauge(&self) -> &Arc<dyn ScalarField> {
        &self.gauge
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
        self.check_point(x, y)?;
        let mut p = x.to_vec();
        p.extend_from_slice(y);
        Ok(self.gauge.eval_real(&p)?)
    }

    /// The Minkowski norm `F(x, ·)` on the fiber over `x`.
    pub fn fiber_norm(&self, x: &[f64]) -> Result<MinkowskiNorm, MetricError> {
        self.check_base(x)?;
        let frozen = FrozenBase {
            gauge: self.gauge.clone(),
            x: x.to_vec(),
        };
        MinkowskiNorm::new(format!("{}@{x:?}", self.label), vec![], Arc::new(frozen))
            .map_err(|source| MetricError::Fiber { x: x.to_vec(), source })
    }

    pub(crate) fn check_base(&self, x: &[f64]) -> Result<(), MetricError> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(MetricError::OutsideDomain { x: x.to_vec() })
        }
    }

    pub(crate) fn check_point(&self, x: &[f64], y: &[f64]) -> Result<(), MetricError> {
        self.check_base(x)?;
        if y.len() != self.n {
            return Err(MetricError::InvalidParams(format!(
                "fiber vector has {} components, expected {}",
                y.len(),
                self.n
            )));
        }
        if y.iter().all(|&c| c == 0.0) {
            return Err(MetricError::ZeroVector);
        }
        Ok(())
    }
}

fn hyperbolic_volume(n: usize) -> Volume {
    // √det diag(1, e^{2x¹}, …) = e^{(n−1)x¹}
    Volume::Custom(Arc::new(metrics::ExpCoordinate {
        n,
        index: 0,
        rate: (n - 1) as f64,
    }))
}

fn expect_len(name: &str, params: &[f64], allowed: &[usize]) -> Result<(), MetricError> {
    if allowed.contains(&params.len()) {
        Ok(())
    } else {
        Err(MetricError::InvalidParams(format!(
            "{name} takes {allowed:?} parameters, got {}",
            params.len()
        )))
    }
}

#[cfg(test)]
mod tests;
