//! Norm and metric definitions shared by the config file and the
//! command-line spec strings, and their construction.

use std::fmt;

use finsler_core::expr::{parse, GaugeExpr};
use finsler_core::finsler::{Domain, FinslerMetric, Volume};
use finsler_core::minkowski::MinkowskiNorm;
use serde::{Deserialize, Serialize};

/// Dimension used when a catalog entry does not fix one.
pub const DEFAULT_DIMENSION: usize = 3;
/// Largest accepted dimension. Curvature jets carry `2n` variables, so the
/// cost of a single evaluation grows steeply with `n`.
pub const MAX_DIMENSION: usize = 8;

/// A construction failure, located by a key relative to the definition.
#[derive(Debug, Clone, PartialEq)]
pub struct DefError {
    pub key: String,
    pub message: String,
}

impl DefError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        DefError {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for DefError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainDef {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VolumeDef {
    Coordinate,
    /// Auxiliary Riemannian metric, one expression in `x1..xn` per entry.
    RiemannianAux { a: Vec<Vec<String>> },
    /// Density `σ(x)` as an expression in `x1..xn`.
    Custom { sigma: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<VolumeDef>,
}

/// A constructed norm with a stable display id.
#[derive(Debug, Clone)]
pub struct NamedNorm {
    pub id: String,
    pub norm: MinkowskiNorm,
}

#[derive(Debug, Clone)]
pub struct NamedMetric {
    pub id: String,
    pub metric: FinslerMetric,
}

fn fmt_params(params: &[f64]) -> String {
    params.iter().map(|p| format!("{p}")).collect::<Vec<_>>().join(",")
}

pub fn norm_id(norm: &MinkowskiNorm) -> String {
    let base = format!("{}/n={}", norm.label(), norm.dimension());
    if norm.params().is_empty() {
        base
    } else {
        format!("{base}/p={}", fmt_params(norm.params()))
    }
}

pub fn metric_id(m: &FinslerMetric) -> String {
    let base = format!("{}/n={}", m.label(), m.dimension());
    if m.params().is_empty() {
        base
    } else {
        format!("{base}/p={}", fmt_params(m.params()))
    }
}

/// Dimension implied by a catalog entry's parameters, if any.
fn implied_dimension(name: &str, params: &[f64]) -> Option<usize> {
    match name {
        "randers" | "randers-hyperbolic" if !params.is_empty() => Some(params.len()),
        "linear-image" if !params.is_empty() => {
            let n = (params.len() as f64).sqrt().round() as usize;
            (n * n == params.len()).then_some(n)
        }
        "randers-berwald-product" => Some(3),
        _ => None,
    }
}

fn source<'a>(name: &'a Option<String>, expr: &'a Option<String>) -> Result<Source<'a>, DefError> {
    match (name, expr) {
        (Some(n), None) => Ok(Source::Name(n)),
        (None, Some(e)) => Ok(Source::Expr(e)),
        (Some(_), Some(_)) => Err(DefError::new("expr", "give either 'name' or 'expr', not both")),
        (None, None) => Err(DefError::new("name", "missing 'name' or 'expr'")),
    }
}

enum Source<'a> {
    Name(&'a str),
    Expr(&'a str),
}

fn resolve_dimension(dimension: Option<usize>, src: &Source, params: &[f64]) -> Result<usize, DefError> {
    let n = match (dimension, src) {
        (Some(n), _) => n,
        (None, Source::Name(name)) => implied_dimension(name, params).unwrap_or(DEFAULT_DIMENSION),
        (None, Source::Expr(_)) => return Err(DefError::new("dimension", "required for 'expr' definitions")),
    };
    if !(2..=MAX_DIMENSION).contains(&n) {
        return Err(DefError::new(
            "dimension",
            format!("must be between 2 and {MAX_DIMENSION}, got {n}"),
        ));
    }
    Ok(n)
}

fn parse_expr(key: &str, text: &str, n: usize) -> Result<GaugeExpr, DefError> {
    parse(text, n).map_err(|e| DefError::new(key, format!("{e} in '{text}'")))
}

impl NormDef {
    pub fn build(&self) -> Result<NamedNorm, DefError> {
        let src = source(&self.name, &self.expr)?;
        let n = resolve_dimension(self.dimension, &src, &self.params)?;
        let norm = match src {
            Source::Name(name) => {
                MinkowskiNorm::catalog(name, n, &self.params).map_err(|e| match e {
                    finsler_core::minkowski::NormError::UnknownName(_) => {
                        DefError::new("name", format!("unknown norm '{name}'"))
                    }
                    e => DefError::new("params", e.to_string()),
                })?
            }
            Source::Expr(text) => {
                if !self.params.is_empty() {
                    return Err(DefError::new("params", "not used by 'expr' definitions"));
                }
                let e = parse_expr("expr", text, n)?;
                MinkowskiNorm::from_expr(e).map_err(|e| DefError::new("expr", e.to_string()))?
            }
        };
        Ok(NamedNorm {
            id: norm_id(&norm),
            norm,
        })
    }
}

impl DomainDef {
    fn build(&self, n: usize) -> Result<Domain, DefError> {
        if self.lo.len() != n || self.hi.len() != n {
            return Err(DefError::new("domain", format!("'lo' and 'hi' need {n} entries")));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(DefError::new("domain", "needs finite lo < hi in every coordinate"));
        }
        Ok(Domain {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
        })
    }
}

impl VolumeDef {
    fn build(&self, n: usize) -> Result<Volume, DefError> {
        match self {
            VolumeDef::Coordinate => Ok(Volume::Coordinate),
            VolumeDef::RiemannianAux { a } => {
                if a.len() != n || a.iter().any(|row| row.len() != n) {
                    return Err(DefError::new("volume.a", format!("needs an {n} x {n} array")));
                }
                let mut entries = Vec::with_capacity(n * n);
                for (i, row) in a.iter().enumerate() {
                    for (j, text) in row.iter().enumerate() {
                        let e = parse_expr(&format!("volume.a[{i}][{j}]"), text, n)?;
                        entries.push(e);
                    }
                }
                Ok(Volume::riemannian_from_exprs(entries))
            }
            VolumeDef::Custom { sigma } => Ok(Volume::custom_from_expr(parse_expr("volume.sigma", sigma, n)?)),
        }
    }
}

impl MetricDef {
    pub fn build(&self) -> Result<NamedMetric, DefError> {
        let src = source(&self.name, &self.expr)?;
        let n = resolve_dimension(self.dimension, &src, &self.params)?;
        let domain = self.domain.as_ref().map(|d| d.build(n)).transpose()?;
        let volume = self.volume.as_ref().map(|v| v.build(n)).transpose()?;
        let metric = match src {
            Source::Name(name) => {
                let mut m = FinslerMetric::catalog(name, n, &self.params).map_err(|e| match e {
                    finsler_core::finsler::MetricError::UnknownName(_) => {
                        DefError::new("name", format!("unknown metric '{name}'"))
                    }
                    e => DefError::new("params", e.to_string()),
                })?;
                if let Some(d) = domain {
                    m = m.with_domain(d).map_err(|e| DefError::new("domain", e.to_string()))?;
                }
                if let Some(v) = volume {
                    m = m.with_volume(v).map_err(|e| DefError::new("volume", e.to_string()))?;
                }
                m
            }
            Source::Expr(text) => {
                if !self.params.is_empty() {
                    return Err(DefError::new("params", "not used by 'expr' definitions"));
                }
                let e = parse_expr("expr", text, n)?;
                let domain = domain.unwrap_or_else(|| Domain::cube(n, 1.0));
                FinslerMetric::from_expr(e, domain, volume.unwrap_or(Volume::Coordinate))
                    .map_err(|e| DefError::new("expr", e.to_string()))?
            }
        };
        Ok(NamedMetric {
            id: metric_id(&metric),
            metric,
        })
    }
}

/// `(name, expr, params)` of a command-line spec.
type SpecParts = (Option<String>, Option<String>, Vec<f64>);

/// Splits a command-line spec: `NAME`, `NAME:p1,p2,...` or `expr:TEXT`.
fn split_spec(spec: &str) -> Result<SpecParts, String> {
    let spec = spec.trim();
    if let Some(text) = spec.strip_prefix("expr:") {
        return Ok((None, Some(text.to_string()), Vec::new()));
    }
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n, Some(r)),
        None => (spec, None),
    };
    if name.is_empty() {
        return Err(format!("empty name in spec '{spec}'"));
    }
    let params = match rest {
        None => Vec::new(),
        Some(r) => parse_list(r)?,
    };
    Ok((Some(name.to_string()), None, params))
}

/// Comma-separated reals.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{s}' is not a finite number"))
        })
        .collect()
}

pub fn norm_from_spec(spec: &str, dimension: Option<usize>) -> Result<NormDef, String> {
    let (name, expr, params) = split_spec(spec)?;
    Ok(NormDef {
        name,
        expr,
        dimension,
        params,
    })
}

pub fn metric_from_spec(spec: &str, dimension: Option<usize>) -> Result<MetricDef, String> {
    let (name, expr, params) = split_spec(spec)?;
    Ok(MetricDef {
        name,
        expr,
        dimension,
        params,
        domain: None,
        volume: None,
    })
}

fn catalog_norm(name: &str, n: usize, params: &[f64]) -> NamedNorm {
    let norm = MinkowskiNorm::catalog(name, n, params).expect("built-in norm parameters are valid");
    NamedNorm {
        id: norm_id(&norm),
        norm,
    }
}

fn catalog_metric(name: &str, n: usize, params: &[f64]) -> NamedMetric {
    let metric = FinslerMetric::catalog(name, n, params).expect("built-in metric parameters are valid");
    NamedMetric {
        id: metric_id(&metric),
        metric,
    }
}

const SAMPLE_IMAGE: [f64; 9] = [2.0, 0.3, 0.0, 0.0, 1.0, 0.2, 0.1, 0.0, 1.5];

/// One representative of every norm family.
pub fn default_norms() -> Vec<NamedNorm> {
    vec![
        catalog_norm("euclidean", 3, &[]),
        catalog_norm("randers", 3, &[0.3, -0.2, 0.1]),
        catalog_norm("quartic-smoothed", 3, &[0.1]),
        catalog_norm("linear-image", 3, &SAMPLE_IMAGE),
    ]
}

/// Randers norms, the semi-C-reducible family of the catalog.
pub fn default_semi_c_norms() -> Vec<NamedNorm> {
    vec![
        catalog_norm("randers", 3, &[0.5, 0.0, 0.0]),
        catalog_norm("randers", 3, &[0.3, -0.2, 0.1]),
        catalog_norm("randers", 4, &[0.1, 0.2, -0.3, 0.25]),
    ]
}

/// The full metric catalog, with the norm families as locally Minkowski metrics.
pub fn default_metrics() -> Vec<NamedMetric> {
    vec![
        catalog_metric("euclidean", 3, &[]),
        catalog_metric("riemannian-hyperbolic", 2, &[]),
        catalog_metric("riemannian-hyperbolic", 3, &[]),
        catalog_metric("randers-hyperbolic", 2, &[]),
        catalog_metric("randers-hyperbolic", 3, &[0.2, 0.1, -0.1]),
        catalog_metric("randers-berwald-product", 3, &[]),
        catalog_metric("randers", 3, &[0.3, -0.2, 0.1]),
        catalog_metric("quartic-smoothed", 3, &[0.1]),
        catalog_metric("linear-image", 3, &SAMPLE_IMAGE),
    ]
}
