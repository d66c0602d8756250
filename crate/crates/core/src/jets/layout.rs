use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

/// Exponent vector of a monomial `y1^a1 * ... * yd^ad`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(exponents: &[usize]) -> Self {
        MultiIndex(exponents.iter().map(|&e| e as u8).collect())
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// Unit index `e_var`.
    pub fn unit(dim: usize, var: usize) -> Self {
        let mut e = vec![0u8; dim];
        e[var] = 1;
        MultiIndex(e)
    }

    /// Builds the index of `∂^k / ∂v1 ... ∂vk` from a list of variable positions
    /// (repeats allowed).
    pub fn from_vars(dim: usize, vars: &[usize]) -> Self {
        let mut e = vec![0u8; dim];
        for &v in vars {
            e[v] += 1;
        }
        MultiIndex(e)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn exponents(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&e| e as usize)
    }

    pub fn get(&self, var: usize) -> usize {
        self.0[var] as usize
    }

    /// `α! = α1! ... αd!`
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| (1..=e as u32).map(f64::from).product::<f64>())
            .product()
    }

    pub(crate) fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Coefficient table shape for jets of a given dimension and order.
///
/// Monomials are stored in graded lexicographic order: by total degree, then
/// lexicographically with larger leading exponents first. A table of order
/// `k` is therefore a prefix of any table of order `K > k` in the same
/// dimension, so truncation is a slice.
pub(crate) struct Layout {
    pub(crate) dim: usize,
    pub(crate) order: usize,
    pub(crate) monomials: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    /// `degree_start[d]` is the offset of the first monomial of degree `d`.
    degree_start: Vec<usize>,
    /// For each `a`: the pairs `(b, c)` with `a + b = c` inside the table.
    pub(crate) products: Vec<Vec<(u32, u32)>>,
    /// For each variable: `(src, dst, factor)` realizing `∂/∂v` into the
    /// table of order `order - 1`.
    pub(crate) derivs: Vec<Vec<(u32, u32, f64)>>,
}

impl Layout {
    fn build(dim: usize, order: usize) -> Layout {
        let mut monomials = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for d in 0..=order {
            degree_start.push(monomials.len());
            let mut buf = vec![0u8; dim];
            push_degree(&mut monomials, &mut buf, 0, d);
        }
        degree_start.push(monomials.len());

        let lookup: HashMap<MultiIndex, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();

        let mut products = Vec::with_capacity(monomials.len());
        for a in &monomials {
            let room = order - a.degree();
            let end = degree_start[room + 1];
            let row = monomials[..end]
                .iter()
                .enumerate()
                .map(|(bi, b)| (bi as u32, lookup[&a.add(b)] as u32))
                .collect();
            products.push(row);
        }

        let mut derivs = Vec::with_capacity(dim);
        for var in 0..dim {
            let mut row = Vec::new();
            if order > 0 {
                let lower = degree_start[order];
                for (dst, m) in monomials[..lower].iter().enumerate() {
                    let mut up = m.clone();
                    up.0[var] += 1;
                    let src = lookup[&up];
                    row.push((src as u32, dst as u32, f64::from(up.0[var])));
                }
            }
            derivs.push(row);
        }

        Layout {
            dim,
            order,
            monomials,
            lookup,
            degree_start,
            products,
            derivs,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.monomials.len()
    }

    pub(crate) fn index_of(&self, m: &MultiIndex) -> Option<usize> {
        self.lookup.get(m).copied()
    }

    /// Number of coefficients of degree `<= order`.
    #[cfg(test)]
    pub(crate) fn prefix_len(&self, order: usize) -> usize {
        self.degree_start[order.min(self.order) + 1]
    }

    pub(crate) fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }
}

fn push_degree(out: &mut Vec<MultiIndex>, buf: &mut [u8], pos: usize, remaining: usize) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining as u8;
        out.push(MultiIndex(buf.to_vec()));
        buf[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        buf[pos] = e as u8;
        push_degree(out, buf, pos + 1, remaining - e);
    }
    buf[pos] = 0;
}

type LayoutCache = Mutex<HashMap<(usize, usize), Arc<Layout>>>;

/// Shared, lazily-built layout for `(dim, order)`.
pub(crate) fn layout(dim: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<LayoutCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("layout cache poisoned");
    guard
        .entry((dim, order))
        .or_insert_with(|| Arc::new(Layout::build(dim, order)))
        .clone()
}
