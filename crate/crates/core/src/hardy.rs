//! Hardy space H²(Ω) for Ω = B_{l₁} × … × B_{l_N}, modelled on monomial
//! coefficients.
//!
//! Monomials are orthogonal with
//! `‖z^α‖² = ∏_k (l_k − 1)! β_k! / (l_k − 1 + |β_k|)!`, where `β_k` is the
//! part of `α` living in block `k`. The reproducing kernel for this weight
//! family is `K_a(z) = ∏_k (1 − ⟨z_k, a_k⟩)^{−l_k}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::powerseries::{binomial_series, TruncatedSeries};

/// A point is treated as boundary once a block norm reaches `1 − INTERIOR_TOL`.
pub const INTERIOR_TOL: f64 = 1e-12;

/// Block structure `(l₁, …, l_N)` of a product of unit balls.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    blocks: Vec<usize>,
}

impl DomainSpec {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() || blocks.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "domain blocks must be a non-empty list of positive sizes, got {blocks:?}"
            )));
        }
        Ok(Self { blocks })
    }

    pub fn polydisk(d: usize) -> Result<Self> {
        Self::new(vec![1; d])
    }

    pub fn ball(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn is_polydisk(&self) -> bool {
        self.blocks.iter().all(|&l| l == 1)
    }

    /// Coordinate ranges of the blocks.
    pub fn block_ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.blocks.iter().scan(0usize, |start, &l| {
            let r = *start..*start + l;
            *start += l;
            Some(r)
        })
    }

    /// Euclidean norm of each block of `z`.
    pub fn block_norms(&self, z: &[Complex64]) -> Vec<f64> {
        self.block_ranges()
            .map(|r| z[r].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// The norm whose open unit ball is Ω: the largest block norm.
    pub fn omega_norm(&self, z: &[Complex64]) -> f64 {
        self.block_norms(z).into_iter().fold(0.0, f64::max)
    }

    pub fn is_interior(&self, z: &[Complex64]) -> bool {
        z.len() == self.dim() && self.omega_norm(z) < 1.0 - INTERIOR_TOL
    }

    fn check_point(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, domain has dimension {}",
                z.len(),
                self.dim()
            )));
        }
        if !self.is_interior(z) {
            return Err(Error::BoundaryPoint(format!(
                "{z:?} has Ω-norm {}",
                self.omega_norm(z)
            )));
        }
        Ok(())
    }
}

/// `d` complex coordinates, grouped by the blocks of a [`DomainSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<Complex64>);

impl Point {
    pub fn new(coords: Vec<Complex64>) -> Self {
        Self(coords)
    }

    pub fn real(coords: &[f64]) -> Self {
        Self(coords.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn origin(d: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); d])
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// `‖z^α‖²` in H²(Ω), via log-gamma.
pub fn monomial_norm_sq(dom: &DomainSpec, alpha: &MultiIndex) -> f64 {
    assert_eq!(alpha.dim(), dom.dim(), "multi-index dimension");
    let mut log = 0.0;
    for (r, &l) in dom.block_ranges().zip(dom.blocks()) {
        let part = &alpha.exps()[r];
        if l == 1 {
            // β!/|β|! with a single variable is exactly 1
            continue;
        }
        let total: u32 = part.iter().sum();
        log += ln_gamma(l as f64) - ln_gamma((l as u32 + total) as f64);
        log += part.iter().map(|&b| ln_gamma(b as f64 + 1.0)).sum::<f64>();
    }
    log.exp()
}

/// Hermitian pairing `⟨z, a⟩ = Σ z_i ā_i` restricted to one block.
fn block_pairing(z: &[Complex64], a: &[Complex64]) -> Complex64 {
    z.iter().zip(a).map(|(zi, ai)| zi * ai.conj()).sum()
}

/// `K_a(z)`.
pub fn kernel_value(dom: &DomainSpec, a: &Point, z: &Point) -> Result<Complex64> {
    dom.check_point(a.coords())?;
    dom.check_point(z.coords())?;
    Ok(kernel_value_unchecked(dom, a.coords(), z.coords()))
}

pub(crate) fn kernel_value_unchecked(dom: &DomainSpec, a: &[Complex64], z: &[Complex64]) -> Complex64 {
    dom.block_ranges()
        .zip(dom.blocks())
        .map(|(r, &l)| (Complex64::new(1.0, 0.0) - block_pairing(&z[r.clone()], &a[r])).powi(-(l as i32)))
        .product()
}

/// `‖K_a‖² = K_a(a) = ∏_k (1 − |a_k|²)^{−l_k}`.
pub fn kernel_norm_sq(dom: &DomainSpec, a: &Point) -> Result<f64> {
    dom.check_point(a.coords())?;
    Ok(dom
        .block_norms(a.coords())
        .iter()
        .zip(dom.blocks())
        .map(|(n, &l)| (1.0 - n * n).powi(-(l as i32)))
        .product())
}

/// Gram matrix of reproducing kernels.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    /// `G[i, j] = ⟨K_{p_j}, K_{p_i}⟩ = K_{p_j}(p_i)`.
    pub matrix: DMatrix<Complex64>,
    /// Set when two points coincide, which makes `G` singular.
    pub duplicate_points: bool,
}

pub fn gram_kernels(dom: &DomainSpec, pts: &[Point]) -> Result<GramMatrix> {
    for p in pts {
        dom.check_point(p.coords())?;
    }
    let n = pts.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| kernel_value_unchecked(dom, pts[j].coords(), pts[i].coords()));
    let duplicate_points = (0..n).any(|i| (i + 1..n).any(|j| pts[i] == pts[j]));
    if duplicate_points {
        log::warn!("gram_kernels: duplicate points, Gram matrix is singular");
    }
    Ok(GramMatrix { matrix, duplicate_points })
}

/// `⟨f, g⟩` for polynomials given by coefficients over the same layout.
pub fn inner_product(dom: &DomainSpec, f: &TruncatedSeries, g: &TruncatedSeries) -> Result<Complex64> {
    if f.dim() != dom.dim() || g.dim() != dom.dim() || f.cap() != g.cap() {
        return Err(Error::SeriesMismatch("inner product operands must share dim and cap".into()));
    }
    Ok(f.layout()
        .indices()
        .iter()
        .zip(f.coeffs().iter().zip(g.coeffs()))
        .map(|(a, (x, y))| x * y.conj() * monomial_norm_sq(dom, a))
        .sum())
}

/// Taylor expansion of `K_a` up to degree `cap`, built from the closed
/// form: each block factor `(1 − s)^{−l}` with `s = ⟨z_k, a_k⟩` is a
/// binomial series substituted with the linear form `s`.
pub fn kernel_series(dom: &DomainSpec, a: &Point, cap: u32) -> Result<TruncatedSeries> {
    dom.check_point(a.coords())?;
    let d = dom.dim();
    let mut acc = TruncatedSeries::one(d, cap)?;
    for (r, &l) in dom.block_ranges().zip(dom.blocks()) {
        let mut w = vec![Complex64::new(0.0, 0.0); d];
        for i in r {
            w[i] = a.coords()[i].conj();
        }
        let s = TruncatedSeries::linear(cap, &w)?;
        let outer = binomial_series(-(l as f64), -1.0, cap)?;
        acc = acc.mul(&outer.substitute_into(&s)?)?;
    }
    Ok(acc)
}
