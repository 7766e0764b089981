//! Multi-indices α ∈ ℕ^d and their canonical graded ordering.
//!
//! Every dense coefficient array in the crate is indexed by the rank of a
//! multi-index in *graded lexicographic* order: ascending total degree, and
//! within one degree the exponent tuples in decreasing lexicographic order,
//! so for `d = 2` the order starts `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)`.
//! Homogeneous layers are contiguous, so "all indices of degree ≤ k" is
//! always a prefix of length [`count_upto`]`(d, k)`.

use std::fmt;

use crate::error::{Error, Result};

/// Exponent tuple with its cached total degree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exps: Vec<u32>,
    degree: u32,
}

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Result<Self> {
        if exps.is_empty() {
            return Err(Error::InvalidArgument("multi-index dimension must be >= 1".into()));
        }
        let degree = exps
            .iter()
            .try_fold(0u32, |acc, &e| acc.checked_add(e))
            .ok_or(Error::Overflow("multi-index degree"))?;
        Ok(Self { exps, degree })
    }

    pub fn zero(dim: usize) -> Self {
        Self { exps: vec![0; dim], degree: 0 }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn get(&self, i: usize) -> u32 {
        self.exps[i]
    }

    /// Index of the first non-zero exponent, `None` for the zero index.
    pub fn first_nonzero(&self) -> Option<usize> {
        self.exps.iter().position(|&e| e > 0)
    }

    /// `self − e_i`; panics if the `i`-th exponent is zero.
    pub fn decrement(&self, i: usize) -> Self {
        let mut exps = self.exps.clone();
        exps[i] -= 1;
        Self { exps, degree: self.degree - 1 }
    }

    /// z^α for a point z.
    pub fn monomial(&self, z: &[num_complex::Complex64]) -> num_complex::Complex64 {
        self.exps
            .iter()
            .zip(z)
            .map(|(&e, &zi)| zi.powu(e))
            .product()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.exps.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::InvalidArgument("dimension d must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Exact binomial coefficient `C(n, k)`, with overflow reported.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        // acc * (n - k + i) / i stays exact: acc is C(n-k+i-1, i-1).
        acc = acc
            .checked_mul(n as u128 - k as u128 + i)
            .ok_or(Error::Overflow("binomial coefficient"))?
            / i;
        if acc > u64::MAX as u128 {
            return Err(Error::Overflow("binomial coefficient"));
        }
    }
    Ok(acc as u64)
}

/// Number of multi-indices in ℕ^d with `|α| ≤ p`, i.e. `C(d + p, d)`.
pub fn count_upto(d: usize, p: u64) -> Result<u64> {
    check_dim(d)?;
    let n = (d as u64).checked_add(p).ok_or(Error::Overflow("count_upto"))?;
    binomial(n, d as u64)
}

/// Number of multi-indices in ℕ^d with `|α| = k`, i.e. `C(k + d − 1, d − 1)`.
pub fn count_exact(d: usize, k: u64) -> Result<u64> {
    check_dim(d)?;
    let n = (d as u64 - 1).checked_add(k).ok_or(Error::Overflow("count_exact"))?;
    binomial(n, d as u64 - 1)
}

fn push_layer(d: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == d {
        prefix.push(k);
        out.push(MultiIndex { exps: prefix.clone(), degree: 0 });
        prefix.pop();
        return;
    }
    for first in (0..=k).rev() {
        prefix.push(first);
        push_layer(d, k - first, prefix, out);
        prefix.pop();
    }
}

/// All `α ∈ ℕ^d` of total degree exactly `k`, in canonical order.
pub fn enumerate_exact(d: usize, k: u32) -> Result<Vec<MultiIndex>> {
    let len = addressable(count_exact(d, k as u64)?)?;
    let mut out = Vec::with_capacity(len);
    push_layer(d, k, &mut Vec::with_capacity(d), &mut out);
    for a in &mut out {
        a.degree = k;
    }
    Ok(out)
}

/// All `α ∈ ℕ^d` with `|α| ≤ p`, in canonical graded order.
pub fn enumerate_upto(d: usize, p: u32) -> Result<Vec<MultiIndex>> {
    let len = addressable(count_upto(d, p as u64)?)?;
    let mut out = Vec::with_capacity(len);
    let mut prefix = Vec::with_capacity(d);
    for k in 0..=p {
        let start = out.len();
        push_layer(d, k, &mut prefix, &mut out);
        for a in &mut out[start..] {
            a.degree = k;
        }
    }
    Ok(out)
}

fn addressable(count: u64) -> Result<usize> {
    let bytes = count
        .checked_mul(std::mem::size_of::<MultiIndex>() as u64)
        .ok_or(Error::Overflow("enumeration size"))?;
    if count > usize::MAX as u64 || bytes > isize::MAX as u64 {
        return Err(Error::Overflow("enumeration size"));
    }
    Ok(count as usize)
}

/// Position of `α` in the canonical order.
pub fn rank(alpha: &MultiIndex) -> Result<u64> {
    let d = alpha.dim();
    let k = alpha.degree as u64;
    let mut r = if k == 0 { 0 } else { count_upto(d, k - 1)? };
    let mut remaining = k;
    for i in 0..d.saturating_sub(1) {
        let a = alpha.exps[i] as u64;
        // tuples sharing the prefix but with a larger i-th exponent come first
        if remaining > a {
            r = r
                .checked_add(count_upto(d - i - 1, remaining - a - 1)?)
                .ok_or(Error::Overflow("rank"))?;
        }
        remaining -= a;
    }
    Ok(r)
}

/// Inverse of [`rank`].
pub fn unrank(d: usize, index: u64) -> Result<MultiIndex> {
    check_dim(d)?;
    let mut k: u64 = 0;
    let mut below = 0u64;
    loop {
        let upto = count_upto(d, k).map_err(|_| Error::IndexOutOfRange {
            index: index as usize,
            len: usize::MAX,
        })?;
        if index < upto {
            break;
        }
        below = upto;
        k += 1;
    }
    let mut pos = index - below;
    let mut exps = Vec::with_capacity(d);
    let mut remaining = k;
    for i in 0..d - 1 {
        let mut v = remaining;
        loop {
            let block = count_exact(d - i - 1, remaining - v)?;
            if pos < block {
                break;
            }
            pos -= block;
            v -= 1;
        }
        exps.push(v as u32);
        remaining -= v;
    }
    exps.push(remaining as u32);
    Ok(MultiIndex { exps, degree: k as u32 })
}

/// Precomputed enumeration of all indices up to a degree cap, with O(d) ranking.
///
/// Shared (behind an `Arc`) by every series with the same `(dim, cap)`.
#[derive(Debug)]
pub struct GradedLayout {
    dim: usize,
    cap: u32,
    indices: Vec<MultiIndex>,
    /// `layer_end[k] = count_upto(dim, k)`.
    layer_end: Vec<usize>,
    /// `upto[m][q] = count_upto(m, q)` for `m < dim`, `q ≤ cap`.
    upto: Vec<Vec<u64>>,
}

impl GradedLayout {
    pub fn new(dim: usize, cap: u32) -> Result<Self> {
        let indices = enumerate_upto(dim, cap)?;
        let layer_end = (0..=cap)
            .map(|k| count_upto(dim, k as u64).map(|c| c as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut upto = vec![Vec::new()];
        for m in 1..dim {
            upto.push((0..=cap as u64).map(|q| count_upto(m, q)).collect::<Result<Vec<_>>>()?);
        }
        Ok(Self { dim, cap, indices, layer_end, upto })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index(&self, rank: usize) -> &MultiIndex {
        &self.indices[rank]
    }

    /// Number of indices of degree ≤ k (k clamped to the cap).
    pub fn prefix_len(&self, k: u32) -> usize {
        self.layer_end[k.min(self.cap) as usize]
    }

    /// Range of ranks holding degree exactly `k`.
    pub fn layer(&self, k: u32) -> std::ops::Range<usize> {
        let start = if k == 0 { 0 } else { self.layer_end[k as usize - 1] };
        start..self.layer_end[k as usize]
    }

    /// Rank of the exponent tuple `exps` whose degree is `degree ≤ cap`.
    pub fn rank_of(&self, exps: &[u32], degree: u32) -> usize {
        let mut r = if degree == 0 { 0 } else { self.layer_end[degree as usize - 1] };
        let mut remaining = degree;
        for (i, &a) in exps.iter().enumerate().take(self.dim - 1) {
            if remaining > a {
                r += self.upto[self.dim - i - 1][(remaining - a - 1) as usize] as usize;
            }
            remaining -= a;
        }
        r
    }

    /// Rank of `index(i) + index(j)`; caller guarantees the degree fits under the cap.
    pub fn rank_of_sum(&self, i: usize, j: usize, buf: &mut [u32]) -> usize {
        if self.dim == 1 {
            return i + j;
        }
        let a = &self.indices[i];
        let b = &self.indices[j];
        for ((slot, x), y) in buf.iter_mut().zip(&a.exps).zip(&b.exps) {
            *slot = x + y;
        }
        self.rank_of(buf, a.degree + b.degree)
    }
}
