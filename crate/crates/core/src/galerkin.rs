//! Galerkin compression `P_p C_φ P_p` in the orthonormalised monomial basis
//! `ẽ_α = z^α/‖z^α‖`, its singular values, Hilbert–Schmidt norms, and the
//! growth witness for the duplicate map.
//!
//! `C_φ z^α = φ^α`, so column `α` holds the Taylor coefficients of `φ^α`:
//! `M[β, α] = coeff_β(φ^α) · ‖e_β‖/‖e_α‖`. Those coefficients do not depend
//! on the truncation, hence the compression at `p − 2` is the leading
//! principal block of the one at `p`.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hardy::{monomial_norm_sq, DomainSpec};
use crate::multiindex::{count_upto, MultiIndex};
use crate::powerseries::{layout, monomial_powers, TruncatedSeries};
use crate::spec::SymbolSpec;
use crate::symbols::SelfMap;

/// Default cap on the number of basis elements (`N_p`).
pub const DEFAULT_MAX_BASIS: u64 = 5000;

/// Relative slack for interlacing checks, absorbing SVD rounding.
pub const INTERLACING_TOL: f64 = 1e-12;

/// Threshold of the "converged" flag, relative to `a₁`.
pub const CONVERGED_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct AssembleOptions {
    pub max_basis: u64,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self { max_basis: DEFAULT_MAX_BASIS }
    }
}

#[derive(Clone, Debug)]
pub struct CompressionMatrix {
    map: SelfMap,
    p: u32,
    entries: DMatrix<Complex64>,
}

fn guard(d: usize, p: u32, max_basis: u64) -> Result<usize> {
    let n = count_upto(d, p as u64)?;
    if n > max_basis {
        return Err(Error::MemoryGuard { size: n, limit: max_basis });
    }
    usize::try_from(n).map_err(|_| Error::Overflow("basis size"))
}

fn require_bounded(map: &SelfMap) -> Result<()> {
    if map.is_bounded() {
        Ok(())
    } else {
        Err(Error::UnboundedSymbol(
            "the duplicate map has no compression; use the unboundedness witness instead".into(),
        ))
    }
}

fn basis_norms(dom: &DomainSpec, indices: &[MultiIndex]) -> Vec<f64> {
    indices.iter().map(|a| monomial_norm_sq(dom, a).sqrt()).collect()
}

/// Assembles the compression of `C_φ` onto polynomials of degree `≤ p`.
pub fn assemble(map: &SelfMap, p: u32, opts: AssembleOptions) -> Result<CompressionMatrix> {
    require_bounded(map)?;
    if p < 1 {
        return Err(Error::InvalidArgument("truncation degree must be >= 1".into()));
    }
    let d = map.dim();
    let n = guard(d, p, opts.max_basis)?;
    let series = map.taylor(p)?;
    let powers = monomial_powers(&series, p)?;
    let lay = layout(d, p)?;
    let norms = basis_norms(map.domain(), lay.indices());
    let mut entries = DMatrix::<Complex64>::zeros(n, n);
    for (a, col) in powers.iter().enumerate() {
        for (b, c) in col.coeffs().iter().enumerate() {
            entries[(b, a)] = c * (norms[b] / norms[a]);
        }
    }
    if entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Numeric("non-finite entry in the compression".into()));
    }
    log::debug!("assembled compression: d={d}, p={p}, N={n}");
    Ok(CompressionMatrix { map: map.clone(), p, entries })
}

/// Singular values of a dense complex matrix, descending.
pub fn matrix_singular_values(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::NonConvergence("singular value decomposition".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite singular value".into()));
    }
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

impl CompressionMatrix {
    pub fn map(&self) -> &SelfMap {
        &self.map
    }

    pub fn degree(&self) -> u32 {
        self.p
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Leading block for a smaller degree `q ≤ p`.
    pub fn leading_block(&self, q: u32) -> Result<DMatrix<Complex64>> {
        if q > self.p {
            return Err(Error::InvalidArgument(format!("degree {q} exceeds the assembled degree {}", self.p)));
        }
        let m = count_upto(self.map.dim(), q as u64)? as usize;
        Ok(self.entries.view((0, 0), (m, m)).into_owned())
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        matrix_singular_values(&self.entries)
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Writes `<stem>.bin` (row-major, little-endian `f64` pairs `re, im`)
    /// and `<stem>.json` (`{d, p, n, blocks, symbol}`) into `dir`.
    pub fn export(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let bin = dir.join(format!("{stem}.bin"));
        let json = dir.join(format!("{stem}.json"));
        let mut w = std::io::BufWriter::new(std::fs::File::create(&bin)?);
        for i in 0..self.entries.nrows() {
            for j in 0..self.entries.ncols() {
                let c = self.entries[(i, j)];
                w.write_all(&c.re.to_le_bytes())?;
                w.write_all(&c.im.to_le_bytes())?;
            }
        }
        w.flush()?;
        let header = ExportHeader {
            d: self.map.dim(),
            p: self.p,
            n: self.len(),
            blocks: self.map.domain().blocks().to_vec(),
            symbol: SymbolSpec::from_symbol(self.map.symbol()),
            layout: "row-major complex128 little-endian (re, im); rows and columns in graded-lex order",
        };
        std::fs::write(&json, serde_json::to_string_pretty(&header)?)?;
        Ok((bin, json))
    }
}

#[derive(Serialize)]
struct ExportHeader {
    d: usize,
    p: u32,
    n: usize,
    blocks: Vec<usize>,
    symbol: SymbolSpec,
    layout: &'static str,
}

/// Reads a matrix written by [`CompressionMatrix::export`].
pub fn read_exported(bin: &Path, n: usize) -> Result<DMatrix<Complex64>> {
    let bytes = std::fs::read(bin)?;
    if bytes.len() != n * n * 16 {
        return Err(Error::InvalidArgument(format!("{} bytes do not hold a {n}x{n} complex matrix", bytes.len())));
    }
    let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        Complex64::new(f(k), f(k + 1))
    }))
}

/// Compressed approximation numbers with diagnostics against degree `p − 2`.
#[derive(Clone, Debug, Serialize)]
pub struct ApproxNumbers {
    pub p: u32,
    /// `a_n^{(p)}`, descending; `values[0]` is `a₁`.
    pub values: Vec<f64>,
    /// `a_n^{(p−2)}` when `p ≥ 3`.
    pub previous: Option<Vec<f64>>,
    /// Indices `n` (1-based) where `a_n^{(p−2)} > a_n^{(p)}` beyond rounding.
    pub interlacing_violations: Vec<usize>,
    /// Per `n ≤ N_{p−2}`: `|a_n^{(p)} − a_n^{(p−2)}| < 1e−6·a₁`.
    pub converged: Vec<bool>,
}

impl ApproxNumbers {
    pub fn from_compression(m: &CompressionMatrix) -> Result<Self> {
        let values = m.singular_values()?;
        let p = m.degree();
        let a1 = values.first().copied().unwrap_or(0.0);
        let previous = if p >= 3 { Some(matrix_singular_values(&m.leading_block(p - 2)?)?) } else { None };
        let (interlacing_violations, converged) = match &previous {
            Some(prev) => (
                prev.iter()
                    .zip(&values)
                    .enumerate()
                    .filter(|(_, (old, new))| **old > **new + INTERLACING_TOL * a1)
                    .map(|(i, _)| i + 1)
                    .collect(),
                prev.iter().zip(&values).map(|(old, new)| (new - old).abs() < CONVERGED_TOL * a1).collect(),
            ),
            None => (Vec::new(), Vec::new()),
        };
        if !interlacing_violations.is_empty() {
            log::warn!("interlacing against p-2 fails at n = {interlacing_violations:?}");
        }
        Ok(Self { p, values, previous, interlacing_violations, converged })
    }
}

pub fn approx_numbers(map: &SelfMap, p: u32, opts: AssembleOptions) -> Result<ApproxNumbers> {
    ApproxNumbers::from_compression(&assemble(map, p, opts)?)
}

/// `Σ_{|α|,|β| ≤ p} |M[β, α]|²`, the squared HS norm of the compression.
pub fn hs_norm_sq(map: &SelfMap, p: u32, opts: AssembleOptions) -> Result<f64> {
    require_bounded(map)?;
    if p < 1 {
        return Err(Error::InvalidArgument("truncation degree must be >= 1".into()));
    }
    let d = map.dim();
    guard(d, p, opts.max_basis)?;
    let series = map.taylor(p)?;
    let powers = monomial_powers(&series, p)?;
    let lay = layout(d, p)?;
    let norms = basis_norms(map.domain(), lay.indices());
    Ok(powers
        .par_iter()
        .enumerate()
        .map(|(a, col)| {
            col.coeffs().iter().zip(&norms).map(|(c, nb)| c.norm_sqr() * nb * nb).sum::<f64>() / (norms[a] * norms[a])
        })
        .sum())
}

/// Squared HS norm of the compression onto the coordinate box
/// `{z^α : α_j ≤ p for every j}`. For a tensor symbol `φ(z) = (φ₁(z₁), …)`
/// on the polydisk this is the product of the one-variable values at `p`.
pub fn hs_norm_sq_box(map: &SelfMap, p: u32) -> Result<f64> {
    require_bounded(map)?;
    if p < 1 {
        return Err(Error::InvalidArgument("truncation degree must be >= 1".into()));
    }
    let d = map.dim();
    let side = p as usize + 1;
    let columns = side.checked_pow(d as u32).ok_or(Error::Overflow("box size"))?;
    let cap = p.checked_mul(d as u32).ok_or(Error::Overflow("box degree"))?;
    let series = map.taylor(cap)?;
    // powers[j][k] = φ_j^k at cap d·p
    let powers: Vec<Vec<TruncatedSeries>> = series
        .iter()
        .map(|f| {
            let mut v = vec![TruncatedSeries::one(d, cap)?];
            for k in 1..side {
                let next = v[k - 1].mul(f)?;
                v.push(next);
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let lay = layout(d, cap)?;
    let row_weight: Vec<f64> = lay
        .indices()
        .iter()
        .map(|b| if b.exps().iter().all(|&e| e <= p) { monomial_norm_sq(map.domain(), b) } else { 0.0 })
        .collect();
    (0..columns)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut exps = vec![0u32; d];
            for e in exps.iter_mut().rev() {
                *e = (rem % side) as u32;
                rem /= side;
            }
            let mut col = powers[0][exps[0] as usize].clone();
            for j in 1..d {
                col = col.mul(&powers[j][exps[j] as usize])?;
            }
            let alpha = MultiIndex::new(exps)?;
            let s: f64 = col.coeffs().iter().zip(&row_weight).map(|(c, w)| c.norm_sqr() * w).sum();
            Ok(s / monomial_norm_sq(map.domain(), &alpha))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a + b))
}

/// `‖C_φ f‖/‖f‖` for `φ(z₁, z₂) = (z₁, z₁)` and `f = (z₁ + z₂)^n` on the
/// bidisk: `2^n/√binom(2n, n)`, growing like `(πn)^{1/4}`.
pub fn unboundedness_witness(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("witness degree must be >= 1".into()));
    }
    if n <= 28 {
        // binom(56, 28) < 2^53 and 4^n is a power of two: two roundings in total
        let binom = crate::multiindex::binomial(2 * n as u64, n as u64)? as f64;
        return Ok((4f64.powi(n as i32) / binom).sqrt());
    }
    let n = n as f64;
    let log_binom: f64 = (1..=n as u64).map(|k| ((n + k as f64) / k as f64).ln()).sum();
    Ok((n * std::f64::consts::LN_2 - 0.5 * log_binom).exp())
}
