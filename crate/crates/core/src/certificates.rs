//! Two-sided certificates for the approximation numbers `a_n(C_φ)`.
//!
//! * Weyl: with `λ_k` the eigenvalues of `C_φ` (products `μ^α` of the
//!   eigenvalues of `φ'(0)`), `|λ_{2n}|² ≤ a₁ a_n`.
//! * Kernel subspace: `C_φ* K_u = K_{φ(u)}`, so on `span{K_{u_j}}` the ratio
//!   `‖C_φ* f‖²/‖f‖²` is the pencil `(G_v, G_u)` of Gram matrices with
//!   `v_j = φ(u_j)`; its smallest eigenvalue bounds `a_N²` from below.
//! * Tail: with `‖φ‖_∞ ≤ r < 1`, cutting `C_φ` after degree `n` leaves an
//!   error of at most `(Σ_{k>n} binom(d−1+k, k) r^{2k})^{1/2}`, an upper
//!   bound for `a_{N_n+1}`.

use std::io::Write as _;
use std::path::Path;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::galerkin::ApproxNumbers;
use crate::hardy::{gram_kernels, DomainSpec, Point};
use crate::multiindex::{count_upto, enumerate_exact, enumerate_upto};
use crate::spec::SymbolSpec;
use crate::symbols::SelfMap;

/// Largest accepted condition number of the kernel Gram matrix.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Relative slack of the soundness cross-check.
pub const SOUNDNESS_TOL: f64 = 1e-10;

/// Moduli `|μ^α|`, `|α| ≤ p`, sorted descending; the first entry is 1.
pub fn clahane_spectrum(mu: &[Complex64], p: u32) -> Result<Vec<f64>> {
    if mu.is_empty() {
        return Err(Error::InvalidArgument("empty eigenvalue list".into()));
    }
    let moduli: Vec<f64> = mu.iter().map(|m| m.norm()).collect();
    if moduli.contains(&0.0) {
        return Err(Error::ZeroEigenvalue);
    }
    let mut out: Vec<f64> = enumerate_upto(mu.len(), p)?
        .iter()
        .map(|a| a.exps().iter().zip(&moduli).map(|(&e, m)| m.powi(e as i32)).product())
        .collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// `|λ_{2n}|²/a1` (1-based `n`), a lower bound for `a_n` when `a1 ≥ a₁`.
pub fn weyl_lower_bound(spectrum: &[f64], a1: f64, n: usize) -> Result<f64> {
    if !(a1 > 0.0) {
        return Err(Error::InvalidArgument(format!("a1 must be positive, got {a1}")));
    }
    if n == 0 || 2 * n > spectrum.len() {
        return Err(Error::IndexOutOfRange { index: 2 * n, len: spectrum.len() });
    }
    let l = spectrum[2 * n - 1];
    Ok(l * l / a1)
}

/// Lens-map grid `u_j = (1 − e^{−j₁σ}, …, 1 − e^{−j_dσ})`, `1 ≤ j_i ≤ n`,
/// with the last coordinate varying fastest.
pub fn lens_grid(sigma: f64, n: usize, d: usize) -> Result<Vec<Point>> {
    if !(sigma > 0.0) || n == 0 || d == 0 {
        return Err(Error::InvalidArgument(format!("lens grid needs sigma > 0, n >= 1, d >= 1 (got {sigma}, {n}, {d})")));
    }
    let axis: Vec<f64> = (1..=n).map(|j| -(-(j as f64) * sigma).exp_m1()).collect();
    let total = n.checked_pow(d as u32).ok_or(Error::Overflow("lens grid size"))?;
    Ok((0..total)
        .map(|flat| {
            let mut rem = flat;
            let mut coords = vec![0.0; d];
            for c in coords.iter_mut().rev() {
                *c = axis[rem % n];
                rem /= n;
            }
            Point::real(&coords)
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelBound {
    pub points: usize,
    /// Lower bound for `a_points`.
    pub value: f64,
    pub gram_condition: f64,
}

/// `sqrt(λ_min(G_v, G_u))` for `v_j = φ(u_j)`; bounds `a_N` from below.
pub fn kernel_bernstein_lower(map: &SelfMap, pts: &[Point]) -> Result<KernelBound> {
    if pts.is_empty() {
        return Err(Error::InvalidArgument("no points".into()));
    }
    if !map.is_bounded() {
        return Err(Error::UnboundedSymbol("kernel certificate needs a bounded symbol".into()));
    }
    let dom = map.domain();
    let gu = gram_kernels(dom, pts)?;
    if gu.duplicate_points {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let images: Vec<Point> = pts.iter().map(|u| map.eval(u)).collect::<Result<_>>()?;
    let gv = gram_kernels(dom, &images)?.matrix;
    let gu = gu.matrix;

    let eig_u = SymmetricEigen::try_new(gu.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::NonConvergence("eigenvalues of the kernel Gram matrix".into()))?;
    let (lo, hi) = eig_u.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if cond > MAX_GRAM_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    let chol = gu.cholesky().ok_or(Error::IllConditioned(cond))?;
    let l = chol.l();
    // L⁻¹ G_v L⁻*
    let x = l
        .solve_lower_triangular(&gv)
        .ok_or_else(|| Error::Numeric("triangular solve".into()))?;
    let y = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or_else(|| Error::Numeric("triangular solve".into()))?;
    let y = (&y + y.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(y, f64::EPSILON, 0)
        .ok_or_else(|| Error::NonConvergence("generalized kernel eigenproblem".into()))?;
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(KernelBound { points: pts.len(), value: min.max(0.0).sqrt(), gram_condition: cond })
}

/// Interpolation constant `r^{1−n}` of the `n`-th roots of unity scaled by `r`.
pub fn roots_of_unity_interp_constant(r: f64, n: u32) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) || n == 0 {
        return Err(Error::InvalidArgument(format!("need 0 < r < 1 and n >= 1 (got {r}, {n})")));
    }
    Ok(r.powi(1 - n as i32))
}

/// Interpolation constant of a product set, bounded by the product of the
/// factors' constants.
pub fn product_bound(m_a: f64, m_b: f64) -> f64 {
    m_a * m_b
}

/// `Σ_{|β|=p} (p!/β!) |w^β|²`; equals `(Σ_j |w_j|²)^p`.
pub fn multinomial_layer_sum(w: &[Complex64], p: u32) -> Result<f64> {
    let lp = ln_gamma(p as f64 + 1.0);
    Ok(enumerate_exact(w.len(), p)?
        .iter()
        .map(|b| {
            let coef = (lp - b.exps().iter().map(|&e| ln_gamma(e as f64 + 1.0)).sum::<f64>()).exp();
            coef * b.monomial(w).norm_sqr()
        })
        .sum())
}

/// `(Σ_{k>n} binom(d−1+k, k) r^{2k})^{1/2}`, or the full sum
/// `(1 − r²)^{−d/2}` when `n` is `None`.
pub fn truncation_tail_upper(dom: &DomainSpec, r: f64, n: Option<u32>) -> Result<f64> {
    tail_sum(dom.dim(), r, n).map(f64::sqrt)
}

fn tail_sum(d: usize, r: f64, n: Option<u32>) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::TailInapplicable(r));
    }
    let r2 = r * r;
    let Some(n) = n else {
        return Ok((1.0 - r2).powf(-(d as f64)));
    };
    if r == 0.0 {
        return Ok(0.0);
    }
    let df = d as f64;
    let k0 = n as f64 + 1.0;
    // first term binom(d−1+k0, k0) r^{2k0} in log space
    let mut term = (ln_gamma(df + k0) - ln_gamma(df) - ln_gamma(k0 + 1.0) + k0 * r2.ln()).exp();
    let mut sum = 0.0;
    let mut k = k0;
    loop {
        sum += term;
        let ratio = (df + k) / (k + 1.0) * r2;
        term *= ratio;
        k += 1.0;
        if ratio < 1.0 && term <= f64::EPSILON * 1e-3 * sum {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    Ok(sum)
}

/// Best tail bound for `a_m` (1-based): the largest `n` with `N_n + 1 ≤ m`.
pub fn upper_at_index(dom: &DomainSpec, r: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::IndexOutOfRange { index: 0, len: 0 });
    }
    let d = dom.dim();
    let mut best: Option<u32> = None;
    let mut n = 0u32;
    while count_upto(d, n as u64)? < m as u64 {
        best = Some(n);
        n += 1;
    }
    truncation_tail_upper(dom, r, best)
}

/// Which certificates to compute and with what parameters.
#[derive(Clone, Debug)]
pub struct CertificateConfig {
    pub weyl: bool,
    pub kernel: bool,
    pub tail: bool,
    pub grid_sigma: f64,
    /// Largest per-axis grid size; grids `1..=grid_n` are all tried.
    pub grid_n: usize,
    /// Rigorous upper bound for `a₁`; the compressed `a₁` is used otherwise.
    pub a1_upper: Option<f64>,
    /// Overrides the sampled `‖φ‖_∞`.
    pub sup_norm: Option<f64>,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self { weyl: true, kernel: true, tail: true, grid_sigma: 1.0, grid_n: 3, a1_upper: None, sup_norm: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub n: usize,
    pub compressed: f64,
    pub lower_weyl: Option<f64>,
    pub lower_kernel: Option<f64>,
    pub upper_tail: Option<f64>,
    pub flags: Vec<String>,
}

impl BoundRow {
    fn lower(&self) -> Option<f64> {
        match (self.lower_weyl, self.lower_kernel) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateStatus {
    pub enabled: bool,
    pub applicable: bool,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub symbol: SymbolSpec,
    pub blocks: Vec<usize>,
    pub degree: u32,
    pub basis_size: usize,
    pub seed: u64,
    pub a1: f64,
    pub a1_source: String,
    pub sup_norm: f64,
    pub sup_norm_source: String,
    pub weyl: CertificateStatus,
    pub kernel: CertificateStatus,
    pub kernel_grids: Vec<KernelBound>,
    pub tail: CertificateStatus,
    pub interlacing_violations: Vec<usize>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub provenance: Provenance,
}

fn status(enabled: bool, applicable: bool, note: impl Into<String>) -> CertificateStatus {
    CertificateStatus { enabled, applicable, note: note.into() }
}

/// Assembles the per-index report for a compression already computed at degree `approx.p`.
pub fn build_report(map: &SelfMap, approx: &ApproxNumbers, cfg: &CertificateConfig) -> Result<BoundReport> {
    let values = &approx.values;
    let len = values.len();
    let d = map.dim();
    let mut notes = Vec::new();
    let mut rows: Vec<BoundRow> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut flags = Vec::new();
            if approx.converged.get(i).copied().unwrap_or(false) {
                flags.push("converged".to_string());
            }
            BoundRow { n: i + 1, compressed: v, lower_weyl: None, lower_kernel: None, upper_tail: None, flags }
        })
        .collect();

    let compressed_a1 = values.first().copied().unwrap_or(0.0);
    let (a1, a1_source) = match cfg.a1_upper {
        Some(a) if a > 0.0 => (a, "user-supplied upper bound".to_string()),
        Some(a) => return Err(Error::InvalidArgument(format!("a1 upper bound must be positive, got {a}"))),
        None => (
            compressed_a1,
            "compressed top singular value (a lower estimate of the true a1, so the Weyl column is not fully certified)"
                .to_string(),
        ),
    };

    // Weyl
    let weyl = if !cfg.weyl {
        status(false, false, "disabled")
    } else {
        match map.jacobian_at_zero().and_then(|j| clahane_spectrum(&j.eigenvalues, approx.p)) {
            Ok(spectrum) => {
                for row in rows.iter_mut().filter(|r| 2 * r.n <= spectrum.len()) {
                    row.lower_weyl = Some(weyl_lower_bound(&spectrum, a1, row.n)?);
                    if cfg.a1_upper.is_none() {
                        row.flags.push("weyl_a1_compressed".into());
                    }
                }
                status(
                    true,
                    true,
                    format!("eigenvalue products of phi'(0) up to degree {}; rows n <= {}", approx.p, spectrum.len() / 2),
                )
            }
            Err(e) => {
                notes.push(format!("weyl: {e}"));
                status(true, false, e.to_string())
            }
        }
    };

    // kernel subspace bound
    let mut kernel_grids = Vec::new();
    let kernel = if !cfg.kernel {
        status(false, false, "disabled")
    } else if !map.is_bounded() {
        status(true, false, "unbounded symbol")
    } else {
        for n in 1..=cfg.grid_n {
            let pts = lens_grid(cfg.grid_sigma, n, d)?;
            match kernel_bernstein_lower(map, &pts) {
                Ok(kb) => kernel_grids.push(kb),
                Err(Error::IllConditioned(c)) => {
                    notes.push(format!("kernel grid {n}^{d}: Gram condition {c:e} above {MAX_GRAM_CONDITION:e}, skipped"));
                }
                Err(e) => return Err(e),
            }
        }
        for row in rows.iter_mut() {
            // a_m ≥ a_N for N ≥ m
            let best = kernel_grids.iter().filter(|k| k.points >= row.n).map(|k| k.value).fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            });
            row.lower_kernel = best;
        }
        status(
            true,
            !kernel_grids.is_empty(),
            format!(
                "subspace bound on span of kernels at the lens grid (sigma = {}); a computable substitute for the interpolation-constant bound",
                cfg.grid_sigma
            ),
        )
    };

    // tail
    let sup = map.sup_norm_estimate();
    let (r, sup_source) = match cfg.sup_norm {
        Some(r) => (r, "user-supplied".to_string()),
        None if sup.exact => (sup.value, "closed form".to_string()),
        None => (sup.value, format!("maximum over {} boundary samples (a lower estimate)", sup.samples)),
    };
    let tail = if !cfg.tail {
        status(false, false, "disabled")
    } else if r >= 1.0 {
        status(true, false, format!("‖φ‖_∞ = {r}; tail certificate needs ‖φ‖_∞ < 1"))
    } else {
        let mut n: Option<u32> = None;
        for row in rows.iter_mut() {
            loop {
                let cand = n.map_or(0, |k| k + 1);
                if count_upto(d, cand as u64)? < row.n as u64 {
                    n = Some(cand);
                } else {
                    break;
                }
            }
            // N_n + 1 ≤ row.n ≤ N_{n+1}
            row.upper_tail = Some(truncation_tail_upper(map.domain(), r, n)?);
        }
        status(true, true, format!("r = {r}"))
    };

    let report = BoundReport {
        rows,
        provenance: Provenance {
            symbol: SymbolSpec::from_symbol(map.symbol()),
            blocks: map.domain().blocks().to_vec(),
            degree: approx.p,
            basis_size: len,
            seed: map.seed(),
            a1,
            a1_source,
            sup_norm: r,
            sup_norm_source: sup_source,
            weyl,
            kernel,
            kernel_grids,
            tail,
            interlacing_violations: approx.interlacing_violations.clone(),
            notes,
        },
    };
    Ok(report)
}

impl BoundReport {
    /// Every present lower bound is at most every present upper bound, and
    /// the compressed value (a lower estimate of `a_n`) is at most the upper bound.
    pub fn check_soundness(&self) -> Result<()> {
        for row in &self.rows {
            if let Some(up) = row.upper_tail {
                let slack = up * SOUNDNESS_TOL;
                if let Some(lo) = row.lower() {
                    if lo > up + slack {
                        return Err(Error::Soundness(format!("n = {}: lower bound {lo:e} exceeds upper bound {up:e}", row.n)));
                    }
                }
                if row.compressed > up + slack {
                    return Err(Error::Soundness(format!(
                        "n = {}: compressed value {:e} exceeds upper bound {up:e}",
                        row.n, row.compressed
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wtr.write_record(["n", "compressed", "lower_weyl", "lower_kernel", "upper_tail", "flags"])?;
        let f = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
        for row in &self.rows {
            wtr.write_record([
                row.n.to_string(),
                fmt_float(row.compressed),
                f(row.lower_weyl),
                f(row.lower_kernel),
                f(row.upper_tail),
                row.flags.join(";"),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_provenance(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(serde_json::to_string_pretty(&self.provenance)?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

/// Fixed 17-significant-digit float formatting shared by all CSV output.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}
