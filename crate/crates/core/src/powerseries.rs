//! Truncated d-variate power series with complex coefficients.
//!
//! Coefficients are stored densely over the graded layout of
//! [`crate::multiindex`]; every operation drops terms of total degree above
//! the series' cap.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::multiindex::{GradedLayout, MultiIndex};

const SINGULAR_DIVISION: f64 = 1e-14;

/// Process-wide cache so equal `(dim, cap)` pairs share one layout.
pub fn layout(dim: usize, cap: u32) -> Result<Arc<GradedLayout>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<GradedLayout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(l) = cache.lock().unwrap().get(&(dim, cap)) {
        return Ok(l.clone());
    }
    let built = Arc::new(GradedLayout::new(dim, cap)?);
    Ok(cache.lock().unwrap().entry((dim, cap)).or_insert(built).clone())
}

#[derive(Clone, Debug)]
pub struct TruncatedSeries {
    layout: Arc<GradedLayout>,
    coeffs: Vec<Complex64>,
}

impl TruncatedSeries {
    pub fn zero(dim: usize, cap: u32) -> Result<Self> {
        let layout = layout(dim, cap)?;
        let coeffs = vec![Complex64::new(0.0, 0.0); layout.len()];
        Ok(Self { layout, coeffs })
    }

    pub fn constant(dim: usize, cap: u32, c: Complex64) -> Result<Self> {
        let mut s = Self::zero(dim, cap)?;
        s.coeffs[0] = c;
        Ok(s)
    }

    pub fn one(dim: usize, cap: u32) -> Result<Self> {
        Self::constant(dim, cap, Complex64::new(1.0, 0.0))
    }

    /// The coordinate function `z_axis` (zero if `cap == 0`).
    pub fn variable(dim: usize, cap: u32, axis: usize) -> Result<Self> {
        if axis >= dim {
            return Err(Error::InvalidArgument(format!("axis {axis} out of range for dim {dim}")));
        }
        let mut s = Self::zero(dim, cap)?;
        if cap >= 1 {
            s.coeffs[1 + axis] = Complex64::new(1.0, 0.0);
        }
        Ok(s)
    }

    /// Linear form `Σ_i w_i z_i`.
    pub fn linear(cap: u32, weights: &[Complex64]) -> Result<Self> {
        let mut s = Self::zero(weights.len(), cap)?;
        if cap >= 1 {
            s.coeffs[1..=weights.len()].copy_from_slice(weights);
        }
        Ok(s)
    }

    pub fn from_coeffs(dim: usize, cap: u32, coeffs: Vec<Complex64>) -> Result<Self> {
        let layout = layout(dim, cap)?;
        if coeffs.len() != layout.len() {
            return Err(Error::SeriesMismatch(format!(
                "expected {} coefficients for dim {dim} cap {cap}, got {}",
                layout.len(),
                coeffs.len()
            )));
        }
        Ok(Self { layout, coeffs })
    }

    /// Univariate series from its coefficients `c_0, c_1, …` (missing ones are zero).
    pub fn univariate(cap: u32, coeffs: &[Complex64]) -> Result<Self> {
        let mut s = Self::zero(1, cap)?;
        for (slot, c) in s.coeffs.iter_mut().zip(coeffs) {
            *slot = *c;
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn cap(&self) -> u32 {
        self.layout.cap()
    }

    pub fn layout(&self) -> &Arc<GradedLayout> {
        &self.layout
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Coefficient of `z^α`; zero above the cap.
    pub fn coeff(&self, alpha: &MultiIndex) -> Complex64 {
        if alpha.dim() != self.dim() || alpha.degree() > self.cap() {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[self.layout.rank_of(alpha.exps(), alpha.degree())]
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() || self.cap() != other.cap() {
            return Err(Error::SeriesMismatch(format!(
                "(dim {}, cap {}) vs (dim {}, cap {})",
                self.dim(),
                self.cap(),
                other.dim(),
                other.cap()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { layout: self.layout.clone(), coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self { layout: self.layout.clone(), coeffs })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: Complex64, other: &Self) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
        Ok(())
    }

    fn nonzero_ranks(&self) -> Vec<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let lay = &self.layout;
        let cap = lay.cap();
        let mut out = vec![Complex64::new(0.0, 0.0); lay.len()];
        let nz_a = self.nonzero_ranks();
        let nz_b = other.nonzero_ranks();
        let mut buf = vec![0u32; lay.dim()];
        for &i in &nz_a {
            let ai = self.coeffs[i];
            let room = cap - lay.index(i).degree();
            // ranks are graded, so the admissible j form a prefix of nz_b
            let limit = lay.prefix_len(room);
            for &j in nz_b.iter().take_while(|&&j| j < limit) {
                out[lay.rank_of_sum(i, j, &mut buf)] += ai * other.coeffs[j];
            }
        }
        Ok(Self { layout: lay.clone(), coeffs: out })
    }

    /// `self^n` by binary exponentiation.
    pub fn pow(&self, mut n: u32) -> Result<Self> {
        let mut result = Self::one(self.dim(), self.cap())?;
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// Quotient `q` with `q · divisor = self` up to the cap.
    pub fn div(&self, divisor: &Self) -> Result<Self> {
        self.check_same(divisor)?;
        let b0 = divisor.coeffs[0];
        if b0.norm() <= SINGULAR_DIVISION {
            return Err(Error::SingularDivision(b0.norm()));
        }
        let lay = &self.layout;
        let cap = lay.cap();
        let inv = b0.inv();
        let mut residual = self.coeffs.clone();
        let mut q = vec![Complex64::new(0.0, 0.0); lay.len()];
        let nz_b: Vec<usize> = divisor.nonzero_ranks().into_iter().filter(|&j| j > 0).collect();
        let mut buf = vec![0u32; lay.dim()];
        // graded order: every target rank of q_γ·b_δ (|δ| ≥ 1) lies strictly after γ
        for g in 0..lay.len() {
            let qg = residual[g] * inv;
            q[g] = qg;
            if qg.re == 0.0 && qg.im == 0.0 {
                continue;
            }
            let limit = lay.prefix_len(cap - lay.index(g).degree());
            for &j in nz_b.iter().take_while(|&&j| j < limit) {
                residual[lay.rank_of_sum(g, j, &mut buf)] -= qg * divisor.coeffs[j];
            }
        }
        Ok(Self { layout: lay.clone(), coeffs: q })
    }

    /// Substitute the multivariate `inner` (zero constant term) into the
    /// univariate `self`, by Horner's scheme in the series ring.
    pub fn substitute_into(&self, inner: &Self) -> Result<Self> {
        if self.dim() != 1 {
            return Err(Error::SeriesMismatch("outer series must be univariate".into()));
        }
        let c0 = inner.constant_term();
        if c0.norm() > 1e-14 {
            return Err(Error::NonzeroInnerConstant(c0.norm()));
        }
        let cap = inner.cap();
        let mut acc = TruncatedSeries::zero(inner.dim(), cap)?;
        let top = self.cap().min(cap);
        for k in (0..=top).rev() {
            acc = acc.mul(inner)?;
            acc.coeffs[0] += self.coeffs[k as usize];
        }
        Ok(acc)
    }

    /// Coefficients of `outer ∘ inner` for univariate series.
    pub fn compose1d(outer: &Self, inner: &Self) -> Result<Self> {
        if outer.dim() != 1 || inner.dim() != 1 {
            return Err(Error::SeriesMismatch("compose1d needs univariate series".into()));
        }
        if outer.cap() != inner.cap() {
            return Err(Error::SeriesMismatch(format!("caps {} vs {}", outer.cap(), inner.cap())));
        }
        outer.substitute_into(inner)
    }

    /// Same series with a lower (or equal) cap.
    pub fn truncate(&self, cap: u32) -> Result<Self> {
        if cap > self.cap() {
            return Err(Error::SeriesMismatch(format!(
                "cannot raise cap from {} to {cap}",
                self.cap()
            )));
        }
        if cap == self.cap() {
            return Ok(self.clone());
        }
        let lay = layout(self.dim(), cap)?;
        let coeffs = self.coeffs[..lay.len()].to_vec();
        Ok(Self { layout: lay, coeffs })
    }

    /// Embed a univariate series as a function of coordinate `axis` in `dim` variables.
    pub fn embed_axis(&self, dim: usize, axis: usize) -> Result<Self> {
        if self.dim() != 1 {
            return Err(Error::SeriesMismatch("embed_axis needs a univariate series".into()));
        }
        if axis >= dim {
            return Err(Error::InvalidArgument(format!("axis {axis} out of range for dim {dim}")));
        }
        let mut out = Self::zero(dim, self.cap())?;
        let mut exps = vec![0u32; dim];
        for k in 0..=self.cap() {
            exps[axis] = k;
            let r = out.layout.rank_of(&exps, k);
            out.coeffs[r] = self.coeffs[k as usize];
        }
        Ok(out)
    }

    /// Evaluate the truncated polynomial at `z`.
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.dim(), "point dimension");
        if self.dim() == 1 {
            return self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z[0] + c);
        }
        // monomials built incrementally along the graded order: z^α = z^{α−e_i}·z_i
        let lay = &self.layout;
        let mut mono = vec![Complex64::new(0.0, 0.0); lay.len()];
        mono[0] = Complex64::new(1.0, 0.0);
        let mut acc = self.coeffs[0];
        for r in 1..lay.len() {
            let a = lay.index(r);
            let i = a.first_nonzero().expect("nonzero index");
            let prev = a.decrement(i);
            mono[r] = mono[lay.rank_of(prev.exps(), prev.degree())] * z[i];
            acc += self.coeffs[r] * mono[r];
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// Taylor series of `(1 + sign·z)^θ` about 0, principal branch.
pub fn binomial_series(theta: f64, sign: f64, cap: u32) -> Result<TruncatedSeries> {
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidArgument(format!("sign must be ±1, got {sign}")));
    }
    let mut s = TruncatedSeries::zero(1, cap)?;
    let mut c = 1.0f64;
    s.coeffs[0] = Complex64::new(1.0, 0.0);
    for k in 1..=cap as usize {
        c *= sign * (theta - k as f64 + 1.0) / k as f64;
        if !c.is_finite() {
            return Err(Error::Numeric(format!("binomial series overflow at degree {k}")));
        }
        s.coeffs[k] = Complex64::new(c, 0.0);
    }
    Ok(s)
}

/// `∏_j factors[j]^{α_j}` truncated at `cap`, by binary exponentiation of each factor.
pub fn tensor_power(factors: &[TruncatedSeries], alpha: &MultiIndex, cap: u32) -> Result<TruncatedSeries> {
    if factors.len() != alpha.dim() {
        return Err(Error::SeriesMismatch(format!(
            "{} factors for a multi-index of dimension {}",
            factors.len(),
            alpha.dim()
        )));
    }
    let dim = factors.first().map(|f| f.dim()).unwrap_or(0);
    let mut acc = TruncatedSeries::one(dim, cap)?;
    for (f, &e) in factors.iter().zip(alpha.exps()) {
        if f.cap() < cap {
            return Err(Error::SeriesMismatch(format!(
                "factor cap {} below requested cap {cap}",
                f.cap()
            )));
        }
        if e == 0 {
            continue;
        }
        let f = f.truncate(cap)?;
        acc = acc.mul(&f.pow(e)?)?;
    }
    Ok(acc)
}

/// `φ^α` for every `|α| ≤ cap`, in canonical order.
///
/// Built layer by layer as `φ^α = φ^{α−e_i} · φ_i` with `i` the first
/// non-zero exponent; each homogeneous layer is computed in parallel.
pub fn monomial_powers(factors: &[TruncatedSeries], cap: u32) -> Result<Vec<TruncatedSeries>> {
    use rayon::prelude::*;

    let dim = factors.len();
    if dim == 0 {
        return Err(Error::InvalidArgument("no factors".into()));
    }
    let factors: Vec<TruncatedSeries> = factors
        .iter()
        .map(|f| {
            if f.cap() < cap {
                Err(Error::SeriesMismatch(format!("factor cap {} below requested cap {cap}", f.cap())))
            } else {
                f.truncate(cap)
            }
        })
        .collect::<Result<_>>()?;
    let series_dim = factors[0].dim();
    let index_layout = layout(dim, cap)?;
    let mut table: Vec<TruncatedSeries> = Vec::with_capacity(index_layout.len());
    table.push(TruncatedSeries::one(series_dim, cap)?);
    for k in 1..=cap {
        let layer: Vec<TruncatedSeries> = index_layout
            .layer(k)
            .into_par_iter()
            .map(|r| {
                let a = index_layout.index(r);
                let i = a.first_nonzero().expect("degree >= 1");
                let prev = a.decrement(i);
                table[index_layout.rank_of(prev.exps(), prev.degree())].mul(&factors[i])
            })
            .collect::<Result<_>>()?;
        table.extend(layer);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn lens_series(theta: f64, cap: u32) -> TruncatedSeries {
        let plus = binomial_series(theta, 1.0, cap).unwrap();
        let minus = binomial_series(theta, -1.0, cap).unwrap();
        plus.sub(&minus).unwrap().div(&plus.add(&minus).unwrap()).unwrap()
    }

    #[test]
    fn binomial_examples() {
        let s = binomial_series(1.0, 1.0, 4).unwrap();
        assert_eq!(s.coeffs(), &[c(1.0), c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert_eq!(binomial_series(0.5, 1.0, 3).unwrap().coeffs()[1], c(0.5));
        assert_eq!(binomial_series(0.5, -1.0, 3).unwrap().coeffs()[2], c(-0.125));
        assert!(binomial_series(0.5, 0.5, 3).is_err());
    }

    #[test]
    fn mul_examples() {
        let a = TruncatedSeries::univariate(4, &[c(1.0), c(1.0)]).unwrap();
        let b = TruncatedSeries::univariate(4, &[c(1.0), c(-1.0)]).unwrap();
        let p = a.mul(&b).unwrap();
        assert_eq!(&p.coeffs()[..3], &[c(1.0), c(0.0), c(-1.0)]);
        let one = TruncatedSeries::one(1, 4).unwrap();
        assert_eq!(a.mul(&one).unwrap().coeffs(), a.coeffs());

        let s = TruncatedSeries::linear(3, &[c(1.0), c(1.0)]).unwrap();
        let sq = s.mul(&s).unwrap();
        let get = |e: &[u32]| sq.coeff(&MultiIndex::new(e.to_vec()).unwrap());
        assert_eq!(get(&[2, 0]), c(1.0));
        assert_eq!(get(&[1, 1]), c(2.0));
        assert_eq!(get(&[0, 2]), c(1.0));
        assert_eq!(get(&[1, 0]), c(0.0));
    }

    #[test]
    fn mismatch_rejected() {
        let a = TruncatedSeries::one(1, 4).unwrap();
        let b = TruncatedSeries::one(1, 5).unwrap();
        let e = TruncatedSeries::one(2, 4).unwrap();
        assert!(a.mul(&b).is_err());
        assert!(a.mul(&e).is_err());
        assert!(a.div(&b).is_err());
    }

    #[test]
    fn div_examples() {
        let a = TruncatedSeries::univariate(6, &[c(2.0), c(0.3), c(-1.0), c(0.5)]).unwrap();
        let q = a.div(&a).unwrap();
        assert!(q.max_abs_diff(&TruncatedSeries::one(1, 6).unwrap()).unwrap() < 1e-15);

        let one = TruncatedSeries::one(1, 10).unwrap();
        let geo = one.div(&TruncatedSeries::univariate(10, &[c(1.0), c(-1.0)]).unwrap()).unwrap();
        assert!(geo.coeffs().iter().all(|x| (x - c(1.0)).norm() < 1e-15));

        let lens1 = lens_series(1.0, 12);
        let z = TruncatedSeries::variable(1, 12, 0).unwrap();
        assert!(lens1.max_abs_diff(&z).unwrap() < 1e-15);
    }

    #[test]
    fn singular_division() {
        let a = TruncatedSeries::one(1, 3).unwrap();
        let b = TruncatedSeries::univariate(3, &[c(1e-16), c(1.0)]).unwrap();
        assert!(matches!(a.div(&b), Err(Error::SingularDivision(_))));
    }

    #[test]
    fn compose_examples() {
        let outer = TruncatedSeries::univariate(6, &[c(0.0), c(0.0), c(1.0)]).unwrap();
        let inner = TruncatedSeries::univariate(6, &[c(0.0), c(1.0), c(1.0)]).unwrap();
        let r = TruncatedSeries::compose1d(&outer, &inner).unwrap();
        assert_eq!(&r.coeffs()[..6], &[c(0.0), c(0.0), c(1.0), c(2.0), c(1.0), c(0.0)]);

        let z = TruncatedSeries::variable(1, 6, 0).unwrap();
        let s = TruncatedSeries::univariate(6, &[c(1.0), c(-2.0), c(0.5), c(3.0)]).unwrap();
        assert_eq!(TruncatedSeries::compose1d(&s, &z).unwrap().coeffs(), s.coeffs());

        let bad = TruncatedSeries::univariate(6, &[c(0.1), c(1.0)]).unwrap();
        assert!(matches!(
            TruncatedSeries::compose1d(&s, &bad),
            Err(Error::NonzeroInnerConstant(_))
        ));
    }

    #[test]
    fn lens_semigroup_coefficients() {
        let cap = 25;
        let composed = TruncatedSeries::compose1d(&lens_series(0.7, cap), &lens_series(0.6, cap)).unwrap();
        let direct = lens_series(0.42, cap);
        assert!(composed.max_abs_diff(&direct).unwrap() < 1e-9);
    }

    #[test]
    fn lens_series_is_odd() {
        for theta in [0.3, 0.5, 0.9] {
            let s = lens_series(theta, 40);
            for k in (0..=40).step_by(2) {
                assert!(s.coeffs()[k].norm() < 1e-13, "theta {theta} k {k}");
            }
            assert!((s.coeffs()[1] - c(theta)).norm() < 1e-15);
        }
    }

    #[test]
    fn tensor_power_examples() {
        let cap = 5;
        let ident: Vec<_> = (0..2).map(|i| TruncatedSeries::variable(2, cap, i).unwrap()).collect();
        let a = MultiIndex::new(vec![2, 1]).unwrap();
        let p = tensor_power(&ident, &a, cap).unwrap();
        for (r, v) in p.coeffs().iter().enumerate() {
            let expect = if p.layout().index(r) == &a { 1.0 } else { 0.0 };
            assert_eq!(*v, c(expect));
        }

        let r = 0.7;
        let diag: Vec<_> = (0..2).map(|i| TruncatedSeries::variable(2, cap, i).unwrap().scale(c(r))).collect();
        let b = MultiIndex::new(vec![1, 3]).unwrap();
        let p = tensor_power(&diag, &b, cap).unwrap();
        assert!((p.coeff(&b) - c(r.powi(4))).norm() < 1e-15);

        let lens: Vec<_> =
            (0..2).map(|i| lens_series(0.5, cap).embed_axis(2, i).unwrap()).collect();
        let one_one = MultiIndex::new(vec![1, 1]).unwrap();
        let p = tensor_power(&lens, &one_one, cap).unwrap();
        assert!((p.coeff(&one_one) - c(0.25)).norm() < 1e-15);
    }

    #[test]
    fn monomial_powers_match_tensor_power() {
        let cap = 7;
        let f = vec![
            TruncatedSeries::linear(cap, &[c(0.5), c(0.2)]).unwrap(),
            lens_series(0.4, cap).embed_axis(2, 1).unwrap().add(&TruncatedSeries::variable(2, cap, 0).unwrap().scale(c(0.1))).unwrap(),
        ];
        let table = monomial_powers(&f, cap).unwrap();
        let lay = layout(2, cap).unwrap();
        for (r, a) in lay.indices().iter().enumerate() {
            let direct = tensor_power(&f, a, cap).unwrap();
            assert!(table[r].max_abs_diff(&direct).unwrap() < 1e-14, "{a:?}");
        }
    }

    #[test]
    fn eval_matches_direct_sum() {
        let s = TruncatedSeries::linear(4, &[c(0.5), c(-0.25), Complex64::new(0.0, 1.0)]).unwrap();
        let s3 = s.pow(3).unwrap();
        let z = [c(0.3), c(-0.2), Complex64::new(0.1, 0.4)];
        let lin = c(0.5) * z[0] - c(0.25) * z[1] + Complex64::new(0.0, 1.0) * z[2];
        assert!((s3.eval(&z) - lin.powu(3)).norm() < 1e-14);
    }
}
