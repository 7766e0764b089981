//! Holomorphic self-maps φ of Ω and the operations the pipeline needs from
//! them: evaluation, Taylor expansion about 0, the derivative at 0, a
//! sampled sup-norm, and Möbius conjugation on the polydisk.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::hardy::{DomainSpec, Point};
use crate::powerseries::{binomial_series, layout, monomial_powers, TruncatedSeries};

pub const DEFAULT_SEED: u64 = 0x5eed_c0de;

/// Points drawn when validating that a symbol maps Ω into itself.
const VALIDATION_SAMPLES: usize = 1000;

/// Boundary samples per coordinate (tensor symbols) or in total (others)
/// for the sup-norm estimate.
pub const SUP_SAMPLES: usize = 4096;

/// Closed symbol algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum Symbol {
    /// `z_j ↦ λ_{θ_j}(z_j)` with `λ_θ(z) = ((1+z)^θ − (1−z)^θ)/((1+z)^θ + (1−z)^θ)`.
    Lens(Vec<f64>),
    /// `z_j ↦ r_j z_j`.
    DiagonalLinear(Vec<Complex64>),
    /// `z ↦ A z`.
    Linear(DMatrix<Complex64>),
    /// `z ↦ s · inner(z)`.
    Scale { factor: f64, inner: Box<Symbol> },
    /// `outer ∘ inner`.
    Compose { outer: Box<Symbol>, inner: Box<Symbol> },
    /// `(z₁, z₂) ↦ (z₁, z₁)` on the bidisk; induces an unbounded operator.
    Duplicate,
    /// `Φ_{image} ∘ inner ∘ Φ_point` on the polydisk, where
    /// `Φ_w(z)_j = (w_j − z_j)/(1 − w̄_j z_j)` and `image = inner(point)`.
    MoebiusConjugate { point: Vec<Complex64>, image: Vec<Complex64>, inner: Box<Symbol> },
}

impl Symbol {
    pub fn identity(d: usize) -> Self {
        Symbol::DiagonalLinear(vec![Complex64::new(1.0, 0.0); d])
    }

    pub fn diagonal(r: &[f64]) -> Self {
        Symbol::DiagonalLinear(r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn lens(thetas: &[f64]) -> Self {
        Symbol::Lens(thetas.to_vec())
    }

    pub fn scale(factor: f64, inner: Symbol) -> Self {
        Symbol::Scale { factor, inner: Box::new(inner) }
    }

    pub fn compose(outer: Symbol, inner: Symbol) -> Self {
        Symbol::Compose { outer: Box::new(outer), inner: Box::new(inner) }
    }

    /// Number of variables, `None` when the components disagree.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Symbol::Lens(t) => Some(t.len()),
            Symbol::DiagonalLinear(r) => Some(r.len()),
            Symbol::Linear(a) => (a.nrows() == a.ncols()).then_some(a.nrows()),
            Symbol::Scale { inner, .. } => inner.dim(),
            Symbol::Compose { outer, inner } => match (outer.dim(), inner.dim()) {
                (Some(a), Some(b)) if a == b => Some(a),
                _ => None,
            },
            Symbol::Duplicate => Some(2),
            Symbol::MoebiusConjugate { point, inner, .. } => inner.dim().filter(|&d| d == point.len()),
        }
    }

    pub fn contains_duplicate(&self) -> bool {
        match self {
            Symbol::Duplicate => true,
            Symbol::Scale { inner, .. } | Symbol::MoebiusConjugate { inner, .. } => inner.contains_duplicate(),
            Symbol::Compose { outer, inner } => outer.contains_duplicate() || inner.contains_duplicate(),
            _ => false,
        }
    }

    fn eval_raw(&self, z: &[Complex64]) -> Vec<Complex64> {
        match self {
            Symbol::Lens(thetas) => z.iter().zip(thetas).map(|(&x, &t)| lens_eval(t, x)).collect(),
            Symbol::DiagonalLinear(r) => z.iter().zip(r).map(|(x, r)| x * r).collect(),
            Symbol::Linear(a) => {
                let v = nalgebra::DVector::from_column_slice(z);
                (a * v).iter().copied().collect()
            }
            Symbol::Scale { factor, inner } => inner.eval_raw(z).into_iter().map(|x| x * factor).collect(),
            Symbol::Compose { outer, inner } => outer.eval_raw(&inner.eval_raw(z)),
            Symbol::Duplicate => vec![z[0], z[0]],
            Symbol::MoebiusConjugate { point, image, inner } => {
                moebius(image, &inner.eval_raw(&moebius(point, z)))
            }
        }
    }
}

/// `base^θ` on the principal branch, with `0^θ = 0`.
fn cpow(base: Complex64, theta: f64) -> Complex64 {
    if base.re == 0.0 && base.im == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        base.powf(theta)
    }
}

/// The lens map `λ_θ(z)`.
pub fn lens_eval(theta: f64, z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let p = cpow(one + z, theta);
    let m = cpow(one - z, theta);
    (p - m) / (p + m)
}

/// Taylor series of `λ_θ` about 0.
pub fn lens_series(theta: f64, cap: u32) -> Result<TruncatedSeries> {
    let plus = binomial_series(theta, 1.0, cap)?;
    let minus = binomial_series(theta, -1.0, cap)?;
    plus.sub(&minus)?.div(&plus.add(&minus)?)
}

/// Polydisk involution `Φ_w(z)_j = (w_j − z_j)/(1 − w̄_j z_j)`.
pub fn moebius(w: &[Complex64], z: &[Complex64]) -> Vec<Complex64> {
    w.iter()
        .zip(z)
        .map(|(&w, &z)| (w - z) / (Complex64::new(1.0, 0.0) - w.conj() * z))
        .collect()
}

fn gaussian_direction(rng: &mut StdRng, len: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..len)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-300 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Uniform point of the Shilov boundary `S_{l₁} × … × S_{l_N}`.
pub fn random_shilov_point(dom: &DomainSpec, rng: &mut StdRng) -> Vec<Complex64> {
    dom.blocks().iter().flat_map(|&l| gaussian_direction(rng, l)).collect()
}

/// Random interior point; a quarter of the draws sit within 1e-3 of the boundary.
pub fn random_interior_point(dom: &DomainSpec, rng: &mut StdRng) -> Vec<Complex64> {
    let near_edge = rng.gen_bool(0.25);
    dom.blocks()
        .iter()
        .flat_map(|&l| {
            let dir = gaussian_direction(rng, l);
            let radius = if near_edge {
                1.0 - 1e-3 * rng.gen::<f64>().max(1e-6)
            } else {
                rng.gen::<f64>().powf(1.0 / (2.0 * l as f64)) * 0.999
            };
            dir.into_iter().map(move |c| c * radius)
        })
        .collect()
}

/// A symbol bound to the domain it maps into itself.
#[derive(Clone, Debug)]
pub struct SelfMap {
    domain: DomainSpec,
    symbol: Symbol,
    seed: u64,
}

/// Degree-one Taylor data at the origin.
#[derive(Clone, Debug)]
pub struct Jacobian {
    pub matrix: DMatrix<Complex64>,
    /// Sorted by descending modulus.
    pub eigenvalues: Vec<Complex64>,
    pub smallest_singular_value: f64,
    /// `φ'(0)` invertible (smallest singular value > 1e-10).
    pub truly_d_dimensional: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupNormEstimate {
    /// Lower estimate of `sup_Ω ‖φ(z)‖_Ω`, clamped to `[0, 1]`.
    pub value: f64,
    pub samples: usize,
    /// True when the value is a closed form rather than a sample maximum.
    pub exact: bool,
}

impl SelfMap {
    pub fn new(domain: DomainSpec, symbol: Symbol) -> Result<Self> {
        Self::with_seed(domain, symbol, DEFAULT_SEED)
    }

    /// Validates parameters and samples interior preservation with `seed`.
    pub fn with_seed(domain: DomainSpec, symbol: Symbol, seed: u64) -> Result<Self> {
        let d = symbol
            .dim()
            .ok_or_else(|| Error::InvalidArgument("symbol components have inconsistent dimensions".into()))?;
        if d != domain.dim() {
            return Err(Error::InvalidArgument(format!(
                "symbol acts on {d} variables, domain has dimension {}",
                domain.dim()
            )));
        }
        check_parameters(&domain, &symbol, seed)?;
        let map = Self { domain, symbol, seed };
        if !map.symbol.contains_duplicate() {
            map.check_interior_preserved()?;
        }
        Ok(map)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_bounded(&self) -> bool {
        !self.symbol.contains_duplicate()
    }

    fn check_interior_preserved(&self) -> Result<()> {
        let mut rng = StdRng::seed_from_u64(self.seed);
        for _ in 0..VALIDATION_SAMPLES {
            let z = random_interior_point(&self.domain, &mut rng);
            let w = self.symbol.eval_raw(&z);
            if w.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::Numeric(format!("non-finite value of the symbol at {z:?}")));
            }
            if self.domain.omega_norm(&w) >= 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "symbol maps interior point {z:?} to {w:?} outside the domain"
                )));
            }
        }
        Ok(())
    }

    /// `φ(z)` for an interior point.
    pub fn eval(&self, z: &Point) -> Result<Point> {
        if !self.domain.is_interior(z.coords()) {
            return Err(Error::BoundaryPoint(format!("{:?}", z.coords())));
        }
        let w = self.symbol.eval_raw(z.coords());
        if w.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value of the symbol at {:?}", z.coords())));
        }
        Ok(Point::new(w))
    }

    /// Coordinate series `φ_1, …, φ_d` about 0, truncated at `cap`.
    pub fn taylor(&self, cap: u32) -> Result<Vec<TruncatedSeries>> {
        if cap < 1 {
            return Err(Error::InvalidArgument("taylor cap must be >= 1".into()));
        }
        taylor_of(&self.domain, &self.symbol, cap)
    }

    pub fn jacobian_at_zero(&self) -> Result<Jacobian> {
        let d = self.dim();
        let at0 = self.symbol.eval_raw(&vec![Complex64::new(0.0, 0.0); d]);
        let off = at0.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if off > 1e-12 {
            return Err(Error::FixedPointRequired(off));
        }
        let series = self.taylor(1)?;
        let matrix = DMatrix::from_fn(d, d, |j, i| series[j].coeffs()[1 + i]);
        let mut eigenvalues: Vec<Complex64> = matrix
            .clone()
            .eigenvalues()
            .ok_or_else(|| Error::NonConvergence("Schur decomposition of phi'(0)".into()))?
            .iter()
            .copied()
            .collect();
        eigenvalues.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        let smallest = matrix.clone().singular_values().iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Jacobian {
            matrix,
            eigenvalues,
            smallest_singular_value: smallest,
            truly_d_dimensional: smallest > 1e-10,
        })
    }

    /// Sampled estimate of `‖φ‖_∞ = sup_Ω ‖φ(z)‖_Ω`.
    pub fn sup_norm_estimate(&self) -> SupNormEstimate {
        sup_norm_of(&self.domain, &self.symbol, self.seed)
    }

    /// `ψ = Φ_{φ(a)} ∘ φ ∘ Φ_a`, which fixes the origin (polydisk only).
    pub fn moebius_fix_origin(&self, a: &Point) -> Result<SelfMap> {
        if !self.domain.is_polydisk() {
            return Err(Error::UnsupportedDomain(
                "Möbius conjugation is only available on the polydisk".into(),
            ));
        }
        let image = self.eval(a)?;
        let symbol = Symbol::MoebiusConjugate {
            point: a.coords().to_vec(),
            image: image.0,
            inner: Box::new(self.symbol.clone()),
        };
        SelfMap::with_seed(self.domain.clone(), symbol, self.seed)
    }
}

fn check_parameters(dom: &DomainSpec, symbol: &Symbol, seed: u64) -> Result<()> {
    match symbol {
        Symbol::Lens(thetas) => {
            if let Some(t) = thetas.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
                return Err(Error::InvalidArgument(format!("lens parameter {t} outside (0, 1)")));
            }
        }
        Symbol::DiagonalLinear(r) => {
            if let Some(x) = r.iter().find(|x| !(x.norm() <= 1.0)) {
                return Err(Error::InvalidArgument(format!("diagonal entry {x} has modulus > 1")));
            }
        }
        Symbol::Linear(a) => {
            if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                return Err(Error::InvalidArgument("linear map has non-finite entries".into()));
            }
            let est = sup_norm_of(dom, symbol, seed);
            if est.value >= 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "linear map has sampled Ω-operator norm {} >= 1",
                    est.value
                )));
            }
        }
        Symbol::Scale { factor, inner } => {
            if !(*factor > 0.0 && *factor <= 1.0) {
                return Err(Error::InvalidArgument(format!("scale factor {factor} outside (0, 1]")));
            }
            check_parameters(dom, inner, seed)?;
        }
        Symbol::Compose { outer, inner } => {
            check_parameters(dom, outer, seed)?;
            check_parameters(dom, inner, seed)?;
        }
        Symbol::Duplicate => {
            if dom.blocks() != [1, 1] {
                return Err(Error::UnsupportedDomain("the duplicate map lives on the bidisk".into()));
            }
        }
        Symbol::MoebiusConjugate { point, image, inner } => {
            if !dom.is_polydisk() {
                return Err(Error::UnsupportedDomain(
                    "Möbius conjugation is only available on the polydisk".into(),
                ));
            }
            if !dom.is_interior(point) || !dom.is_interior(image) {
                return Err(Error::BoundaryPoint(format!("conjugation points {point:?} / {image:?}")));
            }
            check_parameters(dom, inner, seed)?;
        }
    }
    Ok(())
}

fn taylor_of(dom: &DomainSpec, symbol: &Symbol, cap: u32) -> Result<Vec<TruncatedSeries>> {
    let d = dom.dim();
    match symbol {
        Symbol::Lens(thetas) => thetas
            .iter()
            .enumerate()
            .map(|(j, &t)| lens_series(t, cap)?.embed_axis(d, j))
            .collect(),
        Symbol::DiagonalLinear(r) => (0..d)
            .map(|j| Ok(TruncatedSeries::variable(d, cap, j)?.scale(r[j])))
            .collect(),
        Symbol::Linear(a) => (0..d)
            .map(|j| {
                let row: Vec<Complex64> = a.row(j).iter().copied().collect();
                TruncatedSeries::linear(cap, &row)
            })
            .collect(),
        Symbol::Scale { factor, inner } => Ok(taylor_of(dom, inner, cap)?
            .into_iter()
            .map(|s| s.scale(Complex64::new(*factor, 0.0)))
            .collect()),
        Symbol::Compose { outer, inner } => {
            let origin = vec![Complex64::new(0.0, 0.0); d];
            if inner.eval_raw(&origin).iter().all(|c| c.norm() <= 1e-14) {
                let outer_series = taylor_of(dom, outer, cap)?;
                let inner_series = taylor_of(dom, inner, cap)?;
                substitute(&outer_series, &inner_series, cap)
            } else {
                cauchy_taylor(dom, symbol, cap)
            }
        }
        Symbol::Duplicate => {
            let z1 = TruncatedSeries::variable(2, cap, 0)?;
            Ok(vec![z1.clone(), z1])
        }
        Symbol::MoebiusConjugate { .. } => cauchy_taylor(dom, symbol, cap),
    }
}

/// `outer_j(inner(z)) = Σ_β c^{(j)}_β inner^β`, valid when `inner(0) = 0`.
fn substitute(outer: &[TruncatedSeries], inner: &[TruncatedSeries], cap: u32) -> Result<Vec<TruncatedSeries>> {
    let powers = monomial_powers(inner, cap)?;
    let d = inner[0].dim();
    outer
        .iter()
        .map(|o| {
            let mut acc = TruncatedSeries::zero(d, cap)?;
            for (c, p) in o.coeffs().iter().zip(&powers) {
                if c.re != 0.0 || c.im != 0.0 {
                    acc.axpy(*c, p)?;
                }
            }
            Ok(acc)
        })
        .collect()
}

/// Taylor coefficients from samples on a torus inside Ω (discrete Cauchy
/// integral). Used where no exact series route exists.
///
/// The torus radius `ρ = 1000^{−1/cap}` (scaled by `1/√l` inside ball
/// blocks) keeps the `ρ^{−|α|}` rounding amplification near 1e3, and the
/// per-axis grid size `M` makes aliasing of order `ρ^M ≤ 1e−16`.
fn cauchy_taylor(dom: &DomainSpec, symbol: &Symbol, cap: u32) -> Result<Vec<TruncatedSeries>> {
    const MAX_GRID: usize = 1 << 22;
    let d = dom.dim();
    let rho = 1000f64.powf(-1.0 / cap as f64);
    let min_m = ((16.0 * std::f64::consts::LN_10 / -rho.ln()).ceil() as usize).max(2 * cap as usize + 2);
    let m = min_m.next_power_of_two();
    let total = m
        .checked_pow(d as u32)
        .filter(|&t| t <= MAX_GRID)
        .ok_or_else(|| {
            Error::UnsupportedDomain(format!(
                "sampled Taylor expansion needs a {m}^{d} grid; lower the degree or the dimension"
            ))
        })?;
    let radii: Vec<f64> = dom
        .blocks()
        .iter()
        .flat_map(|&l| std::iter::repeat_n(rho / (l as f64).sqrt(), l))
        .collect();
    let roots: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64))
        .collect();

    // values[j][flat], flat index row-major with axis 0 slowest
    let mut values = vec![vec![Complex64::new(0.0, 0.0); total]; d];
    let mut z = vec![Complex64::new(0.0, 0.0); d];
    for flat in 0..total {
        let mut rem = flat;
        for axis in (0..d).rev() {
            z[axis] = roots[rem % m] * radii[axis];
            rem /= m;
        }
        for (j, w) in symbol.eval_raw(&z).into_iter().enumerate() {
            values[j][flat] = w;
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let scale = 1.0 / total as f64;
    let lay = layout(d, cap)?;
    values
        .into_iter()
        .map(|mut data| {
            for axis in 0..d {
                let stride = m.pow((d - 1 - axis) as u32);
                let mut line = vec![Complex64::new(0.0, 0.0); m];
                for base in 0..total {
                    if !(base / stride).is_multiple_of(m) {
                        continue;
                    }
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + k * stride];
                    }
                    fft.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
            let coeffs: Vec<Complex64> = lay
                .indices()
                .iter()
                .map(|a| {
                    let flat = a.exps().iter().fold(0usize, |acc, &e| acc * m + e as usize);
                    let denom: f64 = a.exps().iter().zip(&radii).map(|(&e, r)| r.powi(e as i32)).product();
                    data[flat] * scale / denom
                })
                .collect();
            TruncatedSeries::from_coeffs(d, cap, coeffs)
        })
        .collect()
}

fn sup_norm_of(dom: &DomainSpec, symbol: &Symbol, seed: u64) -> SupNormEstimate {
    match symbol {
        Symbol::DiagonalLinear(r) => {
            let value = dom
                .block_ranges()
                .map(|range| r[range].iter().map(|x| x.norm()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            SupNormEstimate { value: value.min(1.0), samples: 0, exact: true }
        }
        Symbol::Scale { factor, inner } => {
            let inner = sup_norm_of(dom, inner, seed);
            SupNormEstimate { value: (factor * inner.value).min(1.0), ..inner }
        }
        Symbol::Lens(thetas) if dom.is_polydisk() => {
            // Ω-norm is max_j |λ_j(z_j)|; each factor peaks on the unit circle
            let value = thetas
                .iter()
                .map(|&t| {
                    (0..SUP_SAMPLES)
                        .map(|k| {
                            let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / SUP_SAMPLES as f64);
                            lens_eval(t, z).norm()
                        })
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            SupNormEstimate { value: value.min(1.0), samples: SUP_SAMPLES, exact: false }
        }
        _ => sampled_sup(dom, symbol, seed),
    }
}

fn sampled_sup(dom: &DomainSpec, symbol: &Symbol, seed: u64) -> SupNormEstimate {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let d = dom.dim();
    let mut best = 0.0f64;
    let mut samples = 0;
    // coordinate axes of the Shilov boundary first, then random points
    for j in 0..d {
        let mut z = vec![Complex64::new(0.0, 0.0); d];
        for r in dom.block_ranges() {
            if r.contains(&j) {
                z[j] = Complex64::new(1.0, 0.0);
            } else {
                z[r.start] = Complex64::new(1.0, 0.0);
            }
        }
        best = best.max(dom.omega_norm(&symbol.eval_raw(&z)));
        samples += 1;
    }
    while samples < SUP_SAMPLES {
        let z = random_shilov_point(dom, &mut rng);
        let v = dom.omega_norm(&symbol.eval_raw(&z));
        if v.is_finite() {
            best = best.max(v);
        }
        samples += 1;
    }
    SupNormEstimate { value: best.min(1.0), samples, exact: false }
}
