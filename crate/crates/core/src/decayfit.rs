//! Finite-sample proxies for the decay functionals
//! `γ^±_d = lim inf / lim sup log(1/a_n)/n^{1/d}` and for the stretched
//! exponent `ν` in `a_n ≈ exp(−b n^ν)`.
//!
//! The limits are replaced by the minimum and maximum of
//! `s_n = log(1/a_n)/n^{1/d}` over a window, together with the
//! least-squares slope of `log(1/a_n)` against `n^{1/d}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest points accepted in a fitting window.
pub const MIN_WINDOW: usize = 8;

/// Inclusive 1-based index range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: usize,
    pub hi: usize,
}

impl Window {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || hi < lo {
            return Err(Error::InvalidArgument(format!("window [{lo}, {hi}] is not a valid 1-based range")));
        }
        Ok(Self { lo, hi })
    }

    /// `[⌈N/2⌉, ⌊0.9 N⌋]`: the second half of the sample without the top 10%
    /// of indices, where truncation bias is largest.
    pub fn default_for(len: usize) -> Self {
        Self { lo: len.div_ceil(2).max(1), hi: len * 9 / 10 }
    }

    pub fn len(&self) -> usize {
        self.hi + 1 - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }
}

impl std::str::FromStr for Window {
    type Err = Error;

    /// `lo:hi` or `lo,hi`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once([':', ','])
            .ok_or_else(|| Error::InvalidArgument(format!("window must look like lo:hi, got {s:?}")))?;
        let parse = |t: &str| {
            t.trim().parse::<usize>().map_err(|_| Error::InvalidArgument(format!("bad window bound {t:?}")))
        };
        Window::new(parse(a)?, parse(b)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub d: usize,
    pub window: Window,
    /// `min s_n` over the window.
    pub gamma_minus: f64,
    /// `max s_n` over the window.
    pub gamma_plus: f64,
    /// Least-squares slope of `log(1/a_n)` against `n^{1/d}`.
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of that fit.
    pub residual: f64,
    /// Least-squares slope of `log log(1/a_n)` against `log n`.
    pub stretch_exponent: Option<f64>,
    pub stretch_window: Option<Window>,
    pub stretch_residual: Option<f64>,
    /// `ν` of the model `log(1/a_n) = c + b n^ν`, free of the prefactor.
    pub stretch_exponent_offset: Option<f64>,
    pub notes: Vec<String>,
}

/// Validates ordering and cuts the sample at the first non-positive entry.
fn prepare<'a>(a: &'a [f64], notes: &mut Vec<String>) -> Result<&'a [f64]> {
    if let Some(i) = a.iter().position(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidArgument(format!("entry {} is negative or not finite", i + 1)));
    }
    if let Some(i) = a.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::NotMonotone(i + 2));
    }
    match a.iter().position(|&x| x == 0.0) {
        Some(z) => {
            notes.push(format!("sample truncated at index {} where a_n = 0", z + 1));
            Ok(&a[..z])
        }
        None => Ok(a),
    }
}

fn resolve_window(len: usize, window: Option<Window>, notes: &mut Vec<String>) -> Result<Window> {
    let mut w = window.unwrap_or_else(|| Window::default_for(len));
    if w.hi > len {
        notes.push(format!("window end {} clamped to sample length {len}", w.hi));
        w.hi = len;
    }
    if w.is_empty() || w.len() < MIN_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "window [{}, {}] holds fewer than {MIN_WINDOW} usable points",
            w.lo, w.hi
        )));
    }
    Ok(w)
}

/// Ordinary least squares `y ≈ c + m x`; returns `(m, c, rms)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let m = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c = my - m * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - c - m * a).powi(2)).sum::<f64>() / n).sqrt();
    (m, c, rms)
}

pub fn gamma_estimate(a: &[f64], d: usize, window: Option<Window>) -> Result<DecayFit> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let mut notes = Vec::new();
    let a = prepare(a, &mut notes)?;
    let w = resolve_window(a.len(), window, &mut notes)?;
    let inv_d = 1.0 / d as f64;
    let ns: Vec<usize> = (w.lo..=w.hi).collect();
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).powf(inv_d)).collect();
    let y: Vec<f64> = ns.iter().map(|&n| -a[n - 1].ln()).collect();
    let s: Vec<f64> = y.iter().zip(&x).map(|(l, r)| l / r).collect();
    let gamma_minus = s.iter().copied().fold(f64::INFINITY, f64::min);
    let gamma_plus = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (slope, intercept, residual) = linear_fit(&x, &y);
    notes.push("gamma_minus/gamma_plus are window min/max of log(1/a_n)/n^(1/d), finite proxies for liminf/limsup".into());

    let stretch = stretch_fit(a, w, &mut notes);
    let offset = offset_stretch_fit(a, w);
    Ok(DecayFit {
        d,
        window: w,
        gamma_minus,
        gamma_plus,
        slope,
        intercept,
        residual,
        stretch_exponent: stretch.map(|s| s.0),
        stretch_window: stretch.map(|s| s.1),
        stretch_residual: stretch.map(|s| s.2),
        stretch_exponent_offset: offset,
        notes,
    })
}

/// Log-log slope on the part of `w` where `a_n < 1`.
fn stretch_fit(a: &[f64], w: Window, notes: &mut Vec<String>) -> Option<(f64, Window, f64)> {
    // a is non-increasing, so entries ≥ 1 sit at the front of the window
    let first = (w.lo..=w.hi).find(|&n| a[n - 1] < 1.0)?;
    let shrunk = Window { lo: first, hi: w.hi };
    if first != w.lo {
        notes.push(format!("stretch window shrunk to start at {first} where a_n < 1"));
    }
    if shrunk.len() < 2 {
        notes.push("stretch exponent undefined: fewer than two points with a_n < 1".into());
        return None;
    }
    let x: Vec<f64> = (shrunk.lo..=shrunk.hi).map(|n| (n as f64).ln()).collect();
    let y: Vec<f64> = (shrunk.lo..=shrunk.hi).map(|n| (-a[n - 1].ln()).ln()).collect();
    let (m, _, rms) = linear_fit(&x, &y);
    Some((m, shrunk, rms))
}

/// Variable projection: for fixed `ν` the model is linear in `(c, b)`.
fn offset_stretch_fit(a: &[f64], w: Window) -> Option<f64> {
    let ns: Vec<f64> = (w.lo..=w.hi).map(|n| n as f64).collect();
    let y: Vec<f64> = (w.lo..=w.hi).map(|n| -a[n - 1].ln()).collect();
    let cost = |nu: f64| {
        let x: Vec<f64> = ns.iter().map(|n| n.powf(nu)).collect();
        linear_fit(&x, &y).2
    };
    let grid: Vec<f64> = (1..=300).map(|k| k as f64 * 0.01).collect();
    let best = grid.iter().copied().min_by(|p, q| cost(*p).total_cmp(&cost(*q)))?;
    let (mut lo, mut hi) = ((best - 0.01).max(1e-6), best + 0.01);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if cost(m1) < cost(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let nu = 0.5 * (lo + hi);
    nu.is_finite().then_some(nu)
}

/// Log-log slope `ν` alone.
pub fn stretch_exponent_fit(a: &[f64], window: Option<Window>) -> Result<f64> {
    let mut notes = Vec::new();
    let a = prepare(a, &mut notes)?;
    let w = resolve_window(a.len(), window, &mut notes)?;
    stretch_fit(a, w, &mut notes)
        .map(|s| s.0)
        .ok_or_else(|| Error::InvalidArgument(notes.join("; ")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn seq(len: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (1..=len).map(|n| f(n as f64)).collect()
    }

    #[test]
    fn constructed_gamma() {
        let a = seq(400, |n| (-2.0 * n.sqrt()).exp());
        let fit = gamma_estimate(&a, 2, None).unwrap();
        assert_relative_eq!(fit.gamma_minus, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.gamma_plus, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.slope, 2.0, max_relative = 1e-12);
        assert_eq!(fit.window, Window { lo: 200, hi: 360 });
    }

    #[test]
    fn constant_sequence() {
        let fit = gamma_estimate(&vec![0.5; 100], 2, None).unwrap();
        assert!(fit.slope.abs() < 1e-14);
        assert!(fit.gamma_minus <= fit.gamma_plus);
        assert!(fit.gamma_plus <= 2f64.ln() / 50f64.sqrt() + 1e-15);
    }

    #[test]
    fn constructed_stretch() {
        let a = seq(1000, |n| (-n.powf(0.25)).exp());
        assert!((stretch_exponent_fit(&a, None).unwrap() - 0.25).abs() < 1e-6);
        let a = seq(1000, |n| (-3.0 * n.sqrt()).exp());
        let fit = gamma_estimate(&a, 1, None).unwrap();
        assert!((fit.stretch_exponent.unwrap() - 0.5).abs() < 1e-6);
        assert!((fit.stretch_exponent_offset.unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn errors_and_truncation() {
        let mut a = seq(50, |n| 1.0 / n);
        a[10] = 2.0;
        assert!(matches!(gamma_estimate(&a, 1, None), Err(Error::NotMonotone(11))));
        let mut a = seq(50, |n| (-n).exp());
        for x in &mut a[40..] {
            *x = 0.0;
        }
        let fit = gamma_estimate(&a, 1, Some(Window::new(10, 50).unwrap())).unwrap();
        assert_eq!(fit.window.hi, 40);
        assert!(fit.notes.iter().any(|n| n.contains("truncated")));
        assert!(gamma_estimate(&a, 1, Some(Window::new(35, 50).unwrap())).is_err());
    }

    #[test]
    fn stretch_window_auto_shrinks() {
        let mut a = vec![1.0; 5];
        a.extend(seq(40, |n| (-(n.sqrt())).exp()));
        let fit = gamma_estimate(&a, 1, Some(Window::new(1, 45).unwrap())).unwrap();
        assert_eq!(fit.stretch_window.unwrap().lo, 6);
        assert!(fit.notes.iter().any(|n| n.contains("shrunk")));
    }

    #[test]
    fn window_parsing() {
        assert_eq!("100:231".parse::<Window>().unwrap(), Window { lo: 100, hi: 231 });
        assert_eq!("3, 20".parse::<Window>().unwrap(), Window { lo: 3, hi: 20 });
        assert!("0:5".parse::<Window>().is_err());
        assert!("5".parse::<Window>().is_err());
    }
}
