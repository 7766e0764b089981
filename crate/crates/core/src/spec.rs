//! Symbol specification documents.
//!
//! ```json
//! {"domain": {"blocks": [1, 1]},
//!  "symbol": {"type": "scale", "s": 0.6,
//!             "inner": {"type": "lens", "theta": [0.5, 0.5]}}}
//! ```
//!
//! Complex numbers are written either as a plain number or as `[re, im]`.
//! The full grammar is `schema/symbol.schema.json`.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{DomainSpec, Point};
use crate::symbols::{SelfMap, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexSpec> for Complex64 {
    fn from(c: ComplexSpec) -> Self {
        match c {
            ComplexSpec::Real(x) => Complex64::new(x, 0.0),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

impl From<Complex64> for ComplexSpec {
    fn from(c: Complex64) -> Self {
        if c.im == 0.0 {
            ComplexSpec::Real(c.re)
        } else {
            ComplexSpec::Pair([c.re, c.im])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SymbolSpec {
    Lens {
        theta: Vec<f64>,
    },
    Diag {
        r: Vec<ComplexSpec>,
    },
    Linear {
        /// Row-major list of rows.
        matrix: Vec<Vec<ComplexSpec>>,
    },
    Scale {
        s: f64,
        inner: Box<SymbolSpec>,
    },
    Compose {
        outer: Box<SymbolSpec>,
        inner: Box<SymbolSpec>,
    },
    Duplicate,
    /// Conjugate `inner` so that `point` is carried to the origin.
    Moebius {
        point: Vec<ComplexSpec>,
        inner: Box<SymbolSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainDoc {
    pub blocks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub domain: DomainDoc,
    pub symbol: SymbolSpec,
}

fn complex_vec(v: &[ComplexSpec]) -> Vec<Complex64> {
    v.iter().map(|&c| c.into()).collect()
}

impl SymbolSpec {
    /// Resolves the spec into a symbol on `dom`. Möbius nodes need the
    /// domain to evaluate the inner map at the conjugation point.
    pub fn to_symbol(&self, dom: &DomainSpec) -> Result<Symbol> {
        Ok(match self {
            SymbolSpec::Lens { theta } => Symbol::Lens(theta.clone()),
            SymbolSpec::Diag { r } => Symbol::DiagonalLinear(complex_vec(r)),
            SymbolSpec::Linear { matrix } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|row| row.len() != n) {
                    return Err(Error::Spec("linear matrix must be square and non-empty".into()));
                }
                Symbol::Linear(DMatrix::from_fn(n, n, |i, j| matrix[i][j].into()))
            }
            SymbolSpec::Scale { s, inner } => Symbol::scale(*s, inner.to_symbol(dom)?),
            SymbolSpec::Compose { outer, inner } => Symbol::compose(outer.to_symbol(dom)?, inner.to_symbol(dom)?),
            SymbolSpec::Duplicate => Symbol::Duplicate,
            SymbolSpec::Moebius { point, inner } => {
                let inner = SelfMap::new(dom.clone(), inner.to_symbol(dom)?)?;
                let conj = inner.moebius_fix_origin(&Point::new(complex_vec(point)))?;
                conj.symbol().clone()
            }
        })
    }

    pub fn from_symbol(symbol: &Symbol) -> Self {
        match symbol {
            Symbol::Lens(t) => SymbolSpec::Lens { theta: t.clone() },
            Symbol::DiagonalLinear(r) => SymbolSpec::Diag { r: r.iter().map(|&c| c.into()).collect() },
            Symbol::Linear(a) => SymbolSpec::Linear {
                matrix: a.row_iter().map(|row| row.iter().map(|&c| c.into()).collect()).collect(),
            },
            Symbol::Scale { factor, inner } => SymbolSpec::Scale { s: *factor, inner: Box::new(Self::from_symbol(inner)) },
            Symbol::Compose { outer, inner } => SymbolSpec::Compose {
                outer: Box::new(Self::from_symbol(outer)),
                inner: Box::new(Self::from_symbol(inner)),
            },
            Symbol::Duplicate => SymbolSpec::Duplicate,
            Symbol::MoebiusConjugate { point, inner, .. } => SymbolSpec::Moebius {
                point: point.iter().map(|&c| c.into()).collect(),
                inner: Box::new(Self::from_symbol(inner)),
            },
        }
    }
}

impl SpecDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        DomainSpec::new(self.domain.blocks.clone())
    }

    pub fn build(&self, seed: u64) -> Result<SelfMap> {
        let dom = self.domain()?;
        let symbol = self.symbol.to_symbol(&dom)?;
        SelfMap::with_seed(dom, symbol, seed)
    }

    pub fn from_map(map: &SelfMap) -> Self {
        SpecDocument {
            domain: DomainDoc { blocks: map.domain().blocks().to_vec() },
            symbol: SymbolSpec::from_symbol(map.symbol()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_scale_lens() {
        let doc = SpecDocument::parse(
            r#"{"domain":{"blocks":[1,1]},"symbol":{"type":"scale","s":0.6,"inner":{"type":"lens","theta":[0.5,0.5]}}}"#,
        )
        .unwrap();
        let map = doc.build(1).unwrap();
        assert_eq!(map.symbol(), &Symbol::scale(0.6, Symbol::lens(&[0.5, 0.5])));
    }

    #[test]
    fn complex_entries() {
        let doc = SpecDocument::parse(
            r#"{"domain":{"blocks":[2]},"symbol":{"type":"linear","matrix":[[0.3,[0.1,0.2]],[0,0.4]]}}"#,
        )
        .unwrap();
        let map = doc.build(1).unwrap();
        match map.symbol() {
            Symbol::Linear(a) => assert_eq!(a[(0, 1)], Complex64::new(0.1, 0.2)),
            other => panic!("{other:?}"),
        }
        let round = SpecDocument::from_map(&map);
        assert_eq!(round, doc);
    }

    #[test]
    fn moebius_resolves_image() {
        let doc = SpecDocument::parse(
            r#"{"domain":{"blocks":[1,1]},"symbol":{"type":"moebius","point":[0.4,0],"inner":{"type":"diag","r":[0.5,0.5]}}}"#,
        )
        .unwrap();
        let map = doc.build(1).unwrap();
        let at0 = map.eval(&Point::origin(2)).unwrap();
        assert!(at0.coords().iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn rejects_bad_documents() {
        for text in [
            r#"{"domain":{"blocks":[1]},"symbol":{"type":"spiral"}}"#,
            r#"{"domain":{"blocks":[1]},"symbol":{"type":"lens","theta":[0.5],"extra":1}}"#,
            r#"{"domain":{"blocks":[1,1]},"symbol":{"type":"linear","matrix":[[0.1,0.2]]}}"#,
            r#"{"domain":{"blocks":[]},"symbol":{"type":"duplicate"}}"#,
            r#"not json"#,
        ] {
            let r = SpecDocument::parse(text).and_then(|d| d.build(1));
            assert!(r.is_err(), "{text}");
        }
    }

    #[test]
    fn duplicate_on_bidisk() {
        let doc = SpecDocument::parse(r#"{"domain":{"blocks":[1,1]},"symbol":{"type":"duplicate"}}"#).unwrap();
        assert!(!doc.build(1).unwrap().is_bounded());
    }
}
