use compop::hardy::{gram_kernels, DomainSpec, Point};
use compop::multiindex::{count_upto, rank, unrank, MultiIndex};
use compop::symbols::{random_interior_point, SelfMap, Symbol};
use compop::{gamma_estimate, TruncatedSeries, Window};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn series(dim: usize, cap: u32) -> impl Strategy<Value = TruncatedSeries> {
    let len = count_upto(dim, cap as u64).unwrap() as usize;
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(move |v| {
        let c = v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        TruncatedSeries::from_coeffs(dim, cap, c).unwrap()
    })
}

fn triple() -> impl Strategy<Value = (TruncatedSeries, TruncatedSeries, TruncatedSeries)> {
    (1usize..=3, 0u32..=6).prop_flat_map(|(d, p)| (series(d, p), series(d, p), series(d, p)))
}

/// Max coefficient gap relative to the larger coefficient magnitude.
fn close(a: &TruncatedSeries, b: &TruncatedSeries, tol: f64) -> bool {
    let scale = a.coeffs().iter().chain(b.coeffs()).map(|c| c.norm()).fold(1.0, f64::max);
    a.max_abs_diff(b).unwrap() <= tol * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms((a, b, c) in triple()) {
        prop_assert!(close(&a.mul(&b).unwrap(), &b.mul(&a).unwrap(), 1e-12));
        prop_assert!(close(&a.mul(&b).unwrap().mul(&c).unwrap(), &a.mul(&b.mul(&c).unwrap()).unwrap(), 1e-12));
        let lhs = a.add(&b).unwrap().mul(&c).unwrap();
        let rhs = a.mul(&c).unwrap().add(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
        let one = TruncatedSeries::one(a.dim(), a.cap()).unwrap();
        prop_assert!(close(&a.mul(&one).unwrap(), &a, 0.0));
        prop_assert!(close(&a.sub(&a).unwrap(), &TruncatedSeries::zero(a.dim(), a.cap()).unwrap(), 0.0));
    }

    #[test]
    fn division_inverts_multiplication((a, mut b, _) in triple(), c0 in 0.5f64..2.0) {
        b.coeffs_mut()[0] = Complex64::new(c0, 0.0);
        let scale = a.coeffs().iter().map(|c| c.norm()).fold(1e-300, f64::max);
        let q = a.div(&b).unwrap().mul(&b).unwrap();
        prop_assert!(q.max_abs_diff(&a).unwrap() <= 1e-11 * scale);
        let q = a.mul(&b).unwrap().div(&b).unwrap();
        prop_assert!(q.max_abs_diff(&a).unwrap() <= 1e-11 * scale);
    }

    #[test]
    fn rank_unrank_round_trip(exps in prop::collection::vec(0u32..12, 1..6)) {
        let alpha = MultiIndex::new(exps).unwrap();
        let r = rank(&alpha).unwrap();
        prop_assert_eq!(unrank(alpha.dim(), r).unwrap(), alpha.clone());
        let k = alpha.degree() as u64;
        let lo = if k == 0 { 0 } else { count_upto(alpha.dim(), k - 1).unwrap() };
        prop_assert!(lo <= r && r < count_upto(alpha.dim(), k).unwrap());
    }

    #[test]
    fn gram_matrix_is_psd(seed in any::<u64>(), blocks in prop::collection::vec(1usize..=2, 1..=2), m in 1usize..8) {
        let dom = DomainSpec::new(blocks).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let pts: Vec<Point> = (0..m).map(|_| Point::new(random_interior_point(&dom, &mut rng))).collect();
        let g = gram_kernels(&dom, &pts).unwrap().matrix;
        let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
        let trace: f64 = (0..m).map(|i| h[(i, i)].re).sum();
        let eig = SymmetricEigen::new(h);
        prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-9 * trace), "{:?}", eig.eigenvalues);
    }

    #[test]
    fn decay_fit_scale_invariance(rate in 0.05f64..2.0, nu in 0.3f64..1.5, kappa in 1e-3f64..1e3, d in 1usize..=3) {
        // keep κ·a_n normal so neither sample is truncated
        prop_assume!(rate * 120f64.powf(nu) < 600.0);
        let a: Vec<f64> = (1..=120).map(|n| (-rate * (n as f64).powf(nu)).exp()).collect();
        let scaled: Vec<f64> = a.iter().map(|x| kappa * x).collect();
        let w = Some(Window::new(40, 110).unwrap());
        let f = gamma_estimate(&a, d, w).unwrap();
        let g = gamma_estimate(&scaled, d, w).unwrap();
        prop_assert!((f.slope - g.slope).abs() <= 1e-10 * f.slope.abs().max(1.0));
        prop_assert!(f.gamma_minus <= f.gamma_plus);
        prop_assert!(g.gamma_minus <= g.gamma_plus);
        let (p, q) = (f.stretch_exponent_offset.unwrap(), g.stretch_exponent_offset.unwrap());
        prop_assert!((p - q).abs() <= 1e-10, "{} vs {}", p, q);
    }

    #[test]
    fn self_maps_preserve_interior(
        seed in any::<u64>(),
        thetas in prop::collection::vec(0.05f64..0.95, 1..=3),
        s in 0.1f64..1.0,
    ) {
        let d = thetas.len();
        let mut rng = StdRng::seed_from_u64(seed);
        for (dom, sym) in [
            (DomainSpec::polydisk(d).unwrap(), Symbol::lens(&thetas)),
            (DomainSpec::ball(d).unwrap(), Symbol::scale(s, Symbol::identity(d))),
            (DomainSpec::polydisk(d).unwrap(), Symbol::compose(Symbol::lens(&thetas), Symbol::diagonal(&thetas))),
        ] {
            let map = SelfMap::new(dom.clone(), sym).unwrap();
            for _ in 0..20 {
                let z = Point::new(random_interior_point(&dom, &mut rng));
                let w = map.eval(&z).unwrap();
                prop_assert!(dom.is_interior(w.coords()));
            }
        }
    }
}

#[test]
fn basis_size_asymptotic() {
    let n = count_upto(2, 200).unwrap() as f64;
    let lead = 200f64 * 200.0 / 2.0;
    assert!((n - lead).abs() / lead < 0.10);
}
