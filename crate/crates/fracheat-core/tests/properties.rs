//! Property tests over randomly drawn parameters.

use proptest::prelude::*;

use fracheat_core::evolution::{solve_forward, ModalState};
use fracheat_core::nonlocal::ExteriorRegion;
use fracheat_core::spectral::{
    eigenvalue_asymptotic, mu, normalization_constant, q_profile, FracOrder, Grid, SpectralBasis,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn frac_order_accepts_exactly_the_open_interval(s in -2.0f64..3.0) {
        let ok = FracOrder::new(s).is_ok();
        prop_assert_eq!(ok, s > 0.0 && s < 1.0);
    }

    #[test]
    fn normalization_positive_on_domain(s in 1e-3f64..0.999) {
        let c = normalization_constant(FracOrder::new(s).unwrap());
        prop_assert!(c > 0.0 && c.is_finite());
    }

    #[test]
    fn asymptote_is_momentum_power(k in 1usize..100_000, s in 1e-3f64..0.999) {
        let so = FracOrder::new(s).unwrap();
        let a = eigenvalue_asymptotic(k, so);
        let b = mu(k, so).powf(2.0 * s);
        prop_assert!((a - b).abs() <= 1e-13 * a);
    }

    #[test]
    fn q_profile_bounded_monotone(x in -2.0f64..2.0, dx in 1e-6f64..1.0) {
        let a = q_profile(x);
        let b = q_profile(x + dx);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a, "profile must be nondecreasing");
        // Complementarity.
        prop_assert!((a + q_profile(-x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn region_parse_round_trip(a in 1.0001f64..5.0, len in 0.01f64..3.0, flip in any::<bool>()) {
        let (lo, hi) = if flip { (-a - len, -a) } else { (a, a + len) };
        let text = format!("{lo}:{hi}");
        let region = ExteriorRegion::parse(&text).unwrap();
        prop_assert_eq!(region.intervals(), &[(lo, hi)]);
        prop_assert!(region.contains(0.5 * (lo + hi)));
        prop_assert!(!region.contains(0.0));
    }

    #[test]
    fn grid_spacing_invariant(n in 2usize..400) {
        let g = Grid::uniform(n).unwrap();
        prop_assert_eq!(g.n_interior(), n - 1);
        prop_assert!((g.h() - 2.0 / n as f64).abs() < 1e-15);
        let nodes = g.nodes();
        prop_assert_eq!(nodes[0], -1.0);
        prop_assert_eq!(*nodes.last().unwrap(), 1.0);
        prop_assert!(nodes.windows(2).all(|w| w[1] > w[0]));
    }
}

proptest! {
    // Flows are comparatively expensive; fewer cases.
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn free_flow_contracts_and_superposes(
        c1 in -1.0f64..1.0,
        c2 in -1.0f64..1.0,
        c3 in -1.0f64..1.0,
        t in 0.01f64..2.0,
    ) {
        // One shared tiny basis for the whole property run.
        use std::sync::OnceLock;
        static BASIS: OnceLock<SpectralBasis> = OnceLock::new();
        let basis = BASIS.get_or_init(|| {
            SpectralBasis::compute(Grid::uniform(32).unwrap(), FracOrder::new(0.6).unwrap(), 3)
                .unwrap()
        });
        let u0 = ModalState::initial(vec![c1, c2, c3]);
        let ut = solve_forward(&u0, None, basis, t).unwrap();
        prop_assert!(ut.norm() <= u0.norm() + 1e-15);
        // Linearity of the free flow.
        let v0 = ModalState::initial(vec![c3, c1, -c2]);
        let sum = ModalState::initial(vec![c1 + c3, c2 + c1, c3 - c2]);
        let vt = solve_forward(&v0, None, basis, t).unwrap();
        let st = solve_forward(&sum, None, basis, t).unwrap();
        for i in 0..3 {
            let lin = ut.coeffs[i] + vt.coeffs[i];
            prop_assert!((st.coeffs[i] - lin).abs() <= 1e-12 * lin.abs().max(1.0));
        }
    }
}
