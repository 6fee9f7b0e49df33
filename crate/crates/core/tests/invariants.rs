use proptest::prelude::*;
use whittle_core::geometry::{random_sphere, Domain};
use whittle_core::kernels::{gram_matrix, KernelModel, Normalization, SpectralKernel, SpectralParams};
use whittle_core::likelihood::{log_likelihood, min_norm_interpolant, Conditioner};
use whittle_core::measures::{
    eigenvalue_ratio_sequence, hellinger_affinity, kakutani_classify, match_microergodic, KakutaniRule,
};
use whittle_core::sampler::CoefficientLaw;
use whittle_core::spectral::EigenSystem;

fn model(s: f64, tau: f64) -> KernelModel {
    SpectralKernel::new(Domain::Sphere, SpectralParams::new(s, tau, 1.0, Normalization::UnitDiagonal), 30)
        .unwrap()
        .into()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affinity_in_unit_interval(a in 0.01f64..100.0) {
        for law in [CoefficientLaw::Gaussian, CoefficientLaw::CenteredExponential] {
            let v = hellinger_affinity(law, a).unwrap().value;
            prop_assert!(v > 0.0 && v <= 1.0);
            let w = hellinger_affinity(law, 1.0 / a).unwrap().value;
            prop_assert!((v - w).abs() < 1e-10);
        }
    }

    #[test]
    fn ratio_sequence_matched_tends_to_one(tau1 in 0.5f64..30.0, tau2 in 0.5f64..30.0, s in 1.5f64..6.0) {
        let es = EigenSystem::Sphere { max_degree: 60 };
        let p1 = SpectralParams::new(s, tau1, 1.0, Normalization::Power);
        let p2 = match_microergodic(&p1, &SpectralParams::new(s, tau2, 1.0, Normalization::Power), &es).unwrap();
        let a = eigenvalue_ratio_sequence(&p1, &p2, &es, es.len()).unwrap();
        let first = (a[0] - 1.0).abs();
        let last = (a[a.len() - 1] - 1.0).abs();
        prop_assert!(last <= first + 1e-15);
    }

    #[test]
    fn kakutani_terms_nonnegative(tau2 in 0.5f64..10.0, s2 in 1.5f64..4.0, scale in 0.5f64..2.0) {
        let es = EigenSystem::Interval { modes: 500 };
        let p1 = SpectralParams::new(2.0, 1.0, 1.0, Normalization::Power);
        let p2 = SpectralParams::new(s2, tau2, scale, Normalization::Power);
        let r = kakutani_classify(&p1, &p2, CoefficientLaw::Gaussian, &es, 500, &KakutaniRule::default()).unwrap();
        prop_assert!(r.terms.iter().all(|&t| t >= 0.0));
        prop_assert!(r.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn quadratic_form_equals_interpolant_norm(seed in 0u64..1000, n in 3usize..25, s in 2.0f64..6.0) {
        let ps = random_sphere(n, seed).unwrap();
        let m = model(s, 5.0);
        let data: Vec<f64> = ps.points().iter().map(|p| p.unit_vector()[0] + 0.3 * p.unit_vector()[2]).collect();
        let eval = log_likelihood(&m, &ps, &data).unwrap();
        let interp = min_norm_interpolant(&m, &ps, &data).unwrap();
        prop_assert!((eval.quad_form - interp.squared_norm).abs() <= 1e-9 * eval.quad_form.abs().max(1.0));
    }

    #[test]
    fn conditional_variance_bounded_by_prior(seed in 0u64..1000, n in 1usize..20) {
        let ps = random_sphere(n + 1, seed).unwrap();
        let m = model(4.0, 10.0);
        let design = ps.prefix(n);
        let y = ps.get(n);
        let var = Conditioner::new(&m, &design).unwrap().variance(y).unwrap();
        let prior = m.covariance(y, y).unwrap();
        prop_assert!(var >= 0.0 && var <= prior * (1.0 + 1e-12));
    }

    #[test]
    fn gram_is_symmetric(seed in 0u64..1000, n in 2usize..30) {
        let ps = random_sphere(n, seed).unwrap();
        let g = gram_matrix(&model(3.0, 2.0), &ps).unwrap();
        prop_assert!(g.asymmetry() == 0.0);
    }
}
