use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use sobolev_core::radial::{ad_statistic, ad_statistic_from_uniforms, GammaVariable};
use sobolev_core::sampling::uniform_sphere;
use sobolev_core::symmetry::fisher_combine;
use sobolev_core::{statistic, RadialLaw, RadialNull, RngStream, SphereSample, TangentFrame, WeightScheme};

fn schemes() -> impl Strategy<Value = WeightScheme> {
    prop_oneof![
        Just(WeightScheme::rayleigh()),
        Just(WeightScheme::bingham()),
        (3u32..6).prop_map(WeightScheme::KSobolev),
        Just(WeightScheme::hybrid()),
        (2u32..5).prop_map(WeightScheme::Finite),
        (2u32..5).prop_map(WeightScheme::DecayAdjusted),
    ]
}

/// Applies a product of three random Householder reflections to every row.
fn rotate(sample: &SphereSample, seed: u64) -> SphereSample {
    let p = sample.d() + 1;
    let mut rng = RngStream::new(seed, 99).rng();
    let mut data = sample.as_slice().to_vec();
    for _ in 0..3 {
        let v: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        for row in data.chunks_exact_mut(p) {
            let c = 2.0 * row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / vv;
            row.iter_mut().zip(&v).for_each(|(x, vi)| *x -= c * vi);
        }
    }
    SphereSample::normalized(data, sample.n(), sample.d()).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn statistic_is_rotation_invariant(seed in any::<u64>(), n in 2usize..25, d in 1usize..9, scheme in schemes()) {
        let mut rng = RngStream::new(seed, 0).rng();
        let x = uniform_sphere(&mut rng, n, d).unwrap();
        let a = statistic(&x, &scheme).unwrap();
        let b = statistic(&rotate(&x, seed), &scheme).unwrap();
        prop_assert!(close(a.raw_statistic, b.raw_statistic), "{} vs {}", a.raw_statistic, b.raw_statistic);
    }

    #[test]
    fn statistic_is_permutation_invariant(seed in any::<u64>(), n in 2usize..25, d in 1usize..9, scheme in schemes()) {
        let mut rng = RngStream::new(seed, 0).rng();
        let x = uniform_sphere(&mut rng, n, d).unwrap();
        let p = d + 1;
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        order.rotate_left((seed % n as u64) as usize);
        let data: Vec<f64> = order.iter().flat_map(|&i| x.row(i).to_vec()).collect();
        let y = SphereSample::new(data, n, d).unwrap();
        prop_assert_eq!(y.as_slice().len(), n * p);
        let a = statistic(&x, &scheme).unwrap();
        let b = statistic(&y, &scheme).unwrap();
        prop_assert!(close(a.raw_statistic, b.raw_statistic));
        prop_assert!(a.p_value >= 0.0 && a.p_value <= 1.0);
    }

    #[test]
    fn ad_is_invariant_under_monotone_maps(seed in any::<u64>(), n in 1usize..60, c in 0.01f64..100.0) {
        // scaling radii and the gamma scale together leaves every F(R_i) unchanged
        let law = |s| RadialLaw::Gamma { shape: 2.5, scale: s, variable: GammaVariable::Radius };
        let null = RadialNull::new(law(3.0), 7).unwrap();
        let mut rng = RngStream::new(seed, 1).rng();
        let r = null.sample(&mut rng, n).unwrap();
        let a = ad_statistic(&r, &null).unwrap();
        let scaled: Vec<f64> = r.iter().map(|x| x * c).collect();
        let b = ad_statistic(&scaled, &RadialNull::new(law(3.0 * c), 7).unwrap()).unwrap();
        prop_assert!(close(a, b));
        // reflection u -> 1 - u
        let u: Vec<f64> = r.iter().map(|&x| null.cdf(x).unwrap()).collect();
        let flipped: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
        prop_assert!((ad_statistic_from_uniforms(&u).unwrap() - ad_statistic_from_uniforms(&flipped).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn fisher_is_monotone(p1 in 1e-12f64..1.0, p2 in 1e-12f64..1.0, q in 1e-12f64..1.0) {
        let (g, p) = fisher_combine(p1, p2);
        prop_assert!(g >= 0.0 && (0.0..=1.0).contains(&p));
        let (g2, p_lower) = fisher_combine(p1 * q, p2);
        prop_assert!(g2 >= g - 1e-12 && p_lower <= p + 1e-12);
    }

    #[test]
    fn tangent_decomposition_round_trips(seed in any::<u64>(), d in 2usize..12) {
        let mut rng = RngStream::new(seed, 2).rng();
        let theta = uniform_sphere(&mut rng, 1, d).unwrap();
        let x = uniform_sphere(&mut rng, 1, d).unwrap();
        let frame = TangentFrame::new(theta.row(0)).unwrap();
        let (v, u) = frame.sign(x.row(0)).unwrap();
        let back = frame.compose(v, &u);
        for (a, b) in back.iter().zip(x.row(0)) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        prop_assert!((u.iter().map(|t| t * t).sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scheme_strings_round_trip(scheme in schemes()) {
        let text = scheme.to_string();
        prop_assert_eq!(text.parse::<WeightScheme>().unwrap(), scheme);
    }
}
