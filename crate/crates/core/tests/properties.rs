use proptest::prelude::*;

use pseudodist::distances::{d_delta, d_disk};
use pseudodist::domains::{domain_to_json, parse_domain_spec, DeltaMap, MultiPoly, Point};
use pseudodist::matkernel::{op_norm, CMatrix};
use pseudodist::schuragler::{
    extremal_function, random_realization, schwarz_pick_residual, DiskFunction,
};
use pseudodist::tuples::{drury_perturb, poly_of_matrices, sample_contractive_tuple};
use pseudodist::{rng_from_seed, C64};

fn disk_automorphism(a: C64, u: C64) -> impl Fn(C64) -> C64 {
    move |z| u * (z - a) / (C64::new(1.0, 0.0) - a.conj() * z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn polydisc_distance_is_automorphism_invariant(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let m = DeltaMap::polydisc(3);
        let z = m.sample_interior(&mut rng).unwrap();
        let w = m.sample_interior(&mut rng).unwrap();
        let a = m.sample_interior(&mut rng).unwrap();
        let maps: Vec<_> = a.coords().iter().enumerate()
            .map(|(i, &ai)| disk_automorphism(ai * 0.9, C64::from_polar(1.0, i as f64)))
            .collect();
        let image = |p: &Point| Point(p.coords().iter().zip(&maps).map(|(&x, f)| f(x)).collect());
        let before = d_delta(&m, &z, &w).unwrap();
        let after = d_delta(&m, &image(&z), &image(&w)).unwrap();
        prop_assert!((before - after).abs() <= 1e-9);
    }

    #[test]
    fn realizations_are_schwarz_pick_contractions(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        for m in [DeltaMap::ball(3), DeltaMap::annulus(0.35).unwrap()] {
            let (s, r) = m.shape();
            let f = DiskFunction::Realization(random_realization(s, r, 1, &mut rng).unwrap());
            let z = m.sample_interior(&mut rng).unwrap();
            let w = m.sample_interior(&mut rng).unwrap();
            prop_assert!(schwarz_pick_residual(&f, &m, &z, &w).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn extremal_functions_are_contractive_on_admissible_tuples(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let m = DeltaMap::cartan(1, 3);
        let z = m.sample_interior(&mut rng).unwrap();
        let w = m.sample_interior(&mut rng).unwrap();
        let f = extremal_function(&m, &z, &w).unwrap();
        let t = sample_contractive_tuple(&m, &mut rng).unwrap();
        let ft = t.apply_scalar(f.eval(t.z1()).unwrap(), f.eval(t.z2()).unwrap());
        prop_assert!(op_norm(&ft) <= 1.0 + 1e-9);
        prop_assert!(d_disk(f.eval(t.z1()).unwrap(), f.eval(t.z2()).unwrap()).unwrap() <= t.sin_theta() + 1e-9);
    }

    #[test]
    fn drury_output_supports_the_calculus(b in -2.0f64..2.0, c in -2.0f64..2.0, a in -0.5f64..0.5) {
        // A commuting nilpotent-plus-scalar pair: T¹ = aI + N, T² = cI + bN.
        let n = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let id = CMatrix::identity(2);
        let t1 = &id.scale(C64::new(a, 0.0)) + &n;
        let t2 = &id.scale(C64::new(c, 0.0)) + &n.scale(C64::new(b, 0.0));
        let eps = 1e-4;
        let t = drury_perturb(&[t1.clone(), t2.clone()], eps, false).unwrap();
        prop_assert!(t.is_generic());
        prop_assert!(op_norm(&(&t.coordinate(0) - &t1)) <= eps * (1.0 + 1e-8));
        prop_assert!(op_norm(&(&t.coordinate(1) - &t2)) <= eps * (1.0 + 1e-8));
        let p = MultiPoly::zero(2)
            .with_term(vec![2, 0], C64::new(1.0, 0.0))
            .with_term(vec![1, 1], C64::new(0.0, -1.0))
            .with_term(vec![0, 0], C64::new(0.25, 0.0));
        let via_calculus = t.apply_scalar(p.eval(t.z1()).unwrap(), p.eval(t.z2()).unwrap());
        let via_matrices = poly_of_matrices(&p, &t.coordinates());
        prop_assert!((&via_calculus - &via_matrices).max_abs() <= 1e-6);
    }
}

#[test]
fn json_round_trip_preserves_distances() {
    let mut rng = rng_from_seed(42);
    let maps = [
        DeltaMap::direct_sum(vec![DeltaMap::ball(2), DeltaMap::annulus(0.4).unwrap()]).unwrap(),
        DeltaMap::cartan(2, 3),
        DeltaMap::poly_matrix(
            2,
            (1, 2),
            vec![
                MultiPoly::coordinate(2, 0),
                MultiPoly::zero(2).with_term(vec![1, 1], C64::new(0.0, 1.0)),
            ],
            Some(vec![1.0, 1.0]),
        )
        .unwrap(),
    ];
    for m in maps {
        let back = parse_domain_spec(domain_to_json(&m).as_bytes()).unwrap();
        assert_eq!(back, m);
        let z = m.sample_interior(&mut rng).unwrap();
        let w = m.sample_interior(&mut rng).unwrap();
        assert_eq!(
            d_delta(&m, &z, &w).unwrap(),
            d_delta(&back, &z, &w).unwrap()
        );
    }
}
