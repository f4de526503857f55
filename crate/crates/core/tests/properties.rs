use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secbeam_core::model::{complex_normal_vector, sample_channels};
use secbeam_core::outage::{erlang_tail, outage_lower, outage_upper, OutageQuery};
use secbeam_core::rates::{eve_outage_rate, psi_eve, user_outage_rate, zeta_user};
use secbeam_core::rootfind::{bisect_lower, bisect_upper, expand_bracket_integer};
use secbeam_core::{BeamformerSet, Regime, RunSeed, Scenario};

fn random_w(m: usize, nt: usize, seed: u64) -> BeamformerSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BeamformerSet { w: (0..m).map(|_| complex_normal_vector(&mut rng, nt)).collect() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn erlang_tail_is_a_decreasing_probability(m in 1usize..12, y in 0.0f64..60.0, dy in 0.0f64..5.0) {
        let p = erlang_tail(m, y);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(erlang_tail(m, y + dy) <= p + 1e-15);
        prop_assert!(erlang_tail(m + 1, y) >= p - 1e-15);
    }

    #[test]
    fn outage_bounds_are_ordered_and_monotone_in_rate(
        norms in prop::collection::vec(0.01f64..10.0, 1..7),
        a in 0.1f64..100.0,
        b in 0.1f64..10.0,
        delta in 1e-4f64..1.0,
        frac in 0.01f64..0.99,
        grow in 1.0f64..1.5,
    ) {
        let q = OutageQuery { a, b, r: frac * a / b, delta, norms };
        prop_assert!(outage_lower(&q) <= outage_upper(&q) + 1e-15);
        let q2 = q.with_rate(q.r * grow);
        prop_assert!(outage_lower(&q2) >= outage_lower(&q) - 1e-15);
        prop_assert!(outage_upper(&q2) >= outage_upper(&q) - 1e-15);
        prop_assert_eq!(outage_upper(&q.with_rate(a / b * (1.0 + 1e-12))), 1.0);
    }

    #[test]
    fn bisection_contracts(root in -50.0f64..50.0, slope in 0.01f64..100.0, eps_b in 1e-12f64..1e-3) {
        let f = |x: f64| Ok(slope * (x - root) + (x - root).powi(3));
        let b = secbeam_core::rootfind::Bracket::new(f, root - 60.0, root + 70.0).unwrap();
        let up = bisect_upper(f, b, eps_b).unwrap();
        let v = f(up).unwrap();
        prop_assert!((0.0..=eps_b).contains(&v));
        let lo = bisect_lower(f, b, eps_b).unwrap();
        let v = f(lo).unwrap();
        prop_assert!((-eps_b..=0.0).contains(&v));
    }

    #[test]
    fn integer_expansion_brackets_the_root(root in 1e-3f64..1e3, x0 in 1e-2f64..1e2) {
        let f = |x: f64| Ok(x.ln() - root.ln());
        let b = expand_bracket_integer(f, x0).unwrap();
        prop_assert!(b.lo <= root && root <= b.hi);
        prop_assert!(b.f_lo <= 0.0 && b.f_hi >= 0.0);
    }

    #[test]
    fn beamformer_real_roundtrip(m in 1usize..5, nt in 1usize..6, seed in any::<u64>()) {
        let w = random_w(m, nt, seed);
        prop_assert_eq!(BeamformerSet::from_real(&w.to_real(), m, nt), w);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn outage_roots_meet_their_contracts(m in 1usize..5, seed in any::<u64>(), delta in 1e-4f64..0.1, eps in 0.02f64..0.5) {
        let mut sc = Scenario::simulation_defaults(m, Regime::UserOutage, 20.0);
        sc.delta = delta;
        sc.eps_ev = eps;
        sc.eps_user = eps;
        let ch = sample_channels(&sc, RunSeed(seed));
        let w = random_w(m, sc.nt, seed.wrapping_add(1));
        let eps_b = 1e-9;
        for i in 0..m {
            let r = eve_outage_rate(&w, &ch, &sc, i, eps_b).unwrap();
            let psi = psi_eve(&w, &ch, &sc, i, r).unwrap();
            prop_assert!((0.0..=eps_b).contains(&psi), "psi = {}", psi);
            let big_r = user_outage_rate(&w, &ch, &sc, i, eps_b).unwrap();
            let zeta = zeta_user(&w, &ch, &sc, i, big_r).unwrap();
            prop_assert!((-eps_b..=0.0).contains(&zeta), "zeta = {}", zeta);
        }
    }
}

#[test]
fn unit_conversions() {
    assert!((secbeam_core::nats_to_bits(std::f64::consts::LN_2) - 1.0).abs() < 1e-15);
    assert!((secbeam_core::see_to_bits_per_joule(std::f64::consts::LN_2) - 1e3).abs() < 1e-9);
}
