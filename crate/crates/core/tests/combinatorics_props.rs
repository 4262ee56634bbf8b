use num_rational::Ratio;
use proptest::prelude::*;
use rlc_core::badlists::{collision_bound, count_entropy, tau_list_decoding, LdParams, LrConstruction, LrParams};
use rlc_core::code::{hamming_distance, rng_for, sample_random_linear, LinearCode};
use rlc_core::decodability::{
    check_avg_radius, check_list_decoding, max_list_size, min_avg_radius, verify_witness, Caps, Claim,
};
use rlc_core::gf::make_field;
use rlc_core::linalg::vector_from_index;
use rlc_core::mc::{find_contained, in_type_class};
use rlc_core::potential::{
    check_doubling, check_entropy_sum, choose_lambda_at_rate, default_list_size, next_potentials, potential_s, BinCode, Landscape,
    PotentialError, PotentialParams, DEFAULT_SPACE_CAP,
};
use rlc_core::typedist::h2;

fn caps() -> Caps {
    Caps::default()
}

fn brute_min_total(code: &LinearCode, l: usize) -> usize {
    let words = code.codeword_list(1 << 20).unwrap();
    let q = code.field().order();
    let n = code.n();
    let mut best = usize::MAX;
    for zi in 0..(q as u128).pow(n as u32) {
        let z = vector_from_index(q, n, zi);
        let d: Vec<usize> = words.iter().map(|w| hamming_distance(w, &z).unwrap()).collect();
        let mut subset: Vec<usize> = (0..l).collect();
        loop {
            best = best.min(subset.iter().map(|&i| d[i]).sum());
            let mut i = l;
            while i > 0 && subset[i - 1] == words.len() - l + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            subset[i - 1] += 1;
            for j in i..l {
                subset[j] = subset[j - 1] + 1;
            }
        }
    }
    best
}

fn potential_params(n: usize, k: usize) -> PotentialParams {
    let p = Ratio::new(1, 10);
    let rate = k as f64 / n as f64;
    let eps = 1.0 - h2(0.1) - rate;
    let lam = choose_lambda_at_rate(p, rate, eps, n, default_list_size(0.1, eps)).unwrap();
    PotentialParams::with_dimension(n, p, k, lam.lambda, None).unwrap()
}

fn random_code(n: usize, dim: usize, seed: u64) -> BinCode {
    let mut rng = rng_for(seed, 9);
    let basis: Vec<u64> = (0..dim).map(|_| rand::Rng::random::<u64>(&mut rng) & ((1 << n) - 1)).collect();
    BinCode::from_basis(n, &basis)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn collision_bound_below_entropy(ns in proptest::collection::vec(0u64..40, 1..12)) {
        prop_assume!(ns.iter().sum::<u64>() > 0);
        prop_assert!(collision_bound(&ns).unwrap() <= count_entropy(&ns).unwrap() + 1e-12);
    }

    #[test]
    fn list_decoding_type_is_shift_invariant(q in prop_oneof![Just(2u32), Just(3)], l in 1usize..4, pn in 1i64..4) {
        let params = LdParams::new(q, Ratio::new(pn, 8), l).unwrap();
        let tau = tau_list_decoding(&params, 1 << 20).unwrap();
        let f = tau.field().clone();
        for beta in f.elements() {
            let shifted = rlc_core::typedist::TypeDist::from_weighted(
                &f,
                l,
                tau.support().iter().map(|(v, p)| (v.iter().map(|&x| f.add(x, beta)).collect(), p.clone())),
            ).unwrap();
            prop_assert_eq!(&shifted, &tau);
        }
    }

    #[test]
    fn checker_monotonicity_and_consistency(seed in any::<u64>(), n in 5usize..9, l in 1usize..4, pn in 0i64..5) {
        let f = make_field(2).unwrap();
        let code = sample_random_linear(&f, n, Ratio::new(1, 2), seed, 0).unwrap();
        prop_assume!(code.size() >= 4);
        let p = Ratio::new(pn, 10);
        let lo = max_list_size(&code, p, &caps()).unwrap().max;
        let hi = max_list_size(&code, p + Ratio::new(1, 10), &caps()).unwrap().max;
        prop_assert!(lo <= hi);
        let a = min_avg_radius(&code, l, &caps()).unwrap().min;
        let b = min_avg_radius(&code, l + 1, &caps()).unwrap().min;
        prop_assert!(b >= a, "min average radius must not decrease with L");
        let ar = check_avg_radius(&code, p, l, &caps()).unwrap();
        let ld = check_list_decoding(&code, p, l, &caps()).unwrap();
        let strict = min_avg_radius(&code, l, &caps()).unwrap().total_distance as i64;
        if Ratio::from_integer(strict) > p * Ratio::from_integer((l * n) as i64) {
            prop_assert!(ar.satisfied && ld.satisfied);
        }
        if ar.satisfied && !ld.satisfied {
            prop_assert_eq!(Ratio::from_integer(strict), p * Ratio::from_integer((l * n) as i64));
        }
        for (v, claim) in [(&ar, Claim::AvgRadius { p, l }), (&ld, Claim::ListDecoding { p, l })] {
            if let Some(w) = &v.witness {
                prop_assert!(verify_witness(Some(&code), w, claim).unwrap());
            }
        }
    }

    #[test]
    fn reduction_matches_subset_brute_force(seed in any::<u64>(), n in 4usize..8, l in 1usize..4) {
        let f = make_field(2).unwrap();
        let code = sample_random_linear(&f, n, Ratio::new(1, 2), seed, 0).unwrap();
        prop_assume!(code.size() >= l as u128);
        prop_assert_eq!(min_avg_radius(&code, l, &caps()).unwrap().total_distance, brute_min_total(&code, l));
    }

    #[test]
    fn weights_are_translation_invariant(seed in any::<u64>(), dim in 1usize..4) {
        let params = potential_params(10, 3);
        let code = random_code(10, dim, seed);
        let land = Landscape::new(&code, &params, DEFAULT_SPACE_CAP).unwrap();
        for &c in code.words() {
            for x in (0..1024u64).step_by(37) {
                prop_assert!((land.a[x as usize] - land.a[(x ^ c) as usize]).abs() <= 1e-9 * land.a[x as usize]);
            }
        }
        let s = potential_s(&code, &params, DEFAULT_SPACE_CAP).unwrap();
        prop_assert!(s.s >= 1.0);
        prop_assert!(s.s >= s.coset_lower_bound * (1.0 - 1e-12));
    }

    #[test]
    fn doubling_lemma(seed in any::<u64>(), dim in 0usize..4, b in 0u64..4096) {
        let params = potential_params(12, 4);
        let code = random_code(12, dim, seed);
        let r = check_doubling(&code, b, &params, DEFAULT_SPACE_CAP).unwrap();
        prop_assert!(r.l_bound_holds && r.a_bound_holds);
        prop_assert_eq!(r.equality_everywhere, !code.contains(b));
        prop_assert!(r.passes);
    }

    #[test]
    fn next_step_potentials_match_direct(seed in any::<u64>(), dim in 0usize..3) {
        let params = potential_params(10, 3);
        let code = random_code(10, dim, seed);
        let land = Landscape::new(&code, &params, DEFAULT_SPACE_CAP).unwrap();
        let next = next_potentials(&code, &land);
        for b in (0..1024u64).step_by(53) {
            let direct = Landscape::new(&code.extend(b), &params, DEFAULT_SPACE_CAP).unwrap().s;
            prop_assert!((next[b as usize] - direct).abs() <= 1e-9 * direct);
        }
    }

    #[test]
    fn entropy_sum_rejects_words_outside_the_ball(seed in any::<u64>(), x in 0u64..1024) {
        let params = potential_params(10, 3);
        let code = random_code(10, 3, seed);
        for &y in code.words() {
            let d = (x ^ y).count_ones() as usize;
            let r = check_entropy_sum(&code, x, &[y], &params);
            if params.in_open_ball(d) {
                prop_assert!(r.is_ok());
            } else {
                prop_assert!(matches!(r, Err(PotentialError::SubsetOutOfBall { .. })), "expected SubsetOutOfBall");
            }
        }
    }

    #[test]
    fn containment_witness_is_valid(seed in any::<u64>()) {
        let f = make_field(2).unwrap();
        let params = LdParams::new(2, Ratio::new(1, 4), 2).unwrap();
        let tau = tau_list_decoding(&params, 1 << 20).unwrap();
        let code = sample_random_linear(&f, 10, Ratio::new(1, 2), seed, 0).unwrap();
        if let Some(m) = find_contained(&tau, &code, 1 << 20, 1 << 26).unwrap() {
            prop_assert!(in_type_class(&tau, &m));
            prop_assert!(code.contains_matrix(&m).unwrap());
        }
    }
}

#[test]
fn list_recovery_support_size_identity() {
    for (ell, t, d) in [(2u32, 2u32, 2usize), (2, 2, 3), (2, 3, 3), (3, 2, 2)] {
        let params = LrParams::new(Ratio::new(0, 1), ell, t, d).unwrap();
        let c = LrConstruction::new(&params, 1 << 20).unwrap();
        let q = ell.pow(t) as usize;
        let expected = (q - 1) / (ell as usize - 1) * ((ell as usize).pow(d as u32) - 1) + 1;
        assert_eq!(c.tau(1 << 20).unwrap().support_size(), expected, "ell = {ell}, t = {t}, D = {d}");
    }
}

#[test]
fn zero_code_potential_respects_closed_form_on_a_grid() {
    for n in [10usize, 12, 14] {
        for k in 2..=4usize {
            for frac in [0.2, 0.5, 0.9] {
                let p = Ratio::new(1, 10);
                let rate = k as f64 / n as f64;
                let eps = 1.0 - h2(0.1) - rate;
                let lam = rlc_core::potential::lambda_for_eta(p, rate, eps * frac).unwrap();
                let params = PotentialParams::with_dimension(n, p, k, lam, None).unwrap();
                let s = potential_s(&BinCode::zero(n), &params, DEFAULT_SPACE_CAP).unwrap().s;
                assert!(s <= params.s0_bound(), "n = {n}, k = {k}, eta = {}", params.eta);
            }
        }
    }
}

#[test]
fn entropy_sum_brute_force_over_subsets() {
    let n = 10;
    let p = Ratio::new(1, 10);
    let rate = 0.3;
    let eps = 1.0 - h2(0.1) - rate;
    let lam = rlc_core::potential::lambda_for_eta(p, rate, eps * 0.5).unwrap();
    let params = PotentialParams::with_dimension(n, p, 3, lam, None).unwrap();
    let mut tested = 0;
    for seed in 0..20 {
        let code = random_code(n, 3, seed);
        if code.dim() < 3 || potential_s(&code, &params, DEFAULT_SPACE_CAP).unwrap().s > 2.0 {
            continue;
        }
        tested += 1;
        for x in 0..(1u64 << n) {
            let ball: Vec<u64> = code.words().iter().copied().filter(|&y| params.in_open_ball((x ^ y).count_ones() as usize)).collect();
            for mask in 0..(1u32 << ball.len()) {
                let d: Vec<u64> = (0..ball.len()).filter(|&i| mask >> i & 1 == 1).map(|i| ball[i]).collect();
                assert!(check_entropy_sum(&code, x, &d, &params).unwrap().holds, "seed {seed}, x {x}, D {d:?}");
            }
        }
    }
    assert!(tested > 0);
}

#[test]
fn empty_list_and_self_subset_cases() {
    let params = potential_params(10, 3);
    let code = random_code(10, 3, 1);
    let r = check_entropy_sum(&code, 0, &[], &params).unwrap();
    assert!(r.rhs < 0.0 && r.lhs == 0.0);
    let r = check_entropy_sum(&code, 0, &[0], &params).unwrap();
    assert!((r.rhs - (-params.eta * (1.0 - params.rate) - (1.0 + params.eta) / 10.0)).abs() < 1e-12);
}
