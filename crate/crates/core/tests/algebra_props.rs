use num_rational::Ratio;
use proptest::prelude::*;
use rlc_core::code::{rng_for, sample_planted, sample_random_linear, LinearCode};
use rlc_core::gf::{coset_representatives, make_field, Elem, Field};
use rlc_core::linalg::{enumerate_subspace_reps, gaussian_binomial, span_dim, vector_from_index, Mat};
use rlc_core::typedist::{empirical_type, implicit_rarity_search, RarityVerdict, TypeDist};

const QS: [u32; 9] = [2, 3, 4, 5, 7, 8, 9, 16, 256];

fn mat_strategy(q: u32, max_rows: usize, max_cols: usize) -> impl Strategy<Value = Mat> {
    (1..=max_rows, 1..=max_cols, any::<u64>()).prop_map(move |(r, c, seed)| {
        let f = make_field(q).unwrap();
        let mut rng = rng_for(seed, 0);
        let rows: Vec<Vec<Elem>> = (0..r).map(|_| rlc_core::code::random_vector(&f, c, &mut rng)).collect();
        Mat::from_rows(&f, c, &rows).unwrap()
    })
}

fn elems(f: &Field) -> Vec<Elem> {
    f.elements().collect()
}

#[test]
fn field_axioms_exhaustive_small_orders() {
    for q in [2, 3, 4, 5, 7, 8, 9, 16] {
        let f = make_field(q).unwrap();
        let es = elems(&f);
        for &a in &es {
            assert_eq!(f.add(a, Elem::ZERO), a);
            assert_eq!(f.mul(a, Elem::ONE), a);
            assert_eq!(f.add(a, f.neg(a)), Elem::ZERO);
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), Elem::ONE);
            }
            for &b in &es {
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.mul(a, b), f.mul_schoolbook(a, b));
                for &c in &es {
                    assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
    }
}

#[test]
fn make_field_is_deterministic() {
    for q in QS {
        let (a, b) = (make_field(q).unwrap(), make_field(q).unwrap());
        assert_eq!(a.modulus(), b.modulus());
        assert_eq!(a.log_table(), b.log_table());
        assert_eq!(a.antilog_table(), b.antilog_table());
    }
}

#[test]
fn coset_partition_of_nonzero_elements() {
    for (ell, t) in [(2u32, 2u32), (2, 3), (2, 4), (3, 2), (4, 2)] {
        let f = make_field(ell.pow(t)).unwrap();
        let emb = f.subfield_embedding(ell).unwrap();
        let reps = coset_representatives(&f, &emb).unwrap();
        let mut seen = vec![0usize; f.order()];
        for i in 0..reps.len() {
            for x in reps.scaled_subfield(&f, i).into_iter().filter(|x| !x.is_zero()) {
                seen[x.index()] += 1;
            }
        }
        assert_eq!(seen[0], 0);
        assert!(seen[1..].iter().all(|&c| c == 1), "ell = {ell}, t = {t}");
    }
}

#[test]
fn subspace_representatives_are_distinct_and_counted() {
    for q in [2u32, 3, 4] {
        let f = make_field(q).unwrap();
        for n in 1..=4usize {
            for k in 1..=n {
                if gaussian_binomial(q as u128, n as u32, k as u32) > 400 {
                    continue;
                }
                let reps: Vec<Mat> = enumerate_subspace_reps(&f, k, n, 1 << 20).unwrap().collect();
                assert_eq!(reps.len() as u128, gaussian_binomial(q as u128, n as u32, k as u32));
                for (i, a) in reps.iter().enumerate() {
                    assert_eq!(a.rank(), k);
                    for b in &reps[i + 1..] {
                        let same = (0..k).all(|r| a.span_contains(b.row(r)).unwrap());
                        assert!(!same, "q = {q}, n = {n}, k = {k}");
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_field_axioms(qi in 0usize..QS.len(), a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
        let f = make_field(QS[qi]).unwrap();
        let q = f.order() as u32;
        let (a, b, c) = (f.elem(a % q).unwrap(), f.elem(b % q).unwrap(), f.elem(c % q).unwrap());
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.sub(f.add(a, b), b), a);
        if !b.is_zero() {
            prop_assert_eq!(f.mul(f.div(a, b).unwrap(), b), a);
        }
    }

    #[test]
    fn kernel_and_rank(m in prop_oneof![mat_strategy(2, 6, 8), mat_strategy(3, 5, 6), mat_strategy(4, 5, 6), mat_strategy(16, 4, 5)]) {
        let r = m.rref();
        prop_assert_eq!(r.rank, m.rank());
        prop_assert_eq!(r.mat.rank(), r.rank);
        let zero_rows = (0..r.mat.rows()).filter(|&i| r.mat.row(i).iter().all(|e| e.is_zero())).count();
        prop_assert_eq!(r.rank, m.rows() - zero_rows);
        let k = m.kernel_basis();
        prop_assert_eq!(k.rows() + r.rank, m.cols());
        for i in 0..k.rows() {
            prop_assert!(m.matvec(k.row(i)).unwrap().iter().all(|e| e.is_zero()));
        }
        if k.rows() > 0 {
            prop_assert!(k.is_full_rank());
        }
    }

    #[test]
    fn contains_matrix_matches_generator_span(q in prop_oneof![Just(2u32), Just(3), Just(4)], seed in any::<u64>(), cols in 1usize..4) {
        let f = make_field(q).unwrap();
        let code = sample_random_linear(&f, 7, Ratio::new(1, 2), seed, 0).unwrap();
        let mut rng = rng_for(seed, 1);
        let vs: Vec<Vec<Elem>> = (0..cols).map(|i| if i % 2 == 0 && code.dimension() > 0 { code.codeword(i as u128 + 1) } else { rlc_core::code::random_vector(&f, 7, &mut rng) }).collect();
        let m = Mat::from_cols(&f, 7, &vs).unwrap();
        let expected = vs.iter().all(|v| code.generator().span_contains(v).unwrap());
        prop_assert_eq!(code.contains_matrix(&m).unwrap(), expected);
    }

    #[test]
    fn planted_codes_contain_their_matrix(q in prop_oneof![Just(2u32), Just(3), Just(4)], seed in any::<u64>(), d in 1usize..4) {
        let f = make_field(q).unwrap();
        let mut rng = rng_for(seed, 2);
        let m = Mat::from_fn(&f, 10, d, |_, _| rlc_core::code::random_vector(&f, 1, &mut rng)[0]);
        let code = sample_planted(&m, Ratio::new(1, 2), seed, 0).unwrap();
        prop_assert!(code.contains_matrix(&m).unwrap());
    }

    #[test]
    fn data_processing_and_dimension(q in prop_oneof![Just(2u32), Just(3)], seed in any::<u64>(), len in 1usize..4, rows in 1usize..4) {
        let f = make_field(q).unwrap();
        let mut rng = rng_for(seed, 3);
        let n = 12;
        let m = Mat::from_fn(&f, n, len, |_, _| rlc_core::code::random_vector(&f, 1, &mut rng)[0]);
        let tau = empirical_type(&m).unwrap();
        let a = Mat::from_fn(&f, rows, len, |_, _| rlc_core::code::random_vector(&f, 1, &mut rng)[0]);
        let pushed = tau.pushforward(&a).unwrap();
        prop_assert!(pushed.entropy_q() <= tau.entropy_q() + 1e-12);
        prop_assert!(pushed.dim() <= tau.dim().min(a.rank()));
        let support: Vec<Vec<Elem>> = tau.support().iter().map(|(v, _)| v.clone()).collect();
        let images: Vec<Vec<Elem>> = support.iter().map(|v| a.matvec(v).unwrap()).collect();
        if span_dim(&f, rows, &images) == span_dim(&f, len, &support) {
            prop_assert_eq!(pushed.dim(), tau.dim());
        }
    }

    #[test]
    fn realize_then_empirical_is_identity(seed in any::<u64>(), counts in proptest::collection::vec(1usize..5, 1..5)) {
        let f = make_field(3).unwrap();
        let n: usize = counts.iter().sum();
        let mut m_rows = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            m_rows.extend(std::iter::repeat_n(vector_from_index(3, 2, i as u128), c));
        }
        let tau = empirical_type(&Mat::from_rows(&f, 2, &m_rows).unwrap()).unwrap();
        let m = tau.realize_matrix(n, seed, 0).unwrap();
        prop_assert_eq!(empirical_type(&m).unwrap(), tau);
    }

    #[test]
    fn rarity_search_is_sound(seed in any::<u64>(), gamma in 0.3f64..1.0) {
        let f = make_field(2).unwrap();
        let mut rng = rng_for(seed, 4);
        let m = Mat::from_fn(&f, 16, 3, |_, _| rlc_core::code::random_vector(&f, 1, &mut rng)[0]);
        let tau = empirical_type(&m).unwrap();
        let r = implicit_rarity_search(&tau, gamma, 1e-9, 1 << 20).unwrap();
        match r.verdict {
            RarityVerdict::Rare { witness, entropy, dim } => {
                let pushed = tau.pushforward(&witness).unwrap();
                prop_assert_eq!(pushed.dim(), dim);
                prop_assert!((pushed.entropy_q() - entropy).abs() < 1e-12);
                prop_assert!(entropy < gamma * dim as f64);
            }
            RarityVerdict::NotRare { min_ratio, .. } => {
                for _ in 0..100 {
                    let rows = 1 + (rlc_core::code::random_vector(&f, 2, &mut rng).iter().map(|e| e.index()).sum::<usize>()).min(2);
                    let a = Mat::from_fn(&f, rows, 3, |_, _| rlc_core::code::random_vector(&f, 1, &mut rng)[0]);
                    if !a.is_full_rank() {
                        continue;
                    }
                    let pushed = tau.pushforward(&a).unwrap();
                    if pushed.dim() > 0 {
                        prop_assert!(pushed.entropy_q() / pushed.dim() as f64 >= min_ratio - 1e-9);
                    }
                }
                prop_assert!(min_ratio >= gamma - 1e-9);
            }
        }
    }
}

#[test]
fn point_mass_type_has_dimension_zero() {
    let f = make_field(2).unwrap();
    let tau = TypeDist::point_mass(&f, vec![Elem::ZERO; 3]);
    assert_eq!(tau.dim(), 0);
    assert_eq!(tau.entropy_q(), 0.0);
    let code = LinearCode::from_parity_check(Mat::identity(&f, 3));
    assert_eq!(code.size(), 1);
}
