//! Property tests for the algebraic invariants that must hold on every
//! input, not just the worked examples: rank bookkeeping, canonical
//! subspaces, Jordan-type stability, pairing dimension laws, construction
//! dimension laws, and serialization round trips.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use demuskin_core::cohomology;
use demuskin_core::constructions::{build, ConstructionTree, LeafKind, PLocalVariant};
use demuskin_core::cp_modules::CpModule;
use demuskin_core::fp_linalg::Subspace;
use demuskin_core::pairing::Pairing;
use demuskin_core::propp::{demuskin_presentation, DemuskinKind, ProPPresentation};
use demuskin_core::{FpMatrix, Prime};

fn small_prime() -> impl Strategy<Value = Prime> {
    prop_oneof![Just(2u32), Just(3), Just(5)].prop_map(|v| Prime::new(v).unwrap())
}

fn matrix(p: Prime, rows: usize, cols: usize, entries: &[i64]) -> FpMatrix {
    let mut m = FpMatrix::zeros(p, rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m.set(r, c, entries[r * cols + c].rem_euclid(p.get() as i64) as u32);
        }
    }
    m
}

proptest! {
    /// rank + dim kernel = number of columns, for arbitrary matrices.
    #[test]
    fn rank_nullity(
        p in small_prime(),
        rows in 0usize..5,
        cols in 0usize..5,
        entries in proptest::collection::vec(-7i64..7, 25),
    ) {
        let m = matrix(p, rows, cols, &entries);
        prop_assert_eq!(m.rank() + m.kernel_basis().dim(), cols);
        prop_assert_eq!(m.row_space().dim(), m.rank());
        prop_assert_eq!(m.transpose().column_space().dim(), m.row_space().dim());
    }

    /// A subspace and its canonical complement intersect trivially and
    /// together span the ambient space.
    #[test]
    fn complement_is_a_direct_summand(
        p in small_prime(),
        ambient in 0usize..5,
        spanning in proptest::collection::vec(proptest::collection::vec(-7i64..7, 0..5), 0..4),
    ) {
        let vectors: Vec<Vec<u32>> = spanning
            .iter()
            .map(|v| {
                (0..ambient)
                    .map(|i| v.get(i).copied().unwrap_or(0).rem_euclid(p.get() as i64) as u32)
                    .collect()
            })
            .collect();
        let s = Subspace::from_spanning(p, ambient, &vectors);
        let full = Subspace::full(p, ambient);
        let c = s.complement_in(&full).unwrap();
        prop_assert_eq!(s.intersect(&c).unwrap().dim(), 0);
        prop_assert_eq!(s.sum(&c).unwrap().dim(), ambient);
        prop_assert_eq!(s.dim() + c.dim(), ambient);
    }

    /// Jordan types survive the round trip through a module and any
    /// change of basis; parts sum to the dimension and stay ≤ p.
    #[test]
    fn jordan_type_is_a_basis_invariant(
        p in small_prime(),
        raw_parts in proptest::collection::vec(1usize..6, 0..4),
        seed in any::<u64>(),
    ) {
        let pr = p.get() as usize;
        let mut parts: Vec<usize> = raw_parts.iter().map(|&k| 1 + (k - 1) % pr).collect();
        parts.sort_unstable();
        let m = CpModule::from_jordan_type(p, &parts).unwrap();
        prop_assert_eq!(m.jordan_type(), parts.clone());
        prop_assert_eq!(m.dim(), parts.iter().sum::<usize>());
        prop_assert_eq!(m.jordan_type().len(), m.fixed_submodule().dim());

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = FpMatrix::random_invertible(p, m.dim(), &mut rng);
        let conj = m.conjugate(&g).unwrap();
        prop_assert_eq!(conj.jordan_type(), parts);
        prop_assert_eq!(
            conj.check_fixednorm_identity(),
            m.check_fixednorm_identity()
        );
    }

    /// For any basis-value table and any element a:
    /// dim Q(a) + dim N(a) = h, and both are invariant under scaling a.
    #[test]
    fn value_group_and_radical_dimensions(
        p in small_prime(),
        h in 1usize..4,
        q in 0usize..3,
        entries in proptest::collection::vec(-7i64..7, 48),
        a_raw in proptest::collection::vec(0u32..5, 4),
        lambda in 1u32..5,
    ) {
        let table: Vec<u32> =
            entries.iter().take(h * h * q).map(|&e| e.rem_euclid(p.get() as i64) as u32).collect();
        let pairing = Pairing::from_table(p, h, q, vec![0; h], table).unwrap();
        let a: Vec<u32> = a_raw.iter().take(h).map(|&e| e % p.get()).collect();

        let value = pairing.value_group(&a).unwrap();
        let radical = pairing.radical_of(&a).unwrap();
        prop_assert_eq!(value.dim() + radical.dim(), h);

        let lam = lambda % p.get();
        if lam != 0 {
            let scaled: Vec<u32> = a.iter().map(|&e| e * lam % p.get()).collect();
            prop_assert_eq!(pairing.value_group(&scaled).unwrap(), value);
            prop_assert_eq!(pairing.radical_of(&scaled).unwrap(), radical);
        }
    }

    /// Built pairings match the dimensions the tree predicts.
    #[test]
    fn builds_match_tree_dimensions(
        p in small_prime(),
        tree in tree_strategy(),
    ) {
        let pairing = build(p, &tree).unwrap();
        let (h, q) = tree.dims();
        prop_assert_eq!(pairing.h_dim(), h);
        prop_assert_eq!(pairing.q_dim(), q);
    }

    /// Generated data are valid, satisfy the dimension corollary, and
    /// stay valid under further conjugation.
    #[test]
    fn generated_data_remain_valid_under_conjugation(
        p in small_prime(),
        x in 0usize..3,
        y in 0usize..3,
        seed in any::<u64>(),
    ) {
        let datum = cohomology::generate(p, x, y, seed);
        prop_assert!(datum.validate().is_empty());
        prop_assert!(datum.check_corollary().unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let g_m = FpMatrix::random_invertible(p, datum.module().dim(), &mut rng);
        let g_w = FpMatrix::random_invertible(p, datum.w_dim(), &mut rng);
        let conj = datum.conjugate(&g_m, &g_w).unwrap();
        prop_assert!(conj.validate().is_empty());
        prop_assert_eq!(conj.a_space().dim(), datum.a_space().dim());
        prop_assert_eq!(conj.module().jordan_type(), datum.module().jordan_type());
    }

    /// JSON round trips reproduce modules, pairings and presentations
    /// exactly, and serialization is stable across repeated calls.
    #[test]
    fn serialization_round_trips(
        p in small_prime(),
        raw_parts in proptest::collection::vec(1usize..6, 0..4),
        genus in 1usize..4,
    ) {
        let pr = p.get() as usize;
        let parts: Vec<usize> = raw_parts.iter().map(|&k| 1 + (k - 1) % pr).collect();
        let m = CpModule::from_jordan_type(p, &parts).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        prop_assert_eq!(&serde_json::to_string(&m).unwrap(), &text);
        let back: CpModule = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, m);

        let pres = demuskin_presentation(p, DemuskinKind::Surface { genus }).unwrap();
        let text = serde_json::to_string(&pres).unwrap();
        let back: ProPPresentation = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, pres);
    }

    /// Pairing JSON round trips, including the distinguished element for
    /// p = 2.
    #[test]
    fn pairing_serialization_round_trips(
        h in 1usize..3,
        q in 0usize..3,
        entries in proptest::collection::vec(0u32..2, 12),
        minus_raw in proptest::collection::vec(0u32..2, 3),
    ) {
        let p = Prime::new(2).unwrap();
        let table: Vec<u32> = entries.iter().take(h * h * q).copied().collect();
        let minus_one: Vec<u32> = minus_raw.iter().take(h).copied().collect();
        let pairing = Pairing::from_table(p, h, q, minus_one, table).unwrap();
        let text = serde_json::to_string(&pairing).unwrap();
        let back: Pairing = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, pairing);
    }
}

/// Trees of depth ≤ 2 over leaves valid at every prime.
fn tree_strategy() -> impl Strategy<Value = ConstructionTree> {
    let leaf = prop_oneof![
        Just(ConstructionTree::leaf(LeafKind::Trivial)),
        (1usize..3).prop_map(|h| ConstructionTree::leaf(LeafKind::TotallyDegenerate { h_dim: h })),
        Just(ConstructionTree::leaf(LeafKind::PLocal {
            h_dim: 2,
            variant: PLocalVariant::Symplectic,
        })),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(l, r)| ConstructionTree::product(l, r)),
            (inner, 1usize..3).prop_map(|(c, t)| ConstructionTree::extension(c, t)),
        ]
    })
}
