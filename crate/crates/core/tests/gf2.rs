use jncc_core::gf2::{gaussian_solve, peel_solve, BitVec, Gf2Matrix, SolveStatus};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix(rows: usize, cols: usize, bits: &[bool]) -> Gf2Matrix {
    let mut m = Gf2Matrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m.set(r, c, bits[r * cols + c]);
        }
    }
    m
}

fn arb_matrix(max: usize) -> impl Strategy<Value = Gf2Matrix> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(any::<bool>(), r * c).prop_map(move |b| matrix(r, c, &b))
    })
}

/// Rows of weight exactly two, at least as many rows as columns.
fn weight2_rows(rows: usize, cols: usize, rng: &mut impl Rng) -> Gf2Matrix {
    let mut m = Gf2Matrix::zeros(rows, cols);
    for r in 0..rows {
        for c in sample(rng, cols, 2) {
            m.set(r, c, true);
        }
    }
    m
}

/// Full-rank, square, at most two ones per row: a random spanning forest
/// rooted at weight-1 rows, scrambled by row and column permutations.
fn full_rank_weight2(n: usize, rng: &mut impl Rng) -> Gf2Matrix {
    let mut m = Gf2Matrix::zeros(n, n);
    for r in 0..n {
        m.set(r, r, true);
        if r > 0 && rng.random_bool(0.7) {
            m.set(r, rng.random_range(0..r), true);
        }
    }
    let rp = sample(rng, n, n).into_vec();
    let cp = sample(rng, n, n).into_vec();
    m.select_rows(&rp).select_cols(&cp)
}

proptest! {
    #[test]
    fn rank_equals_transpose_rank(m in arb_matrix(24)) {
        prop_assert_eq!(m.rank(), m.transpose().rank());
    }

    #[test]
    fn solution_reproduces_rhs(m in arb_matrix(20), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<u8> = (0..m.cols()).map(|_| rng.random_range(0..2)).collect();
        let c = m.mul_vec(&BitVec::from_bits(&x));
        let out = gaussian_solve(&m, &c);
        if m.rank() == m.cols() {
            let sol = out.solution.expect("full column rank");
            prop_assert_eq!(m.mul_vec(&sol), c.clone());
            prop_assert_eq!(sol.to_bits(), x);
        } else {
            prop_assert_eq!(out.status, SolveStatus::RankDeficient);
        }
    }

    #[test]
    fn all_weight_two_rows_are_rank_deficient(cols in 2usize..40, extra in 0usize..20, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = weight2_rows(cols + extra, cols, &mut rng);
        prop_assert!(m.rank() < cols);
    }

    #[test]
    fn peeling_matches_elimination_on_weight_two(n in 1usize..60, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = full_rank_weight2(n, &mut rng);
        prop_assert_eq!(a.rank(), n);
        let c = BitVec::from_bits(&(0..n).map(|_| rng.random_range(0..2u8)).collect::<Vec<_>>());
        let p = peel_solve(&a, &c);
        let g = gaussian_solve(&a, &c);
        prop_assert!(p.is_unique());
        prop_assert_eq!(p.solution, g.solution);
    }
}
