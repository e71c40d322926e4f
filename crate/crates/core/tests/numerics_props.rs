use proptest::prelude::*;

use weylflow::numerics::{eigh, eigh_window, BlockTridiagonal, HermitianMatrix, Tridiagonal, C64};

fn band(block: usize, n_blocks: usize, entries: &[f64]) -> BlockTridiagonal {
    let bb = block * block;
    let mut it = entries.iter().copied().cycle();
    let mut diag = vec![C64::new(0.0, 0.0); n_blocks * bb];
    for j in 0..n_blocks {
        for r in 0..block {
            diag[j * bb + r * block + r] = C64::new(it.next().unwrap(), 0.0);
            for c in r + 1..block {
                let z = C64::new(it.next().unwrap(), it.next().unwrap());
                diag[j * bb + r * block + c] = z;
                diag[j * bb + c * block + r] = z.conj();
            }
        }
    }
    let upper = (0..(n_blocks - 1) * bb)
        .map(|_| C64::new(it.next().unwrap(), it.next().unwrap()))
        .collect();
    BlockTridiagonal::new(block, diag, upper).unwrap()
}

fn dense_values(b: &BlockTridiagonal) -> Vec<f64> {
    let h = HermitianMatrix::from_blocks(b.clone());
    let d = HermitianMatrix::from_dense(h.dim(), h.to_dense()).unwrap();
    eigh(&d).unwrap().values
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn banded_window_matches_dense(
        block in 1usize..4,
        n_blocks in 3usize..14,
        entries in prop::collection::vec(-2.0f64..2.0, 40),
        lo in -2.0f64..0.0,
        width in 0.5f64..3.0,
    ) {
        let b = band(block, n_blocks, &entries);
        let hi = lo + width;
        let all = dense_values(&b);
        // Skip windows with an eigenvalue on the edge.
        prop_assume!(all.iter().all(|v| (v - lo).abs() > 1e-6 && (v - hi).abs() > 1e-6));
        let expected: Vec<f64> = all.into_iter().filter(|v| *v > lo && *v < hi).collect();
        let h = HermitianMatrix::from_blocks(b);
        let got = eigh_window(&h, lo, hi).unwrap();
        prop_assert_eq!(got.len(), expected.len());
        for (x, y) in got.values.iter().zip(&expected) {
            prop_assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
        }
        prop_assert!(got.max_residual(&h) < 1e-8);
    }

    #[test]
    fn tridiagonal_reduction_preserves_the_spectrum(
        block in 1usize..4,
        n_blocks in 3usize..14,
        entries in prop::collection::vec(-2.0f64..2.0, 40),
        sigma in -3.0f64..3.0,
    ) {
        let b = band(block, n_blocks, &entries);
        let all = dense_values(&b);
        prop_assume!(all.iter().all(|v| (v - sigma).abs() > 1e-8));
        let t = Tridiagonal::from_band(&b);
        prop_assert_eq!(t.dim(), b.dim());
        prop_assert_eq!(t.count_below(sigma), all.iter().filter(|v| **v < sigma).count());
        let bound = t.norm_bound() + 1.0;
        let vals = t.window_values(-bound, bound);
        prop_assert_eq!(vals.len(), all.len());
        for (x, y) in vals.iter().zip(&all) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}
