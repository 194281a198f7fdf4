mod common;

use common::*;
use nalgebra::DMatrix;
use polar_coded::baselines::*;
use polar_coded::matrix::relative_error;
use polar_coded::{Block, Error};
use proptest::prelude::*;
use rand::Rng;

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|b| b.count_ones() as usize == k)
        .map(|b| (0..n).filter(|i| b >> i & 1 == 1).collect())
        .collect()
}

#[test]
fn mds_every_k_subset_decodes() {
    let mut r = rng(1);
    for (n, k) in [(4, 2), (8, 4), (8, 7), (12, 5), (16, 8), (16, 12)] {
        let code = MdsCode::with_points(n, k, PointSet::Chebyshev).unwrap();
        let data: Vec<Block> = (0..k).map(|_| random_block(2, 3, &mut r)).collect();
        let coded = mds_encode_blocks(&data, &code).unwrap();
        for s in subsets(n, k) {
            let outputs: Vec<(usize, Block)> = s.iter().map(|&i| (i, coded[i].clone())).collect();
            let got = mds_decode(&outputs, &code).unwrap();
            for (g, w) in got.iter().zip(&data) {
                assert!(relative_error(g, w) <= 1e-8, "n={n} k={k} subset {s:?}");
            }
        }
    }
}

#[test]
fn mds_matches_linear_solve_oracle() {
    let mut r = rng(2);
    let code = MdsCode::with_points(8, 4, PointSet::Chebyshev).unwrap();
    let data: Vec<Block> = (0..4).map(|_| random_block(1, 5, &mut r)).collect();
    let coded = mds_encode_blocks(&data, &code).unwrap();
    for s in subsets(8, 4) {
        let v = DMatrix::from_fn(4, 4, |i, j| code.points()[s[i]].powi(j as i32));
        let rhs = DMatrix::from_fn(4, 5, |i, c| coded[s[i]][[0, c]]);
        let sol = v.lu().solve(&rhs).unwrap();
        let outputs: Vec<(usize, Block)> = s.iter().map(|&i| (i, coded[i].clone())).collect();
        let got = mds_decode(&outputs, &code).unwrap();
        for (j, g) in got.iter().enumerate() {
            for c in 0..5 {
                assert!((g[[0, c]] - sol[(j, c)]).abs() < 1e-10);
            }
        }
    }
}

/// Worst relative round-trip error over a few output subsets, or infinity if
/// the solver refuses the system.
fn equispaced_error(n: usize, k: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let code = MdsCode::with_points(n, k, PointSet::Equispaced).unwrap();
    let data: Vec<Block> = (0..k).map(|_| random_block(1, 4, &mut r)).collect();
    let coded = mds_encode_blocks(&data, &code).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let picked = rand::seq::index::sample(&mut r, n, k).into_vec();
        let outputs: Vec<(usize, Block)> = picked.iter().map(|&i| (i, coded[i].clone())).collect();
        match mds_decode(&outputs, &code) {
            Ok(got) => {
                for (g, w) in got.iter().zip(&data) {
                    worst = worst.max(relative_error(g, w));
                }
            }
            Err(Error::Conditioning(_)) => return f64::INFINITY,
            Err(e) => panic!("{e}"),
        }
    }
    worst
}

#[test]
fn mds_conditioning() {
    let mid = equispaced_error(32, 16, 3);
    assert!(mid <= 1e-6, "k=16, n=32 equispaced error {mid:e}");
    assert!(equispaced_error(256, 128, 4) > equispaced_error(16, 8, 4));
}

#[test]
fn soliton_matches_reference_values() {
    // Independent evaluation of the standard formulas: R = 0.416, spike clamped
    // to 16 and carrying no extra mass since R < delta.
    let want = [
        0.0814664717136149,
        0.47226341677213124,
        0.16140932463375016,
        0.08269875517172828,
        0.05081570881594889,
        0.03467477635257387,
        0.025337438210367963,
        0.01943038426953023,
        0.01544486990766571,
        0.01262177497344633,
        0.01054444419880371,
        0.008968318000959444,
        0.007741968528108237,
        0.006767451673863315,
        0.005979072947149342,
        0.0038358238303584343,
    ];
    let got = robust_soliton(16, 0.03, 0.5).unwrap();
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-14);
    }
    // With R = 7.60 the spike sits at ceil(100 / R) = 14.
    let m = robust_soliton(100, 0.1, 0.05).unwrap();
    assert!((m[13] - 0.238585006408603).abs() < 1e-12);
    assert!(m[13] > m[12] && m[13] > m[14]);
    assert!((m[0] - 0.052974656596598356).abs() < 1e-12);
    assert!((m[1] - 0.33136760264932685).abs() < 1e-12);
}

/// Straightforward peeling: rescan all symbols until nothing changes.
fn naive_peel(lists: &[Vec<usize>], n_input: usize) -> bool {
    let mut known = vec![false; n_input];
    loop {
        let mut progress = false;
        for l in lists {
            let unknown: Vec<usize> = l.iter().copied().filter(|&s| !known[s]).collect();
            if unknown.len() == 1 {
                known[unknown[0]] = true;
                progress = true;
            }
        }
        if !progress {
            return known.iter().all(|&k| k);
        }
    }
}

#[test]
fn lt_stream_is_reproducible() {
    let mut r = rng(5);
    let data: Vec<Block> = (0..8).map(|_| random_block(2, 2, &mut r)).collect();
    let code = LtCode::robust(8, 99).unwrap();
    let a = lt_encode_blocks(&data, &code, 20).unwrap();
    let b = lt_encode_blocks(&data, &code, 20).unwrap();
    assert_eq!(a, b);
    for s in &a {
        assert_eq!(s.neighbors, code.neighbors(s.index));
    }
}

#[test]
fn lt_peeling_agrees_with_naive_decoder() {
    let mut r = rng(6);
    for (n_input, count, trials) in [(4, 12, 400), (8, 10, 300), (64, 83, 200)] {
        let mut successes = 0;
        for t in 0..trials {
            let code = LtCode::robust(n_input, t).unwrap();
            let data: Vec<Block> = (0..n_input).map(|_| random_block(1, 3, &mut r)).collect();
            let symbols = lt_encode_blocks(&data, &code, count).unwrap();
            let lists: Vec<Vec<usize>> = symbols.iter().map(|s| s.neighbors.clone()).collect();
            let want = naive_peel(&lists, n_input);
            let refs: Vec<&[usize]> = lists.iter().map(|l| l.as_slice()).collect();
            assert_eq!(lt_peelable(&refs, n_input), want);
            match lt_peel_decode(&symbols, n_input) {
                Some(got) => {
                    assert!(want);
                    successes += 1;
                    for (g, w) in got.iter().zip(&data) {
                        assert!((g - w).iter().all(|d| d.abs() < 1e-12));
                    }
                }
                None => assert!(!want),
            }
        }
        assert!(successes > 0, "n_input={n_input} never decoded");
    }
}

proptest! {
    #[test]
    fn lt_decodability_is_monotone(seed in any::<u64>(), n_input in 2usize..20, count in 1usize..40, keep in any::<u64>()) {
        let code = LtCode::robust(n_input, seed).unwrap();
        let lists: Vec<Vec<usize>> = (0..count as u64).map(|s| code.neighbors(s)).collect();
        let all: Vec<&[usize]> = lists.iter().map(|l| l.as_slice()).collect();
        let some: Vec<&[usize]> = lists.iter().enumerate().filter(|(i, _)| keep >> (i % 64) & 1 == 1).map(|(_, l)| l.as_slice()).collect();
        if lt_peelable(&some, n_input) {
            prop_assert!(lt_peelable(&all, n_input));
        }
    }

    #[test]
    fn soliton_normalized(n in 2usize..3000, c in 0.01f64..1.0, delta in 0.01f64..0.99) {
        let m = robust_soliton(n, c, delta).unwrap();
        prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(m.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn mds_random_subset_round_trip(n in 2usize..17, seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.random_range(1..=n);
        let code = MdsCode::with_points(n, k, PointSet::Chebyshev).unwrap();
        let data: Vec<Block> = (0..k).map(|_| random_block(2, 2, &mut r)).collect();
        let coded = mds_encode_blocks(&data, &code).unwrap();
        let picked = rand::seq::index::sample(&mut r, n, k).into_vec();
        let outputs: Vec<(usize, Block)> = picked.iter().map(|&i| (i, coded[i].clone())).collect();
        for (g, w) in mds_decode(&outputs, &code).unwrap().iter().zip(&data) {
            prop_assert!(relative_error(g, w) <= 1e-8);
        }
    }
}
