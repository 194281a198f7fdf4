mod common;

use common::*;
use ndarray::Array2;
use polar_coded::matrix::{relative_error, PartitionedMatrix};
use polar_coded::polar::{
    check_decodability, decode, decode_matvec, decode_with_stats, encode, encode_counted, try_decode,
    IndicatorVector,
};
use polar_coded::{Block, CodeConstruction};
use proptest::prelude::*;
use rand::Rng;

fn constructions(n: usize) -> Vec<CodeConstruction> {
    (1..n).map(|k| CodeConstruction::new(n, 0.5, k).unwrap()).collect()
}

fn outputs_for(coded: &[Block], avail: &[bool]) -> Vec<(usize, Block)> {
    coded
        .iter()
        .enumerate()
        .filter(|(w, _)| avail[*w])
        .map(|(w, b)| (w, b.clone()))
        .collect()
}

/// Checker verdict, decode attempt and the rank oracle agree; accepted
/// patterns reproduce `A x`.
fn check_pattern(c: &CodeConstruction, a: &Block, x: &Block, coded_ax: &[Block], avail: &[bool]) {
    let verdict = check_decodability(&IndicatorVector(avail.to_vec()), c).unwrap();
    assert_eq!(verdict, sc_decodable_by_rank(c, avail), "rank oracle, pattern {avail:?}");
    let outputs = outputs_for(coded_ax, avail);
    if outputs.is_empty() {
        assert!(!verdict);
        return;
    }
    let attempt = try_decode(c, outputs.clone()).unwrap();
    assert_eq!(verdict, attempt.is_some(), "decode attempt, pattern {avail:?}");
    if verdict {
        let got = decode_matvec(c, outputs, a.nrows()).unwrap();
        let err = relative_error(&got, &a.dot(x));
        assert!(err <= 1e-10, "relative error {err} for {avail:?}");
    }
}

#[test]
fn exhaustive_small_codes() {
    let mut rng = rng(1);
    for n in [2usize, 4, 8] {
        for c in constructions(n) {
            let a = random_block(3 * c.n_data() + 1, 5, &mut rng);
            let x = random_block(5, 2, &mut rng);
            let coded = encode(&c, &PartitionedMatrix::split_rows(&a, c.n_data()).unwrap()).unwrap();
            let coded_ax: Vec<Block> = coded.iter().map(|b| b.dot(&x)).collect();
            for bits in 0..1u64 << n {
                check_pattern(&c, &a, &x, &coded_ax, &mask(n, bits));
            }
        }
    }
}

#[test]
fn sampled_sixteen_worker_patterns() {
    let mut rng = rng(2);
    let c = CodeConstruction::from_rate(16, 0.375).unwrap();
    let a = random_block(40, 6, &mut rng);
    let x = random_block(6, 3, &mut rng);
    let coded = encode(&c, &PartitionedMatrix::split_rows(&a, c.n_data()).unwrap()).unwrap();
    let coded_ax: Vec<Block> = coded.iter().map(|b| b.dot(&x)).collect();
    for _ in 0..1000 {
        let avail: Vec<bool> = (0..16).map(|_| rng.random_bool(0.7)).collect();
        check_pattern(&c, &a, &x, &coded_ax, &avail);
    }
}

#[test]
fn accepted_patterns_agree_with_dense_solve() {
    let mut rng = rng(3);
    let c = CodeConstruction::new(8, 0.5, 4).unwrap();
    let data: Vec<Block> = (0..4).map(|_| random_block(2, 3, &mut rng)).collect();
    let coded = polar_coded::polar::encode_blocks(&c, &data).unwrap();
    for bits in 0..256u64 {
        let avail = mask(8, bits);
        let outputs = outputs_for(&coded, &avail);
        if outputs.is_empty() || !check_decodability(&IndicatorVector(avail.clone()), &c).unwrap() {
            continue;
        }
        // A pattern the decoder accepts always determines the data.
        let dense = dense_decode(&c, &outputs).expect("accepted pattern has full rank");
        for (got, want) in decode(&c, outputs).unwrap().iter().zip(&dense) {
            assert!(relative_error(got, want) < 1e-10);
        }
    }
}

#[test]
fn four_worker_verdicts() {
    let c = CodeConstruction::new(4, 0.5, 2).unwrap();
    for bits in 0..16u64 {
        let m = mask(4, bits);
        let want = (m[0] || m[2]) && (m[1] || m[3]);
        assert_eq!(check_decodability(&IndicatorVector(m), &c).unwrap(), want, "bits {bits:04b}");
    }
}

#[test]
fn four_worker_node_trace_matches_reencoding() {
    use polar_coded::polar::NodeGrid;
    let mut rng = rng(4);
    let c = CodeConstruction::new(4, 0.5, 2).unwrap();
    let data = vec![random_block(2, 2, &mut rng), random_block(2, 2, &mut rng)];
    let coded = polar_coded::polar::encode_blocks(&c, &data).unwrap();
    let mut inputs = vec![Block::zeros((2, 2)); 4];
    inputs[2] = data[0].clone();
    inputs[3] = data[1].clone();
    // Every node the decoder fills must equal the value the encoder computed there.
    let mut levels = vec![inputs];
    for level in 0..2u32 {
        let mut next = levels[level as usize].clone();
        for i in 0..4usize {
            if i >> level & 1 == 0 {
                next[i] = &next[i] + &levels[level as usize][i ^ (1 << level)];
            }
        }
        levels.push(next);
    }
    for bits in 0..16u64 {
        let avail = mask(4, bits);
        let mut grid = NodeGrid::new(&c, outputs_for(&coded, &avail), Block::zeros((2, 2))).unwrap();
        let ok = grid.run_sequential(&c).is_some();
        for (level, row) in levels.iter().enumerate() {
            for (i, want) in row.iter().enumerate() {
                if let Some(v) = grid.value(i, level as u32) {
                    assert!(relative_error(v, want) < 1e-12 || (want.iter().all(|x| *x == 0.0) && v.iter().all(|x| x.abs() < 1e-12)));
                }
            }
        }
        if ok {
            assert_eq!(grid.resolutions(), 8);
        }
    }
}

#[test]
fn complexity_counters() {
    let mut rng = rng(5);
    for n in [2usize, 4, 8, 16, 64, 256] {
        let c = CodeConstruction::new(n, 0.5, n / 2).unwrap();
        let data: Vec<Block> = (0..n / 2).map(|_| random_block(1, 2, &mut rng)).collect();
        let (coded, additions) = encode_counted(&c, &data).unwrap();
        let log = n.trailing_zeros() as usize;
        assert_eq!(additions, n / 2 * log);
        let outputs: Vec<(usize, Block)> = coded.into_iter().enumerate().collect();
        let (_, stats) = decode_with_stats(&c, outputs).unwrap();
        assert_eq!(stats.block_ops, n * log);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Receiving more outputs never turns a decodable set undecodable.
    #[test]
    fn decodability_is_monotone(log in 1u32..6, k_frac in 0.1f64..0.9, bits in any::<u64>(), extra in any::<u64>()) {
        let n = 1usize << log;
        let k = ((n as f64 * k_frac).round() as usize).clamp(1, n - 1);
        let c = CodeConstruction::new(n, 0.5, k).unwrap();
        let small = mask(n, bits);
        let big: Vec<bool> = small.iter().zip(mask(n, extra)).map(|(a, b)| *a || b).collect();
        if check_decodability(&IndicatorVector(small), &c).unwrap() {
            prop_assert!(check_decodability(&IndicatorVector(big), &c).unwrap());
        }
    }

    /// Encoding is linear in the data.
    #[test]
    fn encoding_is_linear(log in 1u32..6, seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let n = 1usize << log;
        let c = CodeConstruction::new(n, 0.5, n / 2).unwrap();
        let mut r = rng(seed);
        let u: Vec<Block> = (0..n / 2).map(|_| random_block(2, 2, &mut r)).collect();
        let v: Vec<Block> = (0..n / 2).map(|_| random_block(2, 2, &mut r)).collect();
        let mix: Vec<Block> = u.iter().zip(&v).map(|(a, b)| a * alpha + b).collect();
        let eu = polar_coded::polar::encode_blocks(&c, &u).unwrap();
        let ev = polar_coded::polar::encode_blocks(&c, &v).unwrap();
        let em = polar_coded::polar::encode_blocks(&c, &mix).unwrap();
        for w in 0..n {
            let want = &eu[w] * alpha + &ev[w];
            prop_assert!((&em[w] - &want).iter().all(|d| d.abs() < 1e-12));
        }
    }

    /// Full reception round-trips arbitrary shapes, including padded rows.
    #[test]
    fn full_reception_round_trip(log in 1u32..7, m in 1usize..50, cols in 1usize..5, seed in any::<u64>()) {
        let n = 1usize << log;
        let c = CodeConstruction::from_rate(n, 0.5).unwrap();
        let mut r = rng(seed);
        let a = random_block(m, cols, &mut r);
        let x: Block = Array2::eye(cols);
        let coded = encode(&c, &PartitionedMatrix::split_rows(&a, c.n_data()).unwrap()).unwrap();
        let outputs: Vec<(usize, Block)> = coded.iter().map(|b| b.dot(&x)).enumerate().collect();
        let got = decode_matvec(&c, outputs, m).unwrap();
        prop_assert!(relative_error(&got, &a) < 1e-10 || a.iter().all(|v| *v == 0.0));
    }
}
