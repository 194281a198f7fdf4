mod common;

use common::*;
use polar_coded::coded2d::*;
use polar_coded::matrix::{relative_error, PartitionedMatrix};
use polar_coded::{Block, CodeConstruction, Error};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

struct Setup {
    rc: CodeConstruction,
    cc: CodeConstruction,
    tasks: TaskGrid,
    product: Block,
}

fn setup(n1: usize, n2: usize, seed: u64) -> Setup {
    let mut r = rng(seed);
    let rc = CodeConstruction::from_rate(n1, 0.25).unwrap();
    let cc = CodeConstruction::from_rate(n2, 0.25).unwrap();
    let a = random_block(2 * rc.n_data() + 1, 4, &mut r);
    let b = random_block(4, 3 * cc.n_data() - 1, &mut r);
    let tasks = encode_2d(
        &PartitionedMatrix::split_rows(&a, rc.n_data()).unwrap(),
        &PartitionedMatrix::split_cols(&b, cc.n_data()).unwrap(),
        &rc,
        &cc,
    )
    .unwrap();
    Setup {
        rc,
        cc,
        tasks,
        product: a.dot(&b),
    }
}

fn grid_from(s: &Setup, known: &[bool]) -> ProductGrid {
    let n2 = s.cc.n_workers();
    let mut g = ProductGrid::new(s.rc.clone(), s.cc.clone(), s.tasks.product_shape);
    for (idx, _) in known.iter().enumerate().filter(|(_, k)| **k) {
        g.insert(idx / n2, idx % n2, s.tasks.compute(idx / n2, idx % n2)).unwrap();
    }
    g
}

#[test]
fn accepted_random_patterns_decode() {
    let s = setup(4, 4, 1);
    let mut r = rng(2);
    let mut accepted = 0;
    let mut tried = 0;
    while accepted < 500 {
        tried += 1;
        let keep = r.random_range(0.45..0.95);
        let known: Vec<bool> = (0..16).map(|_| r.random_bool(keep)).collect();
        let verdict = check_decodability_2d(&known, &s.rc, &s.cc);
        match decode_2d(grid_from(&s, &known)) {
            Ok(got) => {
                assert!(verdict);
                let err = relative_error(&got, &s.product);
                assert!(err <= 1e-10, "relative error {err}");
                accepted += 1;
            }
            Err(Error::NotDecodable(_)) => assert!(!verdict),
            Err(e) => panic!("{e}"),
        }
    }
    assert!(tried > accepted, "sampling never produced a rejected pattern");
}

#[test]
fn two_by_two_exhaustive() {
    let mut r = rng(3);
    let rc = CodeConstruction::new(2, 0.5, 1).unwrap();
    let a = random_block(2, 2, &mut r);
    let b = random_block(2, 2, &mut r);
    let tasks = encode_2d(
        &PartitionedMatrix::split_rows(&a, 1).unwrap(),
        &PartitionedMatrix::split_cols(&b, 1).unwrap(),
        &rc,
        &rc,
    )
    .unwrap();
    let s = Setup {
        rc: rc.clone(),
        cc: rc,
        tasks,
        product: a.dot(&b),
    };
    for bits in 0..16u64 {
        let known = mask(4, bits);
        let verdict = check_decodability_2d(&known, &s.rc, &s.cc);
        // Every cell holds the same product, so any one cell suffices.
        assert_eq!(verdict, bits != 0);
        assert_eq!(decode_2d(grid_from(&s, &known)).is_ok(), verdict);
    }
}

#[test]
fn single_missing_cell_filled_in_one_sweep() {
    let s = setup(4, 4, 4);
    let mut known = vec![true; 16];
    known[1 * 4 + 2] = false;
    let mut g = grid_from(&s, &known);
    fill_grid(&mut g).unwrap();
    let filled = g.cell(1, 2).unwrap();
    assert!(relative_error(filled, &s.tasks.compute(1, 2)) < 1e-12);
}

#[test]
fn arrival_order_does_not_matter() {
    let s = setup(8, 4, 5);
    let mut r = rng(6);
    let known: Vec<bool> = (0..32).map(|_| r.random_bool(0.85)).collect();
    if !check_decodability_2d(&known, &s.rc, &s.cc) {
        return;
    }
    let reference = decode_2d(grid_from(&s, &known)).unwrap();
    let mut cells: Vec<usize> = (0..32).filter(|&i| known[i]).collect();
    for _ in 0..5 {
        cells.shuffle(&mut r);
        let mut g = ProductGrid::new(s.rc.clone(), s.cc.clone(), s.tasks.product_shape);
        for &idx in &cells {
            g.insert(idx / 4, idx % 4, s.tasks.compute(idx / 4, idx % 4)).unwrap();
        }
        assert_eq!(decode_2d(g).unwrap(), reference);
    }
}

#[test]
fn zero_a_gives_zero_tasks() {
    let rc = CodeConstruction::from_rate(4, 0.25).unwrap();
    let a = Block::zeros((6, 2));
    let b = Block::ones((2, 6));
    let tasks = encode_2d(
        &PartitionedMatrix::split_rows(&a, 3).unwrap(),
        &PartitionedMatrix::split_cols(&b, 3).unwrap(),
        &rc,
        &rc,
    )
    .unwrap();
    assert!(tasks.a_coded.iter().all(|blk| blk.iter().all(|v| *v == 0.0)));
}

#[test]
fn manifest_with_cell_files() {
    let s = setup(4, 4, 7);
    let dir = std::env::temp_dir().join(format!("product-grid-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let manifest = TaskManifest::new(s.rc.clone(), s.cc.clone(), s.tasks.product_shape);
    std::fs::write(dir.join("manifest.json"), serde_json::to_string(&manifest).unwrap()).unwrap();
    for (key, file) in &manifest.cells {
        let (i, j) = TaskManifest::parse_cell(key).unwrap();
        polar_coded::matrix::save_block(&dir.join(file), &s.tasks.compute(i, j)).unwrap();
    }
    let back: TaskManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let mut g = ProductGrid::new(back.row_construction.clone(), back.col_construction.clone(), back.product_shape);
    for (key, file) in back.cells.iter().step_by(2) {
        let (i, j) = TaskManifest::parse_cell(key).unwrap();
        g.insert(i, j, polar_coded::matrix::load_block(&dir.join(file)).unwrap()).unwrap();
    }
    if check_decodability_2d(&g.known(), &back.row_construction, &back.col_construction) {
        assert!(relative_error(&decode_2d(g).unwrap(), &s.product) < 1e-10);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #[test]
    fn checker_is_monotone(l1 in 1u32..4, l2 in 1u32..4, bits in any::<u64>(), extra in any::<u64>()) {
        let (n1, n2) = (1usize << l1, 1usize << l2);
        let rc = CodeConstruction::new(n1, 0.5, (n1 / 2).max(1)).unwrap();
        let cc = CodeConstruction::new(n2, 0.5, (n2 / 2).max(1)).unwrap();
        let small = mask(n1 * n2, bits);
        let big: Vec<bool> = small.iter().zip(mask(n1 * n2, extra)).map(|(a, b)| *a || b).collect();
        if check_decodability_2d(&small, &rc, &cc) {
            prop_assert!(check_decodability_2d(&big, &rc, &cc));
        }
    }
}
