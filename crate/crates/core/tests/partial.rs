mod common;

use common::*;
use polar_coded::matrix::{relative_error, save_block};
use polar_coded::partial::*;
use polar_coded::polar::{check_decodability, encode, generator_matrix, IndicatorVector};
use polar_coded::sim::{simulate_decodability_time, RuntimeModel, Scheme};
use polar_coded::{Block, CodeConstruction, Error, PartitionedMatrix};

fn everyone(plan: &PartialPlan) -> Vec<Vec<usize>> {
    plan.sub_constructions.iter().map(|c| (0..c.n_workers()).collect()).collect()
}

#[test]
fn single_plan_is_plain_code() {
    let mut r = rng(1);
    let a = random_block(20, 4, &mut r);
    let x = random_block(4, 2, &mut r);
    let plan = plan_partial(20, 1, 8, 0.25).unwrap();
    assert_eq!(plan.row_ranges, vec![0..20]);
    let out = encode_decode_partial(&a, &x, &plan, &everyone(&plan)).unwrap();
    assert!(relative_error(&out.result, &a.dot(&x)) < 1e-12);
}

#[test]
fn complete_and_erased_sub_codes() {
    let mut r = rng(2);
    let a = random_block(31, 5, &mut r);
    let x = random_block(5, 3, &mut r);
    let plan = plan_partial(31, 2, 8, 0.25).unwrap();
    let want = a.dot(&x);
    let out = encode_decode_partial(&a, &x, &plan, &everyone(&plan)).unwrap();
    assert!(relative_error(&out.result, &want) < 1e-12);

    // Drop one output from sub-code 1 in a pattern the checker still accepts.
    let c = &plan.sub_constructions[1];
    let dropped = (0..8)
        .find(|&w| {
            let avail: Vec<bool> = (0..8).map(|i| i != w).collect();
            check_decodability(&IndicatorVector(avail), c).unwrap()
        })
        .unwrap();
    let mut avail = everyone(&plan);
    avail[1].retain(|&w| w != dropped);
    let out = encode_decode_partial(&a, &x, &plan, &avail).unwrap();
    assert!(relative_error(&out.result, &want) < 1e-10);

    // Sub-code 1 left with too few outputs fails the call and is named.
    let mut avail = everyone(&plan);
    avail[1] = vec![0, 1];
    match encode_decode_partial(&a, &x, &plan, &avail).unwrap_err() {
        Error::Subcode { index, source } => {
            assert_eq!(index, 1);
            assert!(matches!(*source, Error::NotDecodable(_)));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn decode_work_matches_formula() {
    let mut r = rng(3);
    let a = random_block(64, 3, &mut r);
    let x = random_block(3, 1, &mut r);
    for p in [1usize, 2, 4, 8] {
        let n = 64 / p;
        let plan = plan_partial(64, p, n, 0.25).unwrap();
        let out = encode_decode_partial(&a, &x, &plan, &everyone(&plan)).unwrap();
        assert_eq!(out.decode_ops, p * n * n.trailing_zeros() as usize);
    }
}

#[test]
fn worker_side_encoding_matches_master() {
    let mut r = rng(4);
    let a = random_block(45, 3, &mut r);
    let plan = plan_partial(45, 3, 8, 0.375).unwrap();
    let store = MemoryStore::from_plan(&a, &plan).unwrap();
    let master = encode_partial(&a, &plan).unwrap();
    for w in 0..plan.n_workers() {
        let (s, local) = plan.locate_worker(w).unwrap();
        let shape = master[s][local].dim();
        let got = in_memory_encode_task(w, &plan, &store, shape).unwrap();
        assert!((&got - &master[s][local]).iter().all(|d| d.abs() < 1e-12));
    }
}

#[test]
fn worker_side_encoding_from_files() {
    let mut r = rng(5);
    let a = random_block(16, 2, &mut r);
    let plan = plan_partial(16, 1, 8, 0.5).unwrap();
    let dir = std::env::temp_dir().join(format!("partial-store-{}", std::process::id()));
    let c = &plan.sub_constructions[0];
    let split = PartitionedMatrix::split_rows(&a, c.n_data()).unwrap();
    for (j, b) in split.blocks.iter().enumerate() {
        let path = dir.join(raw_block_key(0, j));
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        save_block(&path, b).unwrap();
    }
    let fs = FsStore { root: dir.clone() };
    let master = encode(c, &split).unwrap();
    for w in 0..8 {
        assert_eq!(in_memory_encode_task(w, &plan, &fs, (4, 2)).unwrap(), master[w]);
    }
    std::fs::remove_file(dir.join(raw_block_key(0, 0))).unwrap();
    let missing = (0..8).find_map(|w| in_memory_encode_task(w, &plan, &fs, (4, 2)).err()).unwrap();
    assert!(matches!(missing, Error::Fetch(_)));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn every_worker_touches_the_last_channel() {
    // The last input reaches every output, and it is always a data channel, so
    // no worker of a valid code depends on frozen inputs alone.
    for n in [2usize, 4, 8, 16, 32] {
        let g = generator_matrix(n).unwrap();
        assert!(g.iter().all(|row| row[n - 1] == 1.0));
        for k in 1..n {
            assert!(CodeConstruction::new(n, 0.5, k).unwrap().data_set().contains(&(n - 1)));
        }
    }
}

#[test]
fn two_worker_fetch_set() {
    struct Recording(std::cell::RefCell<Vec<String>>, MemoryStore);
    impl BlockLocator for Recording {
        fn fetch(&self, key: &str) -> polar_coded::Result<Block> {
            self.0.borrow_mut().push(key.to_string());
            self.1.fetch(key)
        }
    }
    let a = Block::from_shape_vec((1, 2), vec![1.0, 2.0]).unwrap();
    let plan = plan_partial(1, 1, 2, 0.5).unwrap();
    let rec = Recording(Default::default(), MemoryStore::from_plan(&a, &plan).unwrap());
    assert_eq!(in_memory_encode_task(0, &plan, &rec, (1, 2)).unwrap(), a);
    assert_eq!(*rec.0.borrow(), vec![raw_block_key(0, 0)]);
}

#[test]
fn decodability_time_grows_with_split_count() {
    let model = RuntimeModel::default();
    let mut means = Vec::new();
    for p in [1usize, 2, 4, 8] {
        let plan = plan_partial(640, p, 64 / p, 0.25).unwrap();
        let times = simulate_decodability_time(&Scheme::PolarPartial(plan), &model, 1000, 21).unwrap();
        means.push(times.iter().sum::<f64>() / times.len() as f64);
    }
    assert!(means.windows(2).all(|w| w[0] <= w[1]), "means {means:?}");
}
