use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use ndarray::Array2;
use polar_coded::baselines::{mds_decode, mds_encode, MdsCode, PointSet};
use polar_coded::coded2d::{decode_2d, encode_2d, ProductGrid};
use polar_coded::gd::{gd_solve, GdScheme, LeastSquaresProblem};
use polar_coded::kernel::{check_polarizing_by_simulation, encode_cost, is_polarizing, Kernel2x2};
use polar_coded::matrix::{load_block, relative_error, save_block, PartitionAxis};
use polar_coded::partial::plan_partial;
use polar_coded::polar::{self, check_decodability, decode_with_stats, IndicatorVector};
use polar_coded::sim::{
    first_decodable_time, polarize_cdf, run_coded_matvec, run_uncoded_matvec, simulate_decodability_time,
    write_times_csv, PoolConfig, PoolMode, Scheme,
};
use polar_coded::{Block, CodeConstruction, Error, PartitionedMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::output::*;

/// Everything a command needs besides its own arguments.
pub struct Context {
    pub seed: Option<u64>,
    pub config: Option<std::path::PathBuf>,
    pub sink: Sink,
    pub threads: usize,
}

pub fn run(cli: Cli) -> CliResult<()> {
    if cli.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let ctx = Context {
        seed: cli.seed,
        config: cli.config,
        sink: Sink(cli.out),
        threads: cli.threads,
    };
    match cli.command {
        Command::Construct(a) => construct(&a, &ctx),
        Command::Encode(a) => encode(&a, &ctx),
        Command::Decode(a) => decode(&a, &ctx),
        Command::KernelCheck(a) => kernel_check(&a, &ctx),
        Command::BenchCodes(a) => bench_codes(&a, &ctx),
        Command::Polarize(a) => polarize(&a, &ctx),
        Command::Simulate(a) => simulate(&a, &ctx),
        Command::Matvec(a) => matvec(&a, &ctx),
        Command::Matmul2d(a) => matmul2d(&a, &ctx),
        Command::Gd(a) => gd(&a, &ctx),
    }
}

/// Operand data gets its own ChaCha stream so it never shares draws with
/// worker run times.
fn data_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    rng
}

fn random_block(rng: &mut impl Rng, rows: usize, cols: usize) -> Block {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

fn pool_config(ctx: &Context, seed: u64) -> PoolConfig {
    PoolConfig {
        threads: ctx.threads,
        ..PoolConfig::default()
    }
    .with_seed(seed)
}

pub fn build_construction(n: usize, epsilon: Option<f64>, n_data: Option<usize>) -> CliResult<CodeConstruction> {
    Ok(match (epsilon, n_data) {
        (eps, Some(k)) => CodeConstruction::new(n, eps.unwrap_or(0.5), k)?,
        (Some(eps), None) => CodeConstruction::from_rate(n, eps)?,
        (None, None) => return Err(CliError::Usage("construct needs --epsilon or --n-data".into())),
    })
}

fn construct(a: &ConstructArgs, ctx: &Context) -> CliResult<()> {
    let c = build_construction(a.n, a.epsilon, a.n_data)?;
    let mut table = String::from("channel,erasure_prob,role\n");
    for (i, p) in c.channel_probs().iter().enumerate() {
        let role = if c.is_frozen(i) { "frozen" } else { "data" };
        writeln!(table, "{i},{p},{role}").unwrap();
    }
    let probs: Vec<String> = c.channel_probs().iter().map(|p| p.to_string()).collect();
    let frozen: Vec<String> = c.frozen_set().iter().map(|i| i.to_string()).collect();
    writeln!(table, "# probs: [{}]", probs.join(", ")).unwrap();
    writeln!(table, "# frozen: {{{}}}", frozen.join(", ")).unwrap();
    writeln!(table, "# sum: {}", c.channel_probs().iter().sum::<f64>()).unwrap();
    print!("{table}");
    if ctx.sink.0.is_some() {
        ctx.sink.write(c.to_json()?.as_bytes())?;
    }
    Ok(())
}

fn encode(a: &EncodeArgs, ctx: &Context) -> CliResult<()> {
    let dir = ctx
        .sink
        .0
        .as_ref()
        .ok_or_else(|| CliError::Usage("encode needs --out <dir>".into()))?;
    let c = CodeConstruction::from_json(&fs::read_to_string(&a.construction)?)?;
    let m = load_block(&a.input)?;
    let split = PartitionedMatrix::split_rows(&m, c.n_data())?;
    let coded = polar::encode(&c, &split)?;
    fs::create_dir_all(dir)?;
    let mut blocks = Vec::with_capacity(coded.len());
    for (w, b) in coded.iter().enumerate() {
        let name = format!("coded_{w}.bin");
        save_block(&dir.join(&name), b)?;
        blocks.push(name);
    }
    let manifest = EncodeManifest {
        construction: c,
        rows: m.nrows(),
        cols: m.ncols(),
        blocks,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(Error::from)?;
    fs::write(dir.join("manifest.json"), text)?;
    eprintln!("wrote {} coded blocks to {}", coded.len(), dir.display());
    Ok(())
}

fn parse_indices(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .filter(|f| !f.trim().is_empty())
        .map(|f| {
            f.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad worker index {f:?}")))
        })
        .collect()
}

fn decode(a: &DecodeArgs, ctx: &Context) -> CliResult<()> {
    let out = ctx
        .sink
        .0
        .as_ref()
        .ok_or_else(|| CliError::Usage("decode needs --out <file>".into()))?;
    let manifest: EncodeManifest =
        serde_json::from_str(&fs::read_to_string(a.input.join("manifest.json"))?).map_err(Error::from)?;
    let n = manifest.construction.n_workers();
    if manifest.blocks.len() != n {
        return Err(Error::Validation(format!("manifest lists {} blocks for {n} workers", manifest.blocks.len())).into());
    }
    let workers: Vec<usize> = match &a.available {
        Some(s) => parse_indices(s)?,
        None => (0..n).filter(|&w| a.input.join(&manifest.blocks[w]).exists()).collect(),
    };
    let mut outputs = Vec::with_capacity(workers.len());
    for w in workers.iter().copied().collect::<BTreeSet<_>>() {
        let name = manifest
            .blocks
            .get(w)
            .ok_or_else(|| Error::Validation(format!("worker {w} out of range for N = {n}")))?;
        outputs.push((w, load_block(&a.input.join(name))?));
    }
    let used = outputs.len();
    let (data, stats) = decode_with_stats(&manifest.construction, outputs)?;
    let cols = data[0].ncols();
    let m = PartitionedMatrix::from_blocks(data, PartitionAxis::Rows, manifest.rows, cols)?.assemble();
    save_block(out, &m)?;
    eprintln!("decoded from {used} of {n} blocks with {} block operations", stats.block_ops);
    Ok(())
}

fn parse_kernel(s: &str) -> CliResult<Kernel2x2> {
    let v: Vec<f64> = s
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("kernel {s:?} is not four comma-separated numbers")))?;
    match v.as_slice() {
        &[a, b, c, d] => Ok(Kernel2x2::new(a, b, c, d)),
        _ => Err(CliError::Usage(format!("kernel needs 4 entries, got {}", v.len()))),
    }
}

fn kernel_check(a: &KernelCheckArgs, ctx: &Context) -> CliResult<()> {
    if a.scan {
        let mut csv = String::from("k11,k12,k21,k22,polarizing,additions,multiplications\n");
        let vals = [-1.0, 0.0, 1.0];
        let mut best: Option<(usize, usize)> = None;
        for &k11 in &vals {
            for &k12 in &vals {
                for &k21 in &vals {
                    for &k22 in &vals {
                        let k = Kernel2x2::new(k11, k12, k21, k22);
                        let (adds, mults) = match encode_cost(&k) {
                            Ok(c) => {
                                let key = (c.additions, c.multiplications);
                                best = Some(best.map_or(key, |b| b.min(key)));
                                (c.additions.to_string(), c.multiplications.to_string())
                            }
                            Err(_) => (String::new(), String::new()),
                        };
                        writeln!(csv, "{k11},{k12},{k21},{k22},{},{adds},{mults}", is_polarizing(&k)).unwrap();
                    }
                }
            }
        }
        if let Some((adds, mults)) = best {
            writeln!(csv, "# minimum cost: {adds} additions, {mults} multiplications").unwrap();
        }
        return ctx.sink.write(csv.as_bytes());
    }
    let seed = require_seed(ctx.seed, "kernel-check")?;
    let spec = a.kernel.as_deref().expect("clap requires --kernel without --scan");
    let k = parse_kernel(spec)?;
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let cost = encode_cost(&k).ok();
    let report = KernelReport {
        kernel: [k.entries[0][0], k.entries[0][1], k.entries[1][0], k.entries[1][1]],
        polarizing: is_polarizing(&k),
        witness: check_polarizing_by_simulation(&k, a.trials, seed),
        trials: a.trials,
        seed,
        config_hash: config_hash("kernel-check", a, &serde_json::Value::Null),
        additions: cost.map(|c| c.additions),
        multiplications: cost.map(|c| c.multiplications),
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    text.push('\n');
    ctx.sink.write(text.as_bytes())
}

/// Shortest prefix of `order` the polar decoder accepts.
fn decodable_prefix(c: &CodeConstruction, order: &[usize]) -> CliResult<usize> {
    let ok = |len: usize| check_decodability(&IndicatorVector::from_available(c.n_workers(), order[..len].iter().copied()), c);
    let (mut lo, mut hi) = (c.n_data(), order.len());
    if !ok(hi)? {
        return Err(Error::NotDecodable("full worker set rejected".into()).into());
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(hi)
}

/// RS runs with a decode error above this are flagged.
pub const RS_ERROR_FLAG: f64 = 1e-6;

/// Runs also continue until this much time has been spent, so that
/// microsecond-scale cases get enough samples.
const TIMING_BUDGET_S: f64 = 0.05;

/// Fastest run of `run`, each on a fresh input from `setup` (not timed).
/// At least `repeats` runs, and more while under [`TIMING_BUDGET_S`].
fn time_min<S, T>(repeats: usize, mut setup: impl FnMut() -> S, mut run: impl FnMut(S) -> T) -> (f64, T) {
    let mut best = f64::INFINITY;
    let mut spent = 0.0;
    let mut last = None;
    let mut i = 0;
    while i < repeats || (spent < TIMING_BUDGET_S && i < 1000) {
        let input = setup();
        let start = Instant::now();
        let v = run(input);
        let dt = start.elapsed().as_secs_f64();
        best = best.min(dt);
        spent += dt;
        last = Some(v);
        i += 1;
    }
    (best, last.expect("at least one run"))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn bench_codes(a: &BenchArgs, ctx: &Context) -> CliResult<()> {
    let seed = require_seed(ctx.seed, "bench-codes")?;
    for (name, v) in [("--n-min", a.n_min), ("--n-max", a.n_max)] {
        if v < 2 || !v.is_power_of_two() {
            return Err(CliError::Usage(format!("{name} must be a power of 2, got {v}")));
        }
    }
    if a.n_min > a.n_max || a.cols == 0 || a.rhs == 0 || a.repeats == 0 {
        return Err(CliError::Usage("need n_min <= n_max and positive cols, rhs and repeats".into()));
    }
    let hash = config_hash("bench-codes", a, &serde_json::Value::Null);
    let mut csv = stamp(seed, &hash);
    csv.push_str("n,codec,points,rows,cols,encode_s,decode_s,rel_error,error_flag,status\n");
    let mut rng = data_rng(seed);
    let (mut ns, mut polar_times) = (Vec::new(), Vec::new());
    let mut n = a.n_min;
    while n <= a.n_max {
        let rows = 100 * n;
        let k = n / 2;
        let m = random_block(&mut rng, rows, a.cols);
        let x = random_block(&mut rng, a.cols, a.rhs);
        let want = m.dot(&x);
        let split = PartitionedMatrix::split_rows(&m, k)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let stack = |blocks: Vec<Block>| -> CliResult<Block> {
            Ok(PartitionedMatrix::from_blocks(blocks, PartitionAxis::Rows, rows, a.rhs)?.assemble())
        };

        let c = CodeConstruction::new(n, 0.5, k)?;
        let (enc_s, coded) = time_min(a.repeats, || (), |()| polar::encode(&c, &split));
        let coded = coded?;
        let len = decodable_prefix(&c, &order)?;
        let outputs: Vec<(usize, Block)> = order[..len].iter().map(|&w| (w, coded[w].dot(&x))).collect();
        let (dec_s, decoded) = time_min(a.repeats, || outputs.clone(), |o| decode_with_stats(&c, o));
        let err = relative_error(&stack(decoded?.0)?, &want);
        writeln!(csv, "{n},polar,-,{rows},{},{enc_s},{dec_s},{err},{},ok", a.cols, err > RS_ERROR_FLAG).unwrap();
        ns.push(n as f64);
        polar_times.push(dec_s);

        for (label, set) in [("chebyshev", PointSet::Chebyshev), ("equispaced", PointSet::Equispaced)] {
            let code = MdsCode::with_points(n, k, set)?;
            let (enc_s, coded) = time_min(a.repeats, || (), |()| mds_encode(&split, &code));
            let coded = coded?;
            let outputs: Vec<(usize, Block)> = order[..k].iter().map(|&w| (w, coded[w].dot(&x))).collect();
            let (dec_s, decoded) = time_min(a.repeats, || (), |()| mds_decode(&outputs, &code));
            let (err, status) = match decoded {
                Ok(data) => {
                    let err = relative_error(&stack(data)?, &want);
                    (err, if err.is_finite() { "ok" } else { "non_finite" })
                }
                Err(Error::Conditioning(_)) => (f64::NAN, "ill_conditioned"),
                Err(e) => return Err(e.into()),
            };
            let flag = !(err <= RS_ERROR_FLAG);
            writeln!(csv, "{n},rs,{label},{rows},{},{enc_s},{dec_s},{err},{flag},{status}", a.cols).unwrap();
        }
        n *= 2;
    }
    if ns.len() >= 2 {
        let slope = loglog_slope(&ns, &polar_times);
        writeln!(csv, "# polar_decode_slope={slope}").unwrap();
        eprintln!("polar decode time log-log slope over N: {slope:.3}");
    }
    ctx.sink.write(csv.as_bytes())
}

fn polarize(a: &PolarizeArgs, ctx: &Context) -> CliResult<()> {
    let seed = require_seed(ctx.seed, "polarize")?;
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let loaded = load_model(ctx.config.as_deref())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = loaded.model.base_cdf(a.samples, &mut rng)?;
    let channels = polarize_cdf(&base, a.n)?;
    let mut csv = stamp(seed, &config_hash("polarize", a, &loaded.identity));
    csv.push_str("t,base");
    for i in 0..channels.len() {
        write!(csv, ",ch_{i}").unwrap();
    }
    csv.push('\n');
    for g in 0..a.points {
        let t = base.quantile(g as f64 / (a.points - 1) as f64);
        write!(csv, "{t},{}", base.eval(t)).unwrap();
        for ch in &channels {
            write!(csv, ",{}", ch.eval(t)).unwrap();
        }
        csv.push('\n');
    }
    ctx.sink.write(csv.as_bytes())
}

fn square_side(n: usize) -> CliResult<usize> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n {
        return Err(CliError::Usage(format!("product schemes need a square worker count, got {n}")));
    }
    Ok(side)
}

pub fn build_scheme(a: &SimulateArgs) -> CliResult<Scheme> {
    let k = || -> CliResult<usize> {
        match a.n_data {
            Some(k) => Ok(k),
            None => Ok(CodeConstruction::from_rate(a.n, a.epsilon)?.n_data()),
        }
    };
    Ok(match a.scheme {
        SchemeKind::Polar => Scheme::Polar(build_construction(a.n, Some(a.epsilon), a.n_data)?),
        SchemeKind::Mds => Scheme::Mds { n: a.n, k: k()? },
        SchemeKind::Lt => Scheme::Lt {
            n: a.n,
            n_input: k()?,
            c: a.lt_c,
            delta: a.lt_delta,
        },
        SchemeKind::Polar2d => {
            let c = CodeConstruction::from_rate(square_side(a.n)?, a.epsilon)?;
            Scheme::Polar2d { row: c.clone(), col: c }
        }
        SchemeKind::Mds2d => {
            let c = CodeConstruction::from_rate(square_side(a.n)?, a.epsilon)?;
            Scheme::Mds2d {
                n: a.n,
                threshold: c.n_data() * c.n_data(),
            }
        }
        SchemeKind::Partial => {
            let p = a.p.ok_or_else(|| CliError::Usage("partial scheme needs --p".into()))?;
            if p == 0 || a.n % p != 0 {
                return Err(CliError::Usage(format!("--p {p} must divide N = {}", a.n)));
            }
            Scheme::PolarPartial(plan_partial(a.n, p, a.n / p, a.epsilon)?)
        }
    })
}

fn simulate(a: &SimulateArgs, ctx: &Context) -> CliResult<()> {
    let seed = require_seed(ctx.seed, "simulate")?;
    let loaded = load_model(ctx.config.as_deref())?;
    let scheme = build_scheme(a)?;
    let times = simulate_decodability_time(&scheme, &loaded.model, a.trials, seed)?;
    let mut out = stamp(seed, &config_hash("simulate", a, &loaded.identity)).into_bytes();
    write_times_csv(&mut out, &times)?;
    ctx.sink.write(&out)?;
    let finite: Vec<f64> = times.iter().copied().filter(|t| t.is_finite()).collect();
    eprintln!(
        "mean decodability time {:.4} over {} trials ({} never decodable)",
        times.iter().sum::<f64>() / times.len() as f64,
        times.len(),
        times.len() - finite.len()
    );
    Ok(())
}

fn matvec(a: &MatvecArgs, ctx: &Context) -> CliResult<()> {
    let seed = require_seed(ctx.seed, "matvec")?;
    let loaded = load_model(ctx.config.as_deref())?;
    let mut rng = data_rng(seed);
    let m = random_block(&mut rng, a.rows, a.cols);
    let x = random_block(&mut rng, a.cols, 1);
    let mut config = pool_config(ctx, seed);
    if let Some(scale) = a.live_scale {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(CliError::Usage(format!("--live-scale must be a nonnegative number, got {scale}")));
        }
        config.mode = PoolMode::Live { time_scale: scale };
    }
    let run = match a.scheme {
        GdSchemeKind::Coded => {
            let c = CodeConstruction::from_rate(a.n, a.epsilon)?;
            run_coded_matvec(&m, &x, &c, &config, &loaded.model)?
        }
        GdSchemeKind::Uncoded => run_uncoded_matvec(&m, &x, a.n, &config, &loaded.model)?,
    };
    let mut out = stamp(seed, &config_hash("matvec", a, &loaded.identity)).into_bytes();
    run.timeline.write_csv(&mut out)?;
    ctx.sink.write(&out)?;
    eprintln!(
        "{}",
        json!({
            "decodable_time": run.decodable_time,
            "completion_time": run.completion_time,
            "collected": run.collected,
            "decode_ops": run.decode_ops,
            "rel_error": relative_error(&run.result, &m.dot(&x)),
        })
    );
    Ok(())
}

fn matmul2d(a: &Matmul2dArgs, ctx: &Context) -> CliResult<()> {
    let seed = require_seed(ctx.seed, "matmul2d")?;
    let loaded = load_model(ctx.config.as_deref())?;
    let row_c = CodeConstruction::from_rate(a.n1, a.epsilon)?;
    let col_c = CodeConstruction::from_rate(a.n2, a.epsilon)?;
    let mut rng = data_rng(seed);
    let lhs = random_block(&mut rng, a.m, a.k);
    let rhs = random_block(&mut rng, a.k, a.p);
    let tasks = encode_2d(
        &PartitionedMatrix::split_rows(&lhs, row_c.n_data())?,
        &PartitionedMatrix::split_cols(&rhs, col_c.n_data())?,
        &row_c,
        &col_c,
    )?;
    let mut time_rng = ChaCha8Rng::seed_from_u64(seed);
    let arrivals: Vec<f64> = loaded
        .model
        .sample_all(a.n1 * a.n2, &mut time_rng)
        .iter()
        .map(|o| o.arrival())
        .collect();
    let scheme = Scheme::Polar2d {
        row: row_c.clone(),
        col: col_c.clone(),
    };
    let t = first_decodable_time(&scheme, &arrivals, 0)?;
    if !t.is_finite() {
        return Err(Error::NotDecodable("the surviving workers never form a decodable grid".into()).into());
    }
    let mut grid = ProductGrid::new(row_c, col_c, (a.m, a.p));
    let mut used = 0;
    for i in 0..a.n1 {
        for j in 0..a.n2 {
            if arrivals[i * a.n2 + j] <= t {
                grid.insert(i, j, tasks.compute(i, j))?;
                used += 1;
            }
        }
    }
    let product = decode_2d(grid)?;
    let report = Matmul2dReport {
        seed,
        config_hash: config_hash("matmul2d", a, &loaded.identity),
        n1: a.n1,
        n2: a.n2,
        decodable_time: t,
        cells_used: used,
        rel_error: relative_error(&product, &lhs.dot(&rhs)),
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    text.push('\n');
    ctx.sink.write(text.as_bytes())
}

fn gd(a: &GdArgs, ctx: &Context) -> CliResult<()> {
    let seed = require_seed(ctx.seed, "gd")?;
    let loaded = load_model(ctx.config.as_deref())?;
    let mut rng = data_rng(seed);
    let m = random_block(&mut rng, a.rows, a.cols);
    let y = random_block(&mut rng, a.rows, a.rhs);
    let mut problem = LeastSquaresProblem::new(m, y, a.iterations)?;
    if let Some(mu) = a.mu {
        problem = problem.with_mu(mu)?;
    }
    let c = CodeConstruction::from_rate(a.n, a.epsilon)?;
    let scheme = match a.scheme {
        GdSchemeKind::Coded => GdScheme::Coded(c),
        GdSchemeKind::Uncoded => GdScheme::Uncoded { n_workers: c.n_data() },
    };
    let (trace, _) = gd_solve(&problem, &scheme, &pool_config(ctx, seed), &loaded.model)?;
    let mut out = stamp(seed, &config_hash("gd", a, &loaded.identity)).into_bytes();
    trace.write_csv(&mut out)?;
    ctx.sink.write(&out)?;
    if let Some(last) = trace.iterations.last() {
        eprintln!(
            "mu {:.4e}, final residual {:.6e} at virtual time {:.3}",
            trace.mu, last.residual, last.virtual_time_s
        );
    }
    Ok(())
}

