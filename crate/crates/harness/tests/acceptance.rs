//! Acceptance criteria. Each test prints one `AC<n> PASS|FAIL` line to stderr
//! (written directly, so it shows even when libtest captures output) and then
//! asserts the same condition.

mod common;

use std::fs;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{blob_config, blobs, feddw, mnist_spec};
use feddw_core::data::{class_counts, dirichlet_partition, make_blobs};
use feddw_core::feddw::{
    aggregate_sl, linearized_surrogate, reg_grad, reg_loss, softmax_cr, theorem1_bound, unsoftmaxed_objective,
    SlMatrix,
};
use feddw_core::fl::{aggregate_models, RoundRecord, RunConfig, Strategy};
use feddw_core::nn::{backward, cross_entropy_loss, forward, Dense, Layer, Model, ModelSpec};
use feddw_core::numerics::{finite_diff_grad, max_relative_error, softmax_rows, Matrix, Rng};
use feddw_harness::experiment::METRICS_FILE;
use feddw_harness::{read_metrics, run_experiment, run_with_data, RunSummary};

fn report(id: u32, name: &str, pass: bool, detail: &str, elapsed: Duration) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("AC{id} {verdict} {name}: {detail} ({:.1}s)\n", elapsed.as_secs_f64());
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn random_stochastic(rng: &mut Rng, c: usize, temperature: f64) -> Matrix<f64> {
    softmax_rows(&Matrix::from_fn(c, c, |_, _| temperature * rng.normal())).unwrap()
}

fn model_with_layers(depth: usize, rng: &mut Rng) -> Model<f64> {
    let (input, hidden, classes) = (5, 6, 4);
    let init = |i, o, bias| Dense::kaiming(i, o, bias, &mut rng.derive("layer", &[i as u64, o as u64]));
    match depth {
        1 => Model::from_parts(vec![], vec![], init(input, classes, true), classes).unwrap(),
        2 => Model::from_parts(
            vec![Layer::Dense(init(input, hidden, true)), Layer::Relu],
            vec![],
            init(hidden, classes, true),
            classes,
        )
        .unwrap(),
        _ => {
            let spec = ModelSpec {
                feature_hidden: vec![],
                mapping_width: hidden,
                classifier_bias: true,
            };
            Model::new(&spec, input, classes, &rng.derive("model", &[])).unwrap()
        }
    }
}

#[test]
fn ac1_gradient_oracles() {
    let clock = Instant::now();
    let mut rng = Rng::new(2024);
    let mut worst_backward: f64 = 0.0;
    let mut backward_cases = 0;
    for case in 0..24 {
        let depth = 1 + case % 3;
        let model = model_with_layers(depth, &mut rng.derive("case", &[case as u64]));
        let x = Matrix::from_fn(7, 5, |_, _| rng.normal());
        let y: Vec<usize> = (0..7).map(|_| rng.below(4)).collect();
        let (logits, cache) = forward(&model, &x).unwrap();
        let analytic = backward(&model, &cache, &logits, &y, None).unwrap().to_flat();
        let flat = Matrix::new(1, model.param_count(), model.to_flat()).unwrap();
        let numeric = finite_diff_grad(
            |p| {
                let mut m = model.clone();
                m.load_flat(p.as_slice()).unwrap();
                cross_entropy_loss(&m.logits(&x).unwrap(), &y).unwrap()
            },
            &flat,
            1e-5,
        )
        .unwrap();
        worst_backward = worst_backward.max(max_relative_error(&analytic, numeric.as_slice()));
        backward_cases += 1;
    }

    let mut worst_reg: f64 = 0.0;
    let mut reg_cases = 0;
    for &c in &[2usize, 5, 10] {
        for &k in &[3usize, 128] {
            for _ in 0..4 {
                let scale = rng.uniform_range(0.5, 2.0) / (k as f64).sqrt();
                let sl = SlMatrix::new(random_stochastic(&mut rng, c, 2.0), vec![true; c]).unwrap();
                let w = Matrix::from_fn(c, k, |_, _| scale * rng.normal());
                let g = reg_grad(&sl, &w).unwrap();
                let fd = finite_diff_grad(|m| reg_loss(&sl, m).unwrap(), &w, 1e-5).unwrap();
                worst_reg = worst_reg.max(max_relative_error(g.as_slice(), fd.as_slice()));
                reg_cases += 1;
            }
        }
    }
    let elapsed = clock.elapsed();
    let pass = backward_cases >= 20
        && reg_cases >= 20
        && worst_backward < 1e-6
        && worst_reg < 1e-6
        && elapsed < Duration::from_secs(30);
    report(
        1,
        "gradient oracles",
        pass,
        &format!(
            "backward {backward_cases} cases max rel err {worst_backward:.2e}; reg_grad {reg_cases} cases max rel err {worst_reg:.2e}"
        ),
        elapsed,
    );
    assert!(pass);
}

fn blob_reg_runs() -> Vec<(usize, Vec<RoundRecord>, RunSummary)> {
    let out = tempfile::tempdir().unwrap();
    let strategies = [
        Strategy::FedAvg,
        Strategy::FedProx { prox_mu: 0.1 },
        Strategy::LocalOnly,
        feddw(0.1),
        feddw(10.0),
        feddw(100.0),
    ];
    let mut runs = Vec::new();
    for (i, s) in strategies.into_iter().enumerate() {
        let mut cfg = blob_config(s, 40 + i as u64);
        cfg.dataset = blobs(10);
        cfg.beta = 0.1;
        cfg.participation_rate = 0.6;
        let run = run_experiment(&cfg, out.path(), false).unwrap();
        runs.push((10, run.records, run.summary));
    }
    runs
}

#[test]
fn ac2_regularizer_bound() {
    let clock = Instant::now();
    let mut rng = Rng::new(77);
    let mut worst_ratio: f64 = 0.0;
    let mut at_bound = 0;
    for case in 0..10_000u64 {
        let c = 2 + (case % 11) as usize;
        let k = 1 + rng.below(16);
        let temperature = [0.1, 1.0, 10.0, 100.0][(case % 4) as usize];
        let omega = random_stochastic(&mut rng, c, temperature);
        let scale = 10f64.powf(rng.uniform_range(-2.0, 1.5));
        let w = Matrix::from_fn(c, k, |_, _| scale * rng.normal());
        let loss = reg_loss(&SlMatrix::new(omega, vec![true; c]).unwrap(), &w).unwrap();
        let bound: f64 = theorem1_bound(c).unwrap();
        assert!(loss >= 0.0);
        worst_ratio = worst_ratio.max(loss / bound);
        at_bound += usize::from(loss == bound);
    }
    let fuzz_time = clock.elapsed();

    let mut logged = 0;
    let mut worst_logged: f64 = 0.0;
    let mut check = |classes: usize, records: &[RoundRecord], summary: &RunSummary| {
        let bound: f64 = theorem1_bound(classes).unwrap();
        for r in records {
            logged += 1;
            worst_logged = worst_logged.max(r.reg_loss / bound);
        }
        worst_logged = worst_logged.max(summary.max_reg_loss / summary.reg_bound);
    };
    for (classes, records, summary) in blob_reg_runs() {
        check(classes, &records, &summary);
    }
    for seed in mnist_runs() {
        for run in [&seed.fedavg, &seed.feddw_small, &seed.feddw_large] {
            check(10, &run.records, &run.summary);
        }
    }
    let pass = worst_ratio <= 1.0 && worst_logged < 1.0 && fuzz_time < Duration::from_secs(10);
    report(
        2,
        "regularizer bound",
        pass,
        &format!(
            "10000 fuzz cases max L/(2/|C|) = {worst_ratio:.4} ({at_bound} saturated cases equal to the bound) in {:.2}s; {logged} logged round values max ratio {worst_logged:.4}",
            fuzz_time.as_secs_f64()
        ),
        clock.elapsed(),
    );
    assert!(pass);
}

#[test]
fn ac3_strategy_degeneration() {
    let clock = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let mut identical = 0;
    let mut compared = 0;
    for seed in 0..3 {
        let csv = |s: Strategy| {
            let run = run_experiment(&blob_config(s, seed), out.path(), false).unwrap();
            fs::read(run.dir.join(METRICS_FILE)).unwrap()
        };
        let avg = csv(Strategy::FedAvg);
        for other in [csv(feddw(0.0)), csv(Strategy::FedProx { prox_mu: 0.0 })] {
            compared += 1;
            identical += usize::from(other == avg);
        }
    }
    let elapsed = clock.elapsed();
    let pass = identical == compared && compared == 6 && elapsed < Duration::from_secs(60);
    report(
        3,
        "strategy degeneration",
        pass,
        &format!("{identical}/{compared} CSVs byte-identical to FedAvg (3 seeds, N=5, T=5)"),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn ac4_determinism_under_concurrency() {
    let clock = Instant::now();
    let mut cfg_a = blob_config(feddw(1.0), 11);
    cfg_a.beta = 0.1;
    cfg_a.participation_rate = 0.6;
    let mut cfg_b = blob_config(Strategy::FedProx { prox_mu: 0.01 }, 12);
    cfg_b.dataset = blobs(10);
    cfg_b.clients = 8;
    let mut identical = 0;
    for cfg in [cfg_a, cfg_b] {
        let files = |workers: usize| {
            let out = tempfile::tempdir().unwrap();
            let mut c: RunConfig = cfg.clone();
            c.workers = workers;
            let run = run_experiment(&c, out.path(), false).unwrap();
            (
                fs::read(run.dir.join(METRICS_FILE)).unwrap(),
                fs::read(run.dir.join("model.bin")).unwrap(),
            )
        };
        identical += usize::from(files(1) == files(8));
    }
    let elapsed = clock.elapsed();
    let pass = identical == 2 && elapsed < Duration::from_secs(120);
    report(
        4,
        "determinism under concurrency",
        pass,
        &format!("{identical}/2 configs byte-identical (CSV and model) with 1 vs 8 workers"),
        elapsed,
    );
    assert!(pass);
}

struct Run {
    records: Vec<RoundRecord>,
    summary: RunSummary,
}

struct SeedRuns {
    seed: u64,
    fedavg: Run,
    feddw_small: Run,
    feddw_large: Run,
}

struct MnistStudy {
    seeds: Vec<SeedRuns>,
    /// Time for the FedAvg and FedDW(μ=0.1) runs alone.
    core_time: Duration,
    total_time: Duration,
}

fn mnist_config(strategy: Strategy, seed: u64) -> RunConfig {
    let classifier_bias = !strategy.is_feddw();
    RunConfig {
        strategy,
        clients: 10,
        rounds: 20,
        local_epochs: 5,
        batch_size: 128,
        participation_rate: 0.5,
        beta: 0.1,
        learning_rate: 1e-3,
        seed,
        dataset: mnist_spec(),
        model: ModelSpec {
            classifier_bias,
            ..ModelSpec::default()
        },
        workers: 0,
        record_timing: false,
    }
}

fn mnist_study() -> &'static MnistStudy {
    static STUDY: OnceLock<MnistStudy> = OnceLock::new();
    STUDY.get_or_init(|| {
        let start = Instant::now();
        let out = tempfile::tempdir().unwrap();
        let mut core_time = Duration::ZERO;
        let mut seeds = Vec::new();
        for seed in 0..3 {
            let base = mnist_config(Strategy::FedAvg, seed);
            let (train, test) = base.dataset.materialize::<f64>(seed).unwrap();
            let go = |s: Strategy| {
                let t = Instant::now();
                let run = run_with_data(&mnist_config(s, seed), &train, &test, out.path(), false).unwrap();
                (
                    Run {
                        records: run.records,
                        summary: run.summary,
                    },
                    t.elapsed(),
                )
            };
            let (fedavg, t1) = go(Strategy::FedAvg);
            let (feddw_small, t2) = go(feddw(0.1));
            let (feddw_large, _) = go(feddw(10.0));
            core_time += t1 + t2;
            seeds.push(SeedRuns {
                seed,
                fedavg,
                feddw_small,
                feddw_large,
            });
        }
        MnistStudy {
            seeds,
            core_time,
            total_time: start.elapsed(),
        }
    })
}

fn mnist_runs() -> &'static [SeedRuns] {
    &mnist_study().seeds
}

fn final_accuracy(run: &Run) -> f64 {
    run.records.last().unwrap().accuracy
}

fn final_distance(run: &Run) -> f64 {
    run.records.last().unwrap().sl_cr_distance
}

#[test]
fn ac5_heterogeneity_benefit() {
    let study = mnist_study();
    let mut detail = Vec::new();
    let (mut sum_avg, mut sum_dw, mut wins) = (0.0, 0.0, 0);
    for s in &study.seeds {
        let (avg, dw) = (final_accuracy(&s.fedavg), final_accuracy(&s.feddw_small));
        sum_avg += avg;
        sum_dw += dw;
        wins += usize::from(dw >= avg);
        detail.push(format!("seed {}: FedAvg {:.2}% FedDW {:.2}%", s.seed, 100.0 * avg, 100.0 * dw));
    }
    let n = study.seeds.len() as f64;
    let (mean_avg, mean_dw) = (sum_avg / n, sum_dw / n);
    let pass = mean_dw >= mean_avg - 0.005 && wins >= 2 && study.core_time < Duration::from_secs(600);
    report(
        5,
        "heterogeneity benefit (MNIST 5k, N=10, beta=0.1, participation 0.5, T=20, R=5, mu=0.1)",
        pass,
        &format!(
            "mean FedAvg {:.2}% vs FedDW {:.2}%, FedDW >= FedAvg in {wins}/3 seeds [{}]",
            100.0 * mean_avg,
            100.0 * mean_dw,
            detail.join("; ")
        ),
        study.core_time,
    );
    assert!(pass);
}

#[test]
fn ac6_sl_cr_consistency() {
    let study = mnist_study();
    let mut smaller = 0;
    let mut detail = Vec::new();
    for s in &study.seeds {
        let (avg, dw) = (final_distance(&s.fedavg), final_distance(&s.feddw_large));
        smaller += usize::from(dw < avg);
        detail.push(format!("seed {}: FedAvg {avg:.4} FedDW(mu=10) {dw:.4}", s.seed));
    }
    let pass = smaller == study.seeds.len();
    report(
        6,
        "SL/CR consistency",
        pass,
        &format!("distance smaller in {smaller}/3 seeds [{}]", detail.join("; ")),
        study.total_time,
    );
    assert!(pass);
}

#[test]
fn ac7_aggregation_oracles() {
    let clock = Instant::now();
    let mut rng = Rng::new(707);
    let mut worst_models: f64 = 0.0;
    let mut worst_sl: f64 = 0.0;
    for _ in 0..100 {
        let clients = 1 + rng.below(6);
        let len = 1 + rng.below(40);
        let params: Vec<Vec<f64>> = (0..clients).map(|_| (0..len).map(|_| 3.0 * rng.normal()).collect()).collect();
        let counts: Vec<usize> = (0..clients).map(|_| 1 + rng.below(500)).collect();
        let reports: Vec<(&[f64], usize)> = params.iter().map(|p| p.as_slice()).zip(counts.iter().copied()).collect();
        let got = aggregate_models(&reports).unwrap();
        let total: usize = counts.iter().sum();
        for j in 0..len {
            let mut oracle = 0.0;
            for k in 0..clients {
                oracle += counts[k] as f64 * params[k][j];
            }
            oracle /= total as f64;
            worst_models = worst_models.max((got[j] - oracle).abs());
        }
    }
    for _ in 0..100 {
        let c = 2 + rng.below(6);
        let clients = 1 + rng.below(5);
        let mut sls = Vec::new();
        let mut counts = Vec::new();
        for _ in 0..clients {
            let n: Vec<usize> = (0..c).map(|_| if rng.uniform() < 0.4 { 0 } else { 1 + rng.below(50) }).collect();
            let mut omega = random_stochastic(&mut rng, c, 2.0);
            for (i, &ni) in n.iter().enumerate() {
                if ni == 0 {
                    omega.row_mut(i).fill(0.0);
                }
            }
            sls.push(SlMatrix::new(omega, n.iter().map(|&v| v > 0).collect()).unwrap());
            counts.push(n);
        }
        let previous = SlMatrix::new(random_stochastic(&mut rng, c, 1.0), vec![true; c]).unwrap();
        let inputs: Vec<(&SlMatrix<f64>, &[usize])> = sls.iter().zip(counts.iter().map(Vec::as_slice)).collect();
        let got = aggregate_sl(&inputs, &previous).unwrap();
        for i in 0..c {
            let total: usize = counts.iter().map(|n| n[i]).sum();
            for j in 0..c {
                let oracle = if total == 0 {
                    previous.omega()[(i, j)]
                } else {
                    let mut acc = 0.0;
                    for k in 0..clients {
                        acc += counts[k][i] as f64 * sls[k].omega()[(i, j)];
                    }
                    acc / total as f64
                };
                worst_sl = worst_sl.max((got.omega()[(i, j)] - oracle).abs());
            }
        }
    }
    let elapsed = clock.elapsed();
    let pass = worst_models < 1e-12 && worst_sl < 1e-12 && elapsed < Duration::from_secs(5);
    report(
        7,
        "aggregation oracles",
        pass,
        &format!("100+100 instances, max |diff| models {worst_models:.1e}, SL {worst_sl:.1e}"),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn ac8_communication_accounting() {
    let clock = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let summary = |s: Strategy| {
        let mut cfg = blob_config(s, 80);
        cfg.dataset = blobs(10);
        cfg.rounds = 1;
        run_experiment(&cfg, out.path(), false).unwrap().summary.comm
    };
    let avg = summary(Strategy::FedAvg);
    let dw = summary(feddw(0.1));
    let c = 10u64;
    let expected = 8 * (c * c + c);
    let diff = dw.upload_bytes_per_client_round - avg.upload_bytes_per_client_round;
    let pass = avg.classes == 10 && avg.param_count == dw.param_count && diff == expected;
    report(
        8,
        "communication accounting",
        pass,
        &format!(
            "FedAvg upload {} B, FedDW {} B per client per round, difference {diff} B (expected 8*(|C|^2+|C|) = {expected})",
            avg.upload_bytes_per_client_round, dw.upload_bytes_per_client_round
        ),
        clock.elapsed(),
    );
    assert!(pass);
}

#[test]
fn ac9_linearization() {
    let clock = Instant::now();
    let mut rng = Rng::new(909);
    let mut worst_gap: f64 = 0.0;
    for _ in 0..200 {
        let c = 2 + rng.below(9);
        let omega = random_stochastic(&mut rng, c, 2.0);
        let w = Matrix::from_fn(c, 1 + rng.below(16), |_, _| rng.normal());
        let a = softmax_cr(&w).unwrap();
        let gap = (linearized_surrogate(&omega, &a, &a).unwrap() - unsoftmaxed_objective(&omega, &a).unwrap()).abs();
        worst_gap = worst_gap.max(gap);
    }
    let mut violations = 0;
    for _ in 0..1000 {
        let c = 2 + rng.below(9);
        let omega = random_stochastic(&mut rng, c, 2.0);
        let m = |rng: &mut Rng| Matrix::from_fn(c, c, |_, _| rng.normal());
        let (a0, a1, a2) = (m(&mut rng), m(&mut rng), m(&mut rng));
        let lambda = rng.uniform_range(1e-6, 1.0 - 1e-6);
        let mix = a1.scale(lambda).add(&a2.scale(1.0 - lambda)).unwrap();
        let lhs = linearized_surrogate(&omega, &mix, &a0).unwrap();
        let rhs = lambda * linearized_surrogate(&omega, &a1, &a0).unwrap()
            + (1.0 - lambda) * linearized_surrogate(&omega, &a2, &a0).unwrap();
        violations += usize::from(lhs > rhs + 1e-9);
    }
    let elapsed = clock.elapsed();
    let pass = worst_gap <= 1e-10 && violations == 0 && elapsed < Duration::from_secs(5);
    report(
        9,
        "linearization",
        pass,
        &format!("max |surrogate - exact| at reference {worst_gap:.1e}; convexity violations {violations}/1000"),
        elapsed,
    );
    assert!(pass);
}

fn mean_label_entropy(shards: &[Vec<usize>], data: &feddw_core::Dataset64) -> f64 {
    let mut total = 0.0;
    for shard in shards {
        let counts = class_counts(data, shard);
        let n = shard.len() as f64;
        total -= counts
            .iter()
            .filter(|&&k| k > 0)
            .map(|&k| {
                let p = k as f64 / n;
                p * p.ln()
            })
            .sum::<f64>();
    }
    total / shards.len() as f64
}

#[test]
fn ac10_partition_contract() {
    let clock = Instant::now();
    let data = make_blobs(&mut Rng::new(5), 10, 100, 4, 1.0).unwrap();
    let betas = [0.1, 0.5, 10.0];
    let mut entropies = Vec::new();
    let mut exhaustive = true;
    for &beta in &betas {
        let mut sum = 0.0;
        for seed in 0..20 {
            let p = dirichlet_partition(&data, 10, beta, &mut Rng::new(seed)).unwrap();
            let mut all: Vec<usize> = p.shards.concat();
            all.sort_unstable();
            exhaustive &= all == (0..data.len()).collect::<Vec<_>>();
            exhaustive &= p.shards.iter().all(|s| !s.is_empty());
            sum += mean_label_entropy(&p.shards, &data);
        }
        entropies.push(sum / 20.0);
    }
    let monotone = entropies.windows(2).all(|w| w[0] < w[1]);
    let elapsed = clock.elapsed();
    let pass = exhaustive && monotone && elapsed < Duration::from_secs(30);
    report(
        10,
        "partition contract",
        pass,
        &format!(
            "disjoint+exhaustive: {exhaustive}; mean label entropy (nats) for beta 0.1/0.5/10: {:.3}/{:.3}/{:.3}",
            entropies[0], entropies[1], entropies[2]
        ),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn metrics_files_parse_back() {
    let out = tempfile::tempdir().unwrap();
    let run = run_experiment(&blob_config(feddw(0.1), 1), out.path(), false).unwrap();
    let rows = read_metrics(&run.dir.join(METRICS_FILE)).unwrap();
    assert_eq!(rows.len(), run.records.len());
    for (row, rec) in rows.iter().zip(&run.records) {
        assert_eq!(row.accuracy.to_bits(), rec.accuracy.to_bits());
        assert_eq!(row.reg_loss.to_bits(), rec.reg_loss.to_bits());
    }
}
