//! Acceptance criteria, run in order with one PASS/FAIL line each.
//!
//! The desk pipeline (4 000 samples, lambda=10, M=8, S=3, trained at
//! N0=-150 dBm/Hz and evaluated at three noise levels) is built once and
//! shared by the calibration, trend and cooperative-gain criteria.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectrum_lab::channel::{complex_gaussian, SignalMatrix};
use spectrum_lab::complexity::{
    bench_inference, bench_signals, complexity_3dcnn, complexity_cnn_lstm, complexity_transformer, count_model_flops,
    Cnn3dInputs, CnnLstmInputs, TransformerInputs, EVACUATION_BOUND_MS, PUBLISHED_CNN3D_FLOPS,
    PUBLISHED_CNN_LSTM_FLOPS, PUBLISHED_TRANSFORMER_FLOPS,
};
use spectrum_lab::dataset::{covariance, ChannelLayout, Dataset, LabelPolicy};
use spectrum_lab::detect::{evaluate, fraction_above, statistics, DetectionReport, EvalConfig, Method, ThresholdTable};
use spectrum_lab::model::{forward, ModelConfig, ParamGrads, ParamSet, Session, TieredDetector, Trainable};
use spectrum_lab::scenario::ScenarioConfig;
use spectrum_lab::tensor::Tensor;
use spectrum_lab::train::{cross_entropy, PreparedData, Stage, TrainConfig, Trainer};

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

/// Runs one criterion; a panic counts as a failure.
fn criterion(id: u32, name: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    let o = Outcome {
        id,
        name,
        pass,
        detail,
        elapsed: start.elapsed(),
    };
    println!(
        "criterion {:>2} {:<28} {}  ({:.1} s) {}",
        o.id,
        o.name,
        if o.pass { "PASS" } else { "FAIL" },
        o.elapsed.as_secs_f64(),
        o.detail
    );
    o
}

fn random_planes(cfg: &ModelConfig, rng: &mut ChaCha8Rng, spread: f64) -> Tensor {
    let shape = [cfg.sequence_len, cfg.side, cfg.side, cfg.channels()];
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-spread..spread)).collect()).unwrap()
}

// ---------------------------------------------------------------- 1

fn summed_loss(cfg: &ModelConfig, params: &ParamSet, planes: &[Tensor], trainable: Trainable) -> (f64, Option<ParamGrads>) {
    let track = !matches!(trainable, Trainable::Nothing);
    let mut s = Session::new(params, trainable);
    let out = forward(cfg, &mut s, planes).unwrap();
    let mut total = cross_entropy(&mut s.graph, out.group_probs, 1).unwrap();
    for (k, p) in out.su_probs.iter().enumerate() {
        let l = cross_entropy(&mut s.graph, *p, (k % 2) as u8).unwrap();
        total = s.graph.add(total, l).unwrap();
    }
    let value = s.graph.value(total).item();
    (value, track.then(|| s.gradients(total).unwrap()))
}

/// Largest `|a - n| / max(|a|, |n|)` over every parameter scalar.
fn worst_gradient_error(init_std: f64, seed: u64) -> (f64, String, usize) {
    let cfg = ModelConfig {
        init_std,
        ..ModelConfig::micro()
    };
    let det = TieredDetector::new(cfg.clone(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let planes: Vec<Tensor> = (0..cfg.su_count).map(|_| random_planes(&cfg, &mut rng, 1.0)).collect();
    let grads = summed_loss(&cfg, &det.params, &planes, Trainable::Everything).1.unwrap();
    let h = 1e-4;
    let mut params = det.params.clone();
    let (mut worst, mut at, mut count) = (0.0f64, String::new(), 0);
    for i in 0..params.len() {
        for j in 0..params.tensor(i).len() {
            let orig = params.tensor(i).data()[j];
            params.tensor_mut(i).data_mut()[j] = orig + h;
            let up = summed_loss(&cfg, &params, &planes, Trainable::Nothing).0;
            params.tensor_mut(i).data_mut()[j] = orig - h;
            let down = summed_loss(&cfg, &params, &planes, Trainable::Nothing).0;
            params.tensor_mut(i).data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.grads[i].as_ref().map_or(0.0, |g| g.data()[j]);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-300);
            if rel > worst {
                worst = rel;
                at = format!("{}[{j}]", params.name(i));
            }
            count += 1;
        }
    }
    (worst, at, count)
}

fn gradient_check() -> (bool, String) {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (std, seed) in [(0.3, 5), (0.3, 7)] {
        let (worst, at, n) = worst_gradient_error(std, seed);
        pass &= worst < 1e-3;
        parts.push(format!("seed {seed}, init std {std}: max rel err {worst:.2e} at {at} over {n} scalars"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    (pass, format!("{}; {secs:.1} s", parts.join("; ")))
}

// ---------------------------------------------------------------- 3, 4

fn normalization_suite() -> (bool, String) {
    let cfg = ModelConfig::desk();
    let det = TieredDetector::new(cfg.clone(), 21).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst = 0.0f64;
    let (mut attention_rows, mut pools, mut pairs) = (0usize, 0usize, 0usize);
    for _ in 0..100 {
        let spread = rng.random_range(0.1..5.0);
        let planes: Vec<Tensor> = (0..cfg.su_count).map(|_| random_planes(&cfg, &mut rng, spread)).collect();
        let mut s = Session::new(&det.params, Trainable::Nothing);
        let out = forward(&cfg, &mut s, &planes).unwrap();
        let mut dev = |values: &[f64]| worst = worst.max((values.iter().sum::<f64>() - 1.0).abs());
        for a in &s.attention_maps {
            let v = s.graph.value(*a);
            let n = *v.shape().last().unwrap();
            for row in v.data().chunks(n) {
                dev(row);
                attention_rows += 1;
            }
        }
        for p in &s.pool_weights {
            dev(s.graph.value(*p).data());
            pools += 1;
        }
        for p in out.su_probs.iter().chain([&out.group_probs]) {
            dev(s.graph.value(*p).data());
            pairs += 1;
        }
    }
    (
        worst <= 1e-8,
        format!("{attention_rows} attention rows, {pools} pooling vectors, {pairs} probability pairs; max |sum - 1| = {worst:.1e}"),
    )
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn fusion_invariance() -> (bool, String) {
    let cfg = ModelConfig::desk();
    assert_eq!(cfg.su_count, 3);
    let det = TieredDetector::new(cfg.clone(), 31).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let perms = permutations(3);
    let mut mismatches = 0;
    for _ in 0..10 {
        let planes: Vec<Tensor> = (0..3).map(|_| random_planes(&cfg, &mut rng, 2.0)).collect();
        let reference = det.predict(&planes).unwrap();
        for p in &perms {
            let shuffled: Vec<Tensor> = p.iter().map(|&i| planes[i].clone()).collect();
            let out = det.predict(&shuffled).unwrap();
            if out.map(f64::to_bits) != reference.map(f64::to_bits) {
                mismatches += 1;
            }
        }
    }
    (mismatches == 0 && perms.len() == 6, format!("10 inputs x {} permutations, {mismatches} bitwise mismatches", perms.len()))
}

// ---------------------------------------------------------------- 5

fn covariance_contracts() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let (mut defect, mut worst_q, mut worst_im) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let rows = rng.random_range(1..=12);
        let cols = rng.random_range(1..=64);
        let variance = 10f64.powf(rng.random_range(-3.0..3.0));
        let y = SignalMatrix {
            rows,
            cols,
            entries: (0..rows * cols).map(|_| complex_gaussian(variance, &mut rng)).collect(),
            su_index: 0,
            period_index: 0,
            label: 0,
        };
        let r = covariance(&y).unwrap();
        defect = defect.max(r.max_hermitian_defect());
        for _ in 0..100 {
            let x: Vec<Complex64> = (0..rows).map(|_| complex_gaussian(1.0, &mut rng)).collect();
            let scale = r.trace() * x.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let q = r.quadratic_form(&x);
            // negative only through rounding, relative to the form's scale
            worst_q = worst_q.min(q.re / scale);
            worst_im = worst_im.max(q.im.abs() / scale);
        }
    }
    let pass = defect <= 1e-10 && worst_q >= -1e-12;
    (
        pass,
        format!("max Hermitian defect {defect:.1e}; min x^H R x / (tr R |x|^2) = {worst_q:.1e}; max |Im| ratio {worst_im:.1e}"),
    )
}

// ---------------------------------------------------------------- desk pipeline

struct Desk {
    scenario: ScenarioConfig,
    detector: TieredDetector,
    report: DetectionReport,
    train_secs: f64,
    total_secs: f64,
    history: String,
}

fn desk_pipeline() -> Desk {
    let start = Instant::now();
    let scenario = ScenarioConfig::desk();
    let train = TrainConfig::desk();
    let ds = Dataset::generate(&scenario, 4000, LabelPolicy::Alternating, scenario.seed).unwrap();
    let mut det = TieredDetector::new(ModelConfig::desk(), train.seed).unwrap();
    let data = PreparedData::build(&mut det, &ds, train.val_fraction, true).unwrap();
    let hash = scenario.content_hash();
    let mut history = Vec::new();
    let mut s1 = Trainer::new(train.clone(), Stage::One, det, "desk".into(), hash.clone()).unwrap();
    s1.run(&data, |r| history.push(format!("s1e{} loss {:.4} val {:.3}", r.epoch, r.loss, r.val_accuracy)))
        .unwrap();
    let mut s2 = Trainer::new(train, Stage::Two, s1.detector, "desk".into(), hash).unwrap();
    s2.run(&data, |r| history.push(format!("s2e{} loss {:.4} val {:.3}", r.epoch, r.loss, r.val_accuracy)))
        .unwrap();
    let train_secs = start.elapsed().as_secs_f64();
    let report = evaluate(&s2.detector, &scenario, &EvalConfig::default()).unwrap();
    Desk {
        scenario,
        detector: s2.detector,
        report,
        train_secs,
        total_secs: start.elapsed().as_secs_f64(),
        history: history.join(", "),
    }
}

// ---------------------------------------------------------------- 2

fn calibration(desk: &Desk) -> (bool, String) {
    let start = Instant::now();
    let h0 = |seed: u64| {
        let sc = ScenarioConfig {
            seed,
            ..desk.scenario.clone()
        };
        let ds = Dataset::generate(&sc, 5000, LabelPolicy::AllH0, seed).unwrap();
        statistics(Some(&desk.detector), &ds, Method::Transformer).unwrap()
    };
    let table = ThresholdTable::new(h0(1001)).unwrap();
    let fresh = h0(2002);
    let mut pass = true;
    let mut parts = Vec::new();
    for pfa in [0.05, 0.09, 0.1, 0.2] {
        let emp = fraction_above(&fresh, table.threshold(pfa));
        pass &= (emp - pfa).abs() <= 0.02;
        parts.push(format!("{pfa} -> {emp:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 300.0;
    (pass, format!("empirical pfa on 5000 fresh H0: {}; {secs:.0} s", parts.join(", ")))
}

// ---------------------------------------------------------------- 6, 7

fn trend(desk: &Desk) -> (bool, String) {
    let pd: Vec<(f64, f64)> = [-150.0, -147.5, -145.0]
        .iter()
        .map(|&n0| (n0, desk.report.summary(Method::Transformer, n0).unwrap().pd_at_reference))
        .collect();
    let decreasing = pd.windows(2).all(|w| w[1].1 < w[0].1);
    let in_time = desk.total_secs < 30.0 * 60.0;
    let table: Vec<String> = pd.iter().map(|(n0, p)| format!("Pd({n0})={p:.3}")).collect();
    (
        decreasing && in_time,
        format!(
            "at pfa=0.09: {}; train {:.0} s, total {:.0} s [{}]",
            table.join(" "),
            desk.train_secs,
            desk.total_secs,
            desk.history
        ),
    )
}

fn cooperative_gain(desk: &Desk) -> (bool, String) {
    let t = desk.report.summary(Method::Transformer, -150.0).unwrap();
    let e = desk.report.summary(Method::Energy, -150.0).unwrap();
    let bar = 0.5 + 3.0 * t.chance_auc_sigma;
    (
        t.auc >= e.auc && t.auc > bar,
        format!(
            "N0=-150: transformer AUC {:.4}, energy AUC {:.4}, chance bar 0.5+3*{:.4} = {:.4}",
            t.auc, e.auc, t.chance_auc_sigma, bar
        ),
    )
}

// ---------------------------------------------------------------- 8, 9, 10

fn evaluators() -> (bool, String) {
    let units = [
        complexity_cnn_lstm(&CnnLstmInputs::ones()).total(),
        complexity_3dcnn(&Cnn3dInputs::ones()).total(),
        complexity_transformer(&TransformerInputs::ones()).total(),
    ];
    let pass = units == [11, 4, 4];
    let lstm = complexity_cnn_lstm(&CnnLstmInputs::published());
    let cnn = complexity_3dcnn(&Cnn3dInputs::published());
    let tr = complexity_transformer(&TransformerInputs::from_model(&ModelConfig::paper()));
    println!("  closed-form complexity at the published configuration (informational):");
    for (name, terms, published) in [
        ("CNN-LSTM", &lstm, PUBLISHED_CNN_LSTM_FLOPS),
        ("3D-CNN", &cnn, PUBLISHED_CNN3D_FLOPS),
        ("transformer", &tr, PUBLISHED_TRANSFORMER_FLOPS),
    ] {
        let rows: Vec<String> = terms.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!(
            "    {name:<12} total {:>12}  table {:>12}  delta {:>+13}  [{}]",
            terms.total(),
            published,
            terms.total() as i64 - published as i64,
            rows.join(", ")
        );
    }
    println!("  per-layer MACs of the published shape against the published table (informational):");
    for line in count_model_flops(&ModelConfig::paper(), 100).unwrap().to_text().lines() {
        println!("    {line}");
    }
    (pass, format!("unit inputs: CNN-LSTM {}, 3D-CNN {}, transformer {}", units[0], units[1], units[2]))
}

fn patch_embedding() -> (bool, String) {
    let cfg = ModelConfig {
        layout: ChannelLayout::RealImag,
        ..ModelConfig::paper()
    };
    let f = count_model_flops(&cfg, 100).unwrap();
    let row = f.tiers[0].rows.iter().find(|r| r.name == "Patch Embedding").unwrap();
    (row.macs == 245_760, format!("Patch Embedding = {} (table 245760)", row.macs))
}

fn latency() -> (bool, String) {
    let sc = ScenarioConfig::paper();
    let det = TieredDetector::new(ModelConfig::paper(), 0).unwrap();
    let signals = bench_signals(&sc, 1).unwrap();
    let r = bench_inference(&det, &signals, sc.noise_power_mw(), 20).unwrap();
    (
        r.inference.median_ms < EVACUATION_BOUND_MS,
        format!(
            "published-shape model, 20 reps: preprocessing median {:.3} ms, inference median {:.2} ms p95 {:.2} ms (bound {EVACUATION_BOUND_MS} ms; reported {} ms)",
            r.preprocessing.median_ms, r.inference.median_ms, r.inference.p95_ms, r.published_inference_ms
        ),
    )
}

// ---------------------------------------------------------------- 11

fn small_pipeline() -> (String, String, Vec<u8>) {
    let scenario = ScenarioConfig::desk();
    let train = TrainConfig {
        epochs: 2,
        stage2_epochs: 2,
        ..TrainConfig::desk()
    };
    let ds = Dataset::generate(&scenario, 150, LabelPolicy::Alternating, scenario.seed).unwrap();
    let mut det = TieredDetector::new(ModelConfig::desk(), train.seed).unwrap();
    let data = PreparedData::build(&mut det, &ds, train.val_fraction, true).unwrap();
    let mut s1 = Trainer::new(train.clone(), Stage::One, det, "d".into(), "s".into()).unwrap();
    s1.run(&data, |_| {}).unwrap();
    let mut s2 = Trainer::new(train, Stage::Two, s1.detector, "d".into(), "s".into()).unwrap();
    s2.run(&data, |_| {}).unwrap();
    let eval = EvalConfig {
        n0_dbm_per_hz: vec![-150.0, -145.0],
        calibration_samples: 200,
        test_samples: 100,
        ..EvalConfig::default()
    };
    let report = evaluate(&s2.detector, &scenario, &eval).unwrap();
    (report.to_csv(), report.to_json(), s2.checkpoint().to_bytes())
}

fn determinism() -> (bool, String) {
    let a = small_pipeline();
    let b = small_pipeline();
    let same = (a.0 == b.0, a.1 == b.1, a.2 == b.2);
    (
        same == (true, true, true),
        format!("report csv identical: {}, json identical: {}, checkpoint identical: {}", same.0, same.1, same.2),
    )
}

fn main() {
    let start = Instant::now();
    let mut outcomes = vec![
        criterion(1, "gradient correctness", gradient_check),
        criterion(3, "normalization", normalization_suite),
        criterion(4, "fusion invariance", fusion_invariance),
        criterion(5, "covariance contracts", covariance_contracts),
        criterion(8, "complexity evaluators", evaluators),
        criterion(9, "patch embedding FLOPs", patch_embedding),
        criterion(10, "latency bound", latency),
        criterion(11, "determinism", determinism),
    ];

    println!("  building the desk pipeline (4000 samples, two stages, 3 noise levels) ...");
    let desk = catch_unwind(desk_pipeline);
    match &desk {
        Ok(d) => {
            outcomes.push(criterion(2, "calibration", || calibration(d)));
            outcomes.push(criterion(6, "Pd trend over N0", || trend(d)));
            outcomes.push(criterion(7, "cooperative gain", || cooperative_gain(d)));
            println!("  desk summary:");
            for line in d.report.summary_csv().lines() {
                println!("    {line}");
            }
        }
        Err(_) => {
            for (id, name) in [(2, "calibration"), (6, "Pd trend over N0"), (7, "cooperative gain")] {
                outcomes.push(criterion(id, name, || (false, "desk pipeline failed".into())));
            }
        }
    }

    outcomes.sort_by_key(|o| o.id);
    println!("\nacceptance summary ({:.0} s):", start.elapsed().as_secs_f64());
    for o in &outcomes {
        println!("  criterion {:>2} {:<28} {}", o.id, o.name, if o.pass { "PASS" } else { "FAIL" });
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
