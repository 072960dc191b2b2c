//! `spectrum-lab`: generate data, train the two-tier detector, evaluate it
//! against the energy detector and report model cost.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use spectrum_lab::complexity::{
    bench_inference, bench_signals, complexity_3dcnn, complexity_cnn_lstm, complexity_transformer, count_model_flops,
    Cnn3dInputs, CnnLstmInputs, Terms, TransformerInputs, PUBLISHED_CNN3D_FLOPS, PUBLISHED_CNN_LSTM_FLOPS,
    PUBLISHED_TRANSFORMER_FLOPS,
};
use spectrum_lab::config::{Profile, RunConfig};
use spectrum_lab::dataset::{load_dataset_header, ChannelLayout, Dataset, LabelPolicy};
use spectrum_lab::detect::{evaluate, DetectionReport, Method, REFERENCE_PFA};
use spectrum_lab::model::{Checkpoint, TieredDetector};
use spectrum_lab::train::{check_compatible, training_meta, PreparedData, Stage, Trainer};
use spectrum_lab::Error;

/// Output-directory override used when `--out` is absent.
const OUT_ENV: &str = "SPECTRUM_LAB_OUT";
const DATASET_FILE: &str = "dataset.bin";
const CONFIG_FILE: &str = "config.toml";

#[derive(Parser)]
#[command(name = "spectrum-lab", version, about = "Mobile cooperative spectrum sensing lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate labelled cooperative sensing samples.
    GenData(GenDataArgs),
    /// Train the SU tier (stage 1) or the collaborative tier (stage 2).
    Train(TrainArgs),
    /// Calibrate thresholds on fresh H0 draws and measure detection.
    Evaluate(EvaluateArgs),
    /// Write the per-layer MAC table and closed-form complexity values.
    ReportFlops(ReportFlopsArgs),
    /// Time preprocessing and inference per sample.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML file layered over the profile.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "desk")]
    profile: Profile,
}

#[derive(Args)]
struct GenDataArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `data.train_samples`.
    #[arg(long)]
    samples: Option<usize>,
    /// Overrides `scenario.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_parser = ["1", "2"])]
    stage: String,
    /// Directory written by gen-data.
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    ckpt: PathBuf,
    /// Completed stage-1 checkpoint (stage 2 only).
    #[arg(long)]
    init: Option<PathBuf>,
    /// Overrides the epoch count of the selected stage.
    #[arg(long)]
    epochs: Option<usize>,
    /// Continue from `--ckpt` if it exists.
    #[arg(long)]
    resume: bool,
    /// TOML overlay on top of the dataset's configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for reports; defaults to the checkpoint's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Ed,
    None,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Stage-2 checkpoint.
    #[arg(long)]
    ckpt: PathBuf,
    /// Directory written by gen-data; its scenario is the evaluation base.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated false-alarm targets; empty selects the default grid.
    #[arg(long)]
    pfa: Option<String>,
    /// Comma-separated noise densities in dBm/Hz.
    #[arg(long, allow_hyphen_values = true)]
    n0: Option<String>,
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    /// H0 draws used to set each threshold.
    #[arg(long)]
    calibration: Option<usize>,
    /// Test samples per noise level.
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportFlopsArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Count with real and imaginary planes only.
    #[arg(long)]
    two_channel: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Trained checkpoint; a freshly initialized model otherwise.
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Command failure carrying its exit code.
#[derive(Debug)]
enum Failure {
    Config(String),
    Prerequisite(String),
    Compatibility(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Internal(_) => 1,
            Self::Config(_) => 2,
            Self::Prerequisite(_) => 3,
            Self::Compatibility(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Prerequisite(m) | Self::Compatibility(m) | Self::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Self::Config(e.to_string()),
            Error::Version(_) | Error::Parse(_) => Self::Compatibility(e.to_string()),
            _ => Self::Internal(e.to_string()),
        }
    }
}

type CmdResult<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::ReportFlops(a) => report_flops(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

/// Record of one command invocation; every output file is listed with its
/// SHA-256.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    config: serde_json::Value,
    seed: u64,
    dataset_hash: Option<String>,
    checkpoint_hash: Option<String>,
    outputs: BTreeMap<String, String>,
    created_unix_s: u64,
}

struct Outputs {
    dir: PathBuf,
    written: BTreeMap<String, String>,
}

impl Outputs {
    fn new(flag: Option<PathBuf>, default: PathBuf) -> CmdResult<Self> {
        let dir = flag
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or(default);
        fs::create_dir_all(&dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            written: BTreeMap::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CmdResult {
        write_file(&self.path(name), bytes)?;
        self.written.insert(name.to_string(), sha256(bytes));
        Ok(())
    }

    /// Records a file written elsewhere under its path relative to the
    /// output directory when possible.
    fn record(&mut self, path: &Path) -> CmdResult<String> {
        let hash = sha256(&read_file(path)?);
        let name = path.strip_prefix(&self.dir).unwrap_or(path).display().to_string();
        self.written.insert(name, hash.clone());
        Ok(hash)
    }

    fn finish(
        self,
        command: &str,
        config: &impl Serialize,
        seed: u64,
        dataset_hash: Option<String>,
        checkpoint_hash: Option<String>,
    ) -> CmdResult {
        let manifest = RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config).map_err(|e| Failure::Internal(e.to_string()))?,
            seed,
            dataset_hash,
            checkpoint_hash,
            outputs: self.written,
            created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Internal(e.to_string()))?;
        write_file(&self.dir.join(format!("{command}.manifest.json")), text.as_bytes())
    }
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::Config(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> CmdResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::Internal(format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn load_config(args: &ConfigArgs) -> CmdResult<RunConfig> {
    let cfg = match &args.config {
        Some(p) => RunConfig::from_toml_str(&read_text(p)?, args.profile)?,
        None => RunConfig::profile(args.profile),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Configuration stored beside a dataset, with an optional user overlay.
fn data_config(data: &Path, overlay: Option<&Path>) -> CmdResult<RunConfig> {
    let stored = data.join(CONFIG_FILE);
    let mut cfg = if stored.exists() {
        RunConfig::from_toml_str(&read_text(&stored)?, Profile::Desk)?
    } else {
        RunConfig::profile(Profile::Desk)
    };
    if let Some(p) = overlay {
        cfg = cfg.overlay(&read_text(p)?)?;
    }
    Ok(cfg)
}

fn dataset_path(data: &Path) -> CmdResult<PathBuf> {
    let path = data.join(DATASET_FILE);
    if !path.is_file() {
        return Err(Failure::Prerequisite(format!("no dataset at {}", path.display())));
    }
    Ok(path)
}

fn load_checkpoint(path: &Path, what: &str) -> CmdResult<Checkpoint> {
    if !path.is_file() {
        return Err(Failure::Prerequisite(format!("{what} {} does not exist", path.display())));
    }
    Ok(Checkpoint::load(path, None)?)
}

fn gen_data(a: GenDataArgs) -> CmdResult {
    let mut cfg = load_config(&a.cfg)?;
    if let Some(k) = a.samples {
        cfg.data.train_samples = k;
    }
    if let Some(s) = a.seed {
        cfg.scenario.seed = s;
    }
    cfg.validate()?;
    let mut out = Outputs::new(a.out, PathBuf::from("runs/data"))?;
    let seed = cfg.scenario.seed;
    eprintln!("generating {} samples (seed {seed})", cfg.data.train_samples);
    let ds = Dataset::generate(&cfg.scenario, cfg.data.train_samples, LabelPolicy::Alternating, seed)?;
    let bytes = ds.to_bytes();
    let dataset_hash = sha256(&bytes);
    out.write(DATASET_FILE, &bytes)?;
    out.write("index.csv", ds.index_csv().as_bytes())?;
    out.write(CONFIG_FILE, cfg.to_toml_string().as_bytes())?;
    println!("dataset {} ({} samples) sha256 {dataset_hash}", out.path(DATASET_FILE).display(), ds.samples.len());
    out.finish("gen-data", &cfg, seed, Some(dataset_hash), None)
}

fn train(a: TrainArgs) -> CmdResult {
    let stage = if a.stage == "1" { Stage::One } else { Stage::Two };
    let mut cfg = data_config(&a.data, a.config.as_deref())?;
    let ds_path = dataset_path(&a.data)?;
    let ds_bytes = read_file(&ds_path)?;
    let dataset_hash = sha256(&ds_bytes);
    let ds = Dataset::from_bytes(&ds_bytes, None)?;
    let scenario_hash = ds.scenario.content_hash();
    check_compatible(&cfg.model, &ds.scenario)?;
    if let Some(n) = a.epochs {
        match stage {
            Stage::One => cfg.train.epochs = n,
            Stage::Two => cfg.train.stage2_epochs = n,
        }
    }
    cfg.train.validate()?;

    let default_dir = a.ckpt.parent().filter(|p| !p.as_os_str().is_empty()).map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let mut out = Outputs::new(a.out, default_dir)?;

    let (mut trainer, data) = if a.resume && a.ckpt.is_file() {
        let ck = Checkpoint::load(&a.ckpt, Some(&cfg.model))?;
        let meta = training_meta(&ck)?;
        if meta.stage != stage {
            return Err(Failure::Prerequisite(format!(
                "{} holds a stage-{} run, not stage {}",
                a.ckpt.display(),
                meta.stage.number(),
                stage.number()
            )));
        }
        if meta.dataset_hash != dataset_hash {
            return Err(Failure::Compatibility("checkpoint was trained on a different dataset".into()));
        }
        let mut trainer = Trainer::resume(ck)?;
        if let Some(n) = a.epochs {
            match stage {
                Stage::One => trainer.cfg.epochs = n,
                Stage::Two => trainer.cfg.stage2_epochs = n,
            }
        }
        let data = PreparedData::build(&mut trainer.detector, &ds, trainer.cfg.val_fraction, false)?;
        (trainer, data)
    } else {
        let (mut detector, fit) = match stage {
            Stage::One => (TieredDetector::new(cfg.model.clone(), cfg.train.seed)?, true),
            Stage::Two => {
                let init = a
                    .init
                    .as_ref()
                    .ok_or_else(|| Failure::Prerequisite("stage 2 needs --init with a stage-1 checkpoint".into()))?;
                let ck = load_checkpoint(init, "stage-1 checkpoint")?;
                let meta = training_meta(&ck)?;
                if meta.stage != Stage::One || !meta.stage1_complete {
                    return Err(Failure::Prerequisite(format!(
                        "{} is not a completed stage-1 checkpoint",
                        init.display()
                    )));
                }
                if meta.scenario_hash != scenario_hash {
                    return Err(Failure::Compatibility(
                        "stage-1 checkpoint was trained on a different scenario".into(),
                    ));
                }
                (ck.detector, false)
            }
        };
        check_compatible(&detector.config, &ds.scenario)?;
        let data = PreparedData::build(&mut detector, &ds, cfg.train.val_fraction, fit)?;
        let trainer = Trainer::new(cfg.train.clone(), stage, detector, dataset_hash.clone(), scenario_hash)?;
        (trainer, data)
    };

    eprintln!(
        "stage {}: epochs {}..{} over {} training samples",
        stage.number(),
        trainer.epochs_done + 1,
        trainer.target_epochs(),
        data.train.len()
    );
    let report = trainer.run(&data, |r| {
        eprintln!(
            "epoch {:>3}  loss {:.6}  train acc {:.4}  val acc {:.4}",
            r.epoch, r.loss, r.train_accuracy, r.val_accuracy
        )
    })?;
    trainer.checkpoint().save(&a.ckpt)?;
    let checkpoint_hash = out.record(&a.ckpt)?;

    let name = format!("train_stage{}", stage.number());
    let history = spectrum_lab::train::TrainReport {
        epochs: trainer.history.clone(),
        ..report.clone()
    };
    out.write(&format!("{name}.csv"), history.to_csv().as_bytes())?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Internal(e.to_string()))?;
    out.write(&format!("{name}.json"), json.as_bytes())?;
    println!("checkpoint {} sha256 {checkpoint_hash}", a.ckpt.display());
    out.finish(
        &format!("train-stage{}", stage.number()),
        &trainer.cfg,
        trainer.cfg.seed,
        Some(dataset_hash),
        Some(checkpoint_hash),
    )
}

fn parse_list(text: &str, what: &str) -> CmdResult<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Failure::Config(format!("bad {what} value {s:?}"))))
        .collect()
}

/// `n0,<method>...` table of one reference-point metric per noise level.
fn per_noise_table(report: &DetectionReport, n0s: &[f64], methods: &[Method], metric: impl Fn(&spectrum_lab::detect::NoiseSummary) -> f64) -> String {
    let mut out = String::from("n0_dbm_per_hz");
    for m in methods {
        out.push(',');
        out.push_str(m.name());
    }
    out.push('\n');
    for &n0 in n0s {
        out.push_str(&n0.to_string());
        for &m in methods {
            out.push(',');
            if let Some(s) = report.summary(m, n0) {
                out.push_str(&metric(s).to_string());
            }
        }
        out.push('\n');
    }
    out
}

fn evaluate_cmd(a: EvaluateArgs) -> CmdResult {
    let mut cfg = data_config(&a.data, a.config.as_deref())?;
    if let Some(p) = &a.pfa {
        cfg.eval.pfa = parse_list(p, "pfa")?;
    }
    if let Some(n) = &a.n0 {
        cfg.eval.n0_dbm_per_hz = parse_list(n, "n0")?;
    }
    if let Some(b) = a.baseline {
        cfg.eval.energy_baseline = matches!(b, Baseline::Ed);
    }
    if let Some(q) = a.calibration {
        cfg.eval.calibration_samples = q;
    }
    if let Some(t) = a.test {
        cfg.eval.test_samples = t;
    }
    cfg.eval.validate()?;

    let ck = load_checkpoint(&a.ckpt, "checkpoint")?;
    let meta = training_meta(&ck)?;
    if meta.stage != Stage::Two {
        return Err(Failure::Prerequisite(format!(
            "{} is a stage-{} checkpoint; evaluation needs stage 2",
            a.ckpt.display(),
            meta.stage.number()
        )));
    }
    let ds_path = dataset_path(&a.data)?;
    let header = load_dataset_header(&ds_path)?;
    if header.scenario.content_hash() != meta.scenario_hash {
        return Err(Failure::Compatibility("checkpoint was trained on a different scenario".into()));
    }
    check_compatible(&ck.detector.config, &header.scenario)?;

    let mut out = Outputs::new(a.out, PathBuf::from("runs/eval"))?;
    eprintln!(
        "evaluating at {:?} dBm/Hz ({} calibration, {} test samples)",
        cfg.eval.n0_dbm_per_hz, cfg.eval.calibration_samples, cfg.eval.test_samples
    );
    let report = evaluate(&ck.detector, &header.scenario, &cfg.eval)?;

    out.write("report.csv", report.to_csv().as_bytes())?;
    out.write("report.json", report.to_json().as_bytes())?;
    out.write("summary.csv", report.summary_csv().as_bytes())?;
    for &n0 in &cfg.eval.n0_dbm_per_hz {
        out.write(&format!("roc_n0_{n0}.csv"), report.roc_csv(n0).as_bytes())?;
    }
    let mut methods = vec![Method::Transformer];
    if cfg.eval.energy_baseline {
        methods.push(Method::Energy);
    }
    let n0s = &cfg.eval.n0_dbm_per_hz;
    out.write("pd_vs_n0.csv", per_noise_table(&report, n0s, &methods, |s| s.pd_at_reference).as_bytes())?;
    out.write(
        "sensing_error_vs_n0.csv",
        per_noise_table(&report, n0s, &methods, |s| s.sensing_error_at_reference).as_bytes(),
    )?;
    out.write(
        "accuracy_vs_n0.csv",
        per_noise_table(&report, n0s, &methods, |s| s.accuracy_at_reference).as_bytes(),
    )?;
    println!("pfa = {REFERENCE_PFA}");
    print!("{}", report.summary_csv());
    let ck_hash = sha256(&read_file(&a.ckpt)?);
    let ds_hash = sha256(&read_file(&ds_path)?);
    out.finish("evaluate", &cfg.eval, cfg.eval.seed, Some(ds_hash), Some(ck_hash))
}

fn terms_csv(out: &mut String, model: &str, inputs: &str, terms: &Terms, published: Option<u64>) {
    for (name, v) in &terms.0 {
        out.push_str(&format!("{model},{inputs},{name},{v},\n"));
    }
    let p = published.map(|p| p.to_string()).unwrap_or_default();
    out.push_str(&format!("{model},{inputs},total,{},{p}\n", terms.total()));
}

fn report_flops(a: ReportFlopsArgs) -> CmdResult {
    let mut cfg = load_config(&a.cfg)?;
    if a.two_channel {
        cfg.model.layout = ChannelLayout::RealImag;
    }
    cfg.model.validate()?;
    let mut out = Outputs::new(a.out, PathBuf::from("runs/flops"))?;
    let flops = count_model_flops(&cfg.model, cfg.scenario.samples_per_period)?;
    out.write("flops.csv", flops.to_csv().as_bytes())?;
    let text = flops.to_text();
    out.write("flops.txt", text.as_bytes())?;

    let mut complexity = String::from("model,inputs,term,value,published_flops\n");
    terms_csv(&mut complexity, "cnn_lstm", "ones", &complexity_cnn_lstm(&CnnLstmInputs::ones()), None);
    terms_csv(
        &mut complexity,
        "cnn_lstm",
        "published",
        &complexity_cnn_lstm(&CnnLstmInputs::published()),
        Some(PUBLISHED_CNN_LSTM_FLOPS),
    );
    terms_csv(&mut complexity, "3dcnn", "ones", &complexity_3dcnn(&Cnn3dInputs::ones()), None);
    terms_csv(
        &mut complexity,
        "3dcnn",
        "published",
        &complexity_3dcnn(&Cnn3dInputs::published()),
        Some(PUBLISHED_CNN3D_FLOPS),
    );
    terms_csv(&mut complexity, "transformer", "ones", &complexity_transformer(&TransformerInputs::ones()), None);
    terms_csv(
        &mut complexity,
        "transformer",
        "model",
        &complexity_transformer(&TransformerInputs::from_model(&cfg.model)),
        Some(PUBLISHED_TRANSFORMER_FLOPS),
    );
    out.write("complexity.csv", complexity.as_bytes())?;

    let det = TieredDetector::new(cfg.model.clone(), cfg.train.seed)?;
    let mut params = String::from("tier,component,parameters\n");
    for (tier, comp, n) in det.parameter_breakdown() {
        params.push_str(&format!("{tier},{comp},{n}\n"));
    }
    out.write("parameters.csv", params.as_bytes())?;
    print!("{text}");
    out.finish("report-flops", &cfg.model, cfg.train.seed, None, None)
}

fn bench(a: BenchArgs) -> CmdResult {
    let cfg = load_config(&a.cfg)?;
    if a.reps == 0 {
        return Err(Failure::Config("--reps must be at least 1".into()));
    }
    let (det, ck_hash) = match &a.ckpt {
        Some(p) => {
            let ck = load_checkpoint(p, "checkpoint")?;
            (ck.detector, Some(sha256(&read_file(p)?)))
        }
        None => (TieredDetector::new(cfg.model.clone(), cfg.train.seed)?, None),
    };
    check_compatible(&det.config, &cfg.scenario)?;
    let mut out = Outputs::new(a.out, PathBuf::from("runs/bench"))?;
    let signals = bench_signals(&cfg.scenario, cfg.scenario.seed)?;
    let report = bench_inference(&det, &signals, cfg.scenario.noise_power_mw(), a.reps)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Internal(e.to_string()))?;
    out.write("bench.json", json.as_bytes())?;
    println!(
        "reps {}  preprocessing median {:.3} ms p95 {:.3} ms  inference median {:.3} ms p95 {:.3} ms  within 2 s bound: {}",
        report.inference.reps,
        report.preprocessing.median_ms,
        report.preprocessing.p95_ms,
        report.inference.median_ms,
        report.inference.p95_ms,
        report.within_evacuation_bound
    );
    out.finish("bench", &cfg, cfg.scenario.seed, None, ck_hash)
}
