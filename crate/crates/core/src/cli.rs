//! Command-line interface: mine, stats, index, train, eval and synth.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::candidates::{Bm25Index, SamplingMode};
use crate::error::{Error, Result};
use crate::lexicon::load_lexicon;
use crate::miner::{
    mine_documents, read_corpus, read_examples, ExampleWriter, MaskMode, MinerConfig,
    StatsAccumulator, TrainingExample,
};
use crate::modelkit::{Checkpoint, GeneratorParams, Vocabulary, EOS, UNK};
use crate::synthetic::{synthetic_documents, SyntheticConfig};
use crate::trainer::{
    eval_items, evaluate, run, EvalMetrics, TrainReport, TrainerConfig, GENERATOR_FILE,
    REPORT_FILE, VERIFIER_FILE, VOCAB_FILE,
};

const BM25_K1: f64 = 1.2;
const BM25_B: f64 = 0.75;
/// Documents mined per parallel batch while streaming.
const MINE_BATCH: usize = 256;

#[derive(Debug, Parser)]
#[command(name = "logigan", version, about = "Logic-indicator mining and adversarial pre-training")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine masked-statement examples from a corpus.
    Mine(MineArgs),
    /// Summarize an examples file.
    Stats(StatsArgs),
    /// Build a BM25 index over the gold statements of an examples file.
    Index(IndexArgs),
    /// Run warm-up and adversarial training.
    Train(TrainArgs),
    /// Evaluate generator checkpoints on an examples file.
    Eval(EvalArgs),
    /// Write a template-generated synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Text file, JSON-lines file or directory of either.
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Indicator lexicon overriding the built-in one.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Miner config JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mask_mode: Option<MaskMode>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub examples: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    pub examples: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub examples: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mode: Option<SamplingMode>,
    /// Parent directory of the run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub examples: PathBuf,
    /// Run directory holding generator and vocabulary; repeatable.
    #[arg(long, required = true)]
    pub checkpoint: Vec<PathBuf>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub n_cand: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 700)]
    pub documents: usize,
    #[arg(long, default_value_t = 3)]
    pub passages: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub version: String,
}

impl RunManifest {
    fn new(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    fn input(mut self, path: &Path) -> Result<Self> {
        self.inputs.push(InputHash {
            path: path.to_path_buf(),
            sha256: sha256_path(path)?,
        });
        Ok(self)
    }

    fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Manifest location for a single-file output.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn hash_file(h: &mut Sha256, path: &Path) -> Result<()> {
    let mut f = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f
            .read(&mut buf)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if n == 0 {
            return Ok(());
        }
        h.update(&buf[..n]);
    }
}

/// SHA-256 of a file, or of a directory's files (name and content) in
/// name order.
pub fn sha256_path(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(format!("listing {}", path.display()), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for f in files {
            h.update(f.file_name().unwrap_or_default().as_encoded_bytes());
            h.update([0u8]);
            hash_file(&mut h, &f)?;
        }
    } else {
        hash_file(&mut h, path)?;
    }
    Ok(hex(&h.finalize()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn load_examples(path: &Path) -> Result<Vec<TrainingExample>> {
    read_examples(path)?.collect()
}

fn cmd_mine(a: &MineArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::io(format!("reading config {}", p.display()), e))?;
            serde_json::from_str::<MinerConfig>(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => MinerConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.sampler.seed = seed;
    }
    if let Some(mode) = a.mask_mode {
        cfg.mask_mode = mode;
    }
    cfg.validate()?;
    let lexicon = load_lexicon(a.lexicon.as_deref())?;

    let mut manifest = RunManifest::new("mine", serde_json::to_value(&cfg)?, Some(cfg.sampler.seed))
        .input(&a.corpus)?;
    if let Some(l) = &a.lexicon {
        manifest = manifest.input(l)?;
    }
    manifest = manifest.output(&a.out);
    manifest.write(&manifest_path(&a.out))?;

    let mut writer = ExampleWriter::new(create(&a.out)?)?;
    let mut docs = read_corpus(&a.corpus)?;
    loop {
        let batch: Vec<_> = docs.by_ref().take(MINE_BATCH).collect::<Result<_>>()?;
        if batch.is_empty() {
            break;
        }
        for e in mine_documents(&batch, Some(&lexicon), &cfg)? {
            writer.write(&e)?;
        }
    }
    let written = writer.written();
    writer.finish()?;
    info!("mined {written} examples into {}", a.out.display());
    Ok(())
}

fn cmd_stats(a: &StatsArgs) -> Result<()> {
    RunManifest::new("stats", serde_json::Value::Null, None)
        .input(&a.examples)?
        .output(&a.out)
        .write(&manifest_path(&a.out))?;
    let mut acc = StatsAccumulator::default();
    for e in read_examples(&a.examples)? {
        acc.push(&e?);
    }
    let report = acc.finish();
    write_json(&a.out, &report)?;
    print!("{}", report.render_text());
    Ok(())
}

fn cmd_index(a: &IndexArgs) -> Result<()> {
    RunManifest::new(
        "index",
        serde_json::json!({ "k1": BM25_K1, "b": BM25_B }),
        None,
    )
    .input(&a.examples)?
    .output(&a.out)
    .write(&manifest_path(&a.out))?;
    let mut statements = Vec::new();
    for e in read_examples(&a.examples)? {
        statements.push(e?.statement);
    }
    let index = Bm25Index::build(&statements, BM25_K1, BM25_B)?;
    index.save(&a.out)?;
    info!("indexed {} statements", index.len());
    Ok(())
}

/// Plain-text per-iteration loss table.
pub fn loss_table(report: &TrainReport) -> String {
    let mut s = String::new();
    for (e, l) in report.warmup.iter().enumerate() {
        s.push_str(&format!("warmup epoch {e:>3}  L_tf {l:.6}\n"));
    }
    s.push_str("iter      L_ver       L_tf         KL   flip  v_acc\n");
    for r in &report.iterations {
        let acc = r
            .verifier_accuracy
            .map_or_else(|| "    -".to_string(), |a| format!("{a:.3}"));
        s.push_str(&format!(
            "{:>4} {:>10.6} {:>10.6} {:>10.6} {:>6.3} {:>6}\n",
            r.iteration, r.ver_loss, r.tf_loss, r.kl, r.flip_rate, acc
        ));
    }
    for (name, m) in [
        ("initial", &report.initial),
        ("warmup", &report.after_warmup),
        ("final", &report.final_eval),
    ] {
        if let Some(m) = m {
            s.push_str(&format!(
                "{name:<8} held-out L_tf {:.6}  ranking accuracy {:.4}\n",
                m.mean_tf, m.ranking_accuracy
            ));
        }
    }
    s
}

fn cmd_train(a: &TrainArgs) -> Result<PathBuf> {
    let mut cfg = TrainerConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = a.mode {
        cfg.mode = mode;
    }
    cfg.validate()?;
    let examples = load_examples(&a.examples)?;
    let index = a.index.as_deref().map(Bm25Index::load).transpose()?;

    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let dir = a.out.join(format!("seed{}-{secs}", cfg.seed));
    let mut outcome = run(&cfg, &examples, index.as_ref())?;

    std::fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut manifest = RunManifest::new("train", serde_json::to_value(&cfg)?, Some(cfg.seed))
        .input(&a.config)?
        .input(&a.examples)?;
    if let Some(ix) = &a.index {
        manifest = manifest.input(ix)?;
    }
    for f in [GENERATOR_FILE, VERIFIER_FILE, VOCAB_FILE, REPORT_FILE] {
        manifest = manifest.output(&dir.join(f));
    }
    manifest.write(&dir.join("manifest.json"))?;
    outcome.save(&dir)?;
    print!("{}", loss_table(&outcome.report));
    println!("run directory: {}", dir.display());
    Ok(dir)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub checkpoint: PathBuf,
    pub metrics: EvalMetrics,
}

fn load_generator(dir: &Path) -> Result<(Vocabulary, GeneratorParams)> {
    let vocab = Vocabulary::load(&dir.join(VOCAB_FILE))?;
    let generator = GeneratorParams::from_checkpoint(&Checkpoint::load(&dir.join(GENERATOR_FILE))?)?;
    if generator.vocab_size() != vocab.len() {
        return Err(Error::Invalid(format!(
            "checkpoint {} has vocabulary size {} but its vocabulary file has {}",
            dir.display(),
            generator.vocab_size(),
            vocab.len()
        )));
    }
    Ok((vocab, generator))
}

fn cmd_eval(a: &EvalArgs) -> Result<Vec<EvalRow>> {
    let mut manifest = RunManifest::new("eval", serde_json::json!({ "n_cand": a.n_cand }), None)
        .input(&a.examples)?;
    for c in &a.checkpoint {
        manifest = manifest.input(&c.join(GENERATOR_FILE))?.input(&c.join(VOCAB_FILE))?;
    }
    if let Some(ix) = &a.index {
        manifest = manifest.input(ix)?;
    }
    manifest.output(&a.out).write(&manifest_path(&a.out))?;

    let examples = load_examples(&a.examples)?;
    let index = match &a.index {
        Some(p) => Bm25Index::load(p)?,
        None => {
            let statements: Vec<&str> = examples.iter().map(|e| e.statement.as_str()).collect();
            Bm25Index::build(&statements, BM25_K1, BM25_B)?
        }
    };
    let mut rows = Vec::new();
    for dir in &a.checkpoint {
        let (vocab, generator) = load_generator(dir)?;
        let items = eval_items(&examples, &vocab, &index, a.n_cand);
        let known = items
            .iter()
            .flat_map(|i| i.gold.iter())
            .any(|&id| id != UNK && id != EOS);
        if !known {
            return Err(Error::Invalid(format!(
                "examples share no vocabulary with checkpoint {}",
                dir.display()
            )));
        }
        let metrics = evaluate(&generator, &items)?;
        println!(
            "{}  L_tf {:.6}  ranking accuracy {:.4}  ({} contexts)",
            dir.display(),
            metrics.mean_tf,
            metrics.ranking_accuracy,
            metrics.examples
        );
        rows.push(EvalRow {
            checkpoint: dir.clone(),
            metrics,
        });
    }
    write_json(&a.out, &rows)?;
    Ok(rows)
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let cfg = SyntheticConfig {
        documents: a.documents,
        passages: a.passages,
        seed: a.seed,
    };
    RunManifest::new("synth", serde_json::to_value(cfg)?, Some(a.seed))
        .output(&a.out)
        .write(&manifest_path(&a.out))?;
    let mut w = create(&a.out)?;
    for d in synthetic_documents(&cfg) {
        serde_json::to_writer(&mut w, &d)?;
        w.write_all(b"\n")
            .map_err(|e| Error::io(format!("writing {}", a.out.display()), e))?;
    }
    w.flush().map_err(|e| Error::io(format!("writing {}", a.out.display()), e))?;
    Ok(())
}

/// Runs a parsed command inside a thread pool sized by `--threads`.
pub fn execute(cli: &Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Mine(a) => cmd_mine(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Index(a) => cmd_index(a),
        Command::Train(a) => cmd_train(a).map(|_| ()),
        Command::Eval(a) => cmd_eval(a).map(|_| ()),
        Command::Synth(a) => cmd_synth(a),
    })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            manifest_path(Path::new("out/ex.jsonl")),
            PathBuf::from("out/ex.jsonl.manifest.json")
        );
    }

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "logigan", "--threads", "2", "mine", "corpus", "--out", "o.jsonl", "--mask-mode",
            "random-sentence", "--seed", "9",
        ])
        .unwrap();
        assert_eq!(cli.threads, Some(2));
        let Command::Mine(m) = cli.command else { panic!() };
        assert_eq!(m.mask_mode, Some(MaskMode::RandomSentence));
        assert_eq!(m.seed, Some(9));
        let cli = Cli::try_parse_from([
            "logigan", "train", "ex.jsonl", "--config", "c.json", "--mode", "ss+es",
        ])
        .unwrap();
        let Command::Train(t) = cli.command else { panic!() };
        assert_eq!(t.mode, Some(SamplingMode::SelfAndRetrieval));
    }

    #[test]
    fn hashes_are_stable() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.txt");
        std::fs::write(&f, "abc").unwrap();
        assert_eq!(
            sha256_path(&f).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let h1 = sha256_path(dir.path()).unwrap();
        assert_eq!(h1, sha256_path(dir.path()).unwrap());
    }
}
