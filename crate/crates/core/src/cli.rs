//! Batch command-line front end.
//!
//! Exit codes: 0 success, 2 bad invocation or unusable input, 1 failure
//! while running. Errors are printed to stderr as a single JSON object.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::ensemble::majority_vote;
use crate::error::Error;
use crate::labels::{read_sequence, write_sequence, GroundTruthVideo};
use crate::manifest::{VideoManifest, DEFAULT_NMS_IOU, DEFAULT_SCORE_MIN};
use crate::merging::{oracle_merge, PreparedVideo, TrackSet};
use crate::metrics::{aggregate, evaluate, EvalOptions};
use crate::scoring::{ComponentMask, WeightVector};
use crate::search::{random_search, Objective, SearchConfig, SearchResult, SearchVideo};
use crate::synth::{self, generate, generate_random, RandomLimits, ScenarioSpec};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SELECTIONS_FILE: &str = "selections.json";

#[derive(Debug, Parser)]
#[command(
    name = "vosmerge",
    version,
    about = "Link per-frame mask proposals into object tracks"
)]
pub struct Cli {
    /// Worker threads for video-level parallelism (0 = all cores).
    #[arg(long, global = true, env = "VOSMERGE_JOBS", default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drop low-score proposals and apply mask NMS.
    Filter(FilterArgs),
    /// Greedy merge with a weight vector.
    Merge(MergeArgs),
    /// Merge by maximum IoU against full ground truth.
    Oracle(OracleArgs),
    /// Score predicted label maps against ground truth.
    Eval(EvalArgs),
    /// Random search for merging weights.
    Search(SearchArgs),
    /// Pixel-wise majority vote over several result trees.
    Ensemble(EnsembleArgs),
    /// Write a synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Manifest files, or directories searched recursively for manifest.json.
    #[arg(long = "input", short = 'i', required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short = 'o')]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SCORE_MIN)]
    pub score_min: f64,
    #[arg(long, default_value_t = DEFAULT_NMS_IOU)]
    pub nms_iou: f64,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short = 'o')]
    pub out: PathBuf,
    /// `equal` or five comma-separated weights (obj,reid,maskprop,inv_reid,inv_maskprop).
    #[arg(long, conflicts_with = "weights_file")]
    pub weights: Option<String>,
    /// Search result or single weight-vector JSON.
    #[arg(long)]
    pub weights_file: Option<PathBuf>,
    /// Entry of a search result's ranking to use (0 = best).
    #[arg(long, requires = "weights_file")]
    pub rank: Option<usize>,
    /// Active components, comma separated; all five by default.
    #[arg(long)]
    pub components: Option<String>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, short = 'o')]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalFlags {
    /// Boundary tolerance in pixels (default: 0.8% of the image diagonal).
    #[arg(long)]
    pub tolerance: Option<u32>,
    #[arg(long)]
    pub exclude_last: bool,
}

impl EvalFlags {
    fn options(&self) -> EvalOptions {
        EvalOptions {
            tolerance: self.tolerance,
            exclude_last: self.exclude_last,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Metrics JSON path.
    #[arg(long, short = 'o')]
    pub out: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub flags: EvalFlags,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub gt: PathBuf,
    /// Search result JSON path.
    #[arg(long, short = 'o')]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::search::DEFAULT_SAMPLE_COUNT)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::search::DEFAULT_TOP_K)]
    pub top_k: usize,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Jf)]
    pub objective: ObjectiveArg,
    #[command(flatten)]
    pub flags: EvalFlags,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectiveArg {
    Jf,
    J,
    F,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Jf => Objective::JfMean,
            ObjectiveArg::J => Objective::JMean,
            ObjectiveArg::F => Objective::FMean,
        }
    }
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Result trees laid out as `<dir>/<video_id>/<frame>.pgm`.
    #[arg(long = "inputs", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, short = 'o')]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    Single,
    Crossing,
    Random,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, short = 'o')]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Preset::Random)]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of videos; video `k` uses seed `seed + k`.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => CliError::Run(e),
            // everything else stems from what the caller handed us
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(_) => EXIT_RUNTIME,
        }
    }

    fn to_json(&self) -> String {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage".to_string(), m.clone()),
            CliError::Run(e) => (e.kind().to_string(), e.to_string()),
        };
        serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Run(Error::InvalidInput(format!("thread pool: {e}"))))?;
    pool.install(|| match cli.command {
        Command::Filter(a) => cmd_filter(a),
        Command::Merge(a) => cmd_merge(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Search(a) => cmd_search(a),
        Command::Ensemble(a) => cmd_ensemble(a),
        Command::Synth(a) => cmd_synth(a),
    })
}

/// Expands inputs to a sorted, de-duplicated list of manifest paths.
pub fn resolve_manifests(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_file() {
            out.push(p.clone());
        } else if p.is_dir() {
            let mut found: Vec<PathBuf> = WalkDir::new(p)
                .sort_by_file_name()
                .into_iter()
                .filter_map(|e| e.ok())
                .filter(|e| e.file_type().is_file() && e.file_name() == MANIFEST_FILE)
                .map(|e| e.into_path())
                .collect();
            if found.is_empty() {
                return Err(usage(format!("no {MANIFEST_FILE} under {}", p.display())));
            }
            out.append(&mut found);
        } else {
            return Err(usage(format!("input {} does not exist", p.display())));
        }
    }
    out.dedup();
    Ok(out)
}

fn load_manifests(inputs: &[PathBuf]) -> CliResult<Vec<VideoManifest>> {
    let paths = resolve_manifests(inputs)?;
    let manifests = paths
        .par_iter()
        .map(|p| VideoManifest::load(p).map_err(|e| usage(format!("{}: {e}", p.display()))))
        .collect::<CliResult<Vec<_>>>()?;
    let mut ids: Vec<&str> = manifests.iter().map(|m| m.video_id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(usage(format!("video id `{}` appears twice", w[0])));
    }
    Ok(manifests)
}

fn require_dir(p: &Path, what: &str) -> CliResult<()> {
    if p.is_dir() {
        Ok(())
    } else {
        Err(usage(format!(
            "{what} directory {} does not exist",
            p.display()
        )))
    }
}

fn create_dir(p: &Path) -> CliResult<()> {
    fs::create_dir_all(p).map_err(|e| CliError::Run(Error::io(p, e)))
}

fn write_file(p: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    fs::write(p, contents).map_err(|e| CliError::Run(Error::io(p, e)))
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn unit_interval(v: f64, name: &str) -> CliResult<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(usage(format!("--{name} must lie in [0, 1], got {v}")))
    }
}

fn cmd_filter(a: FilterArgs) -> CliResult<()> {
    unit_interval(a.score_min, "score-min")?;
    unit_interval(a.nms_iou, "nms-iou")?;
    let manifests = load_manifests(&a.input.inputs)?;
    create_dir(&a.out)?;
    manifests.par_iter().try_for_each(|m| {
        let filtered = m.filtered(a.score_min, a.nms_iou);
        filtered
            .save(a.out.join(&m.video_id).join(MANIFEST_FILE))
            .map_err(CliError::from)
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WeightsFile {
    Search(Box<SearchResult>),
    Single(WeightVector),
}

fn resolve_weights(a: &MergeArgs) -> CliResult<WeightVector> {
    if let Some(path) = &a.weights_file {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("weights file {}: {e}", path.display())))?;
        let parsed: WeightsFile = serde_json::from_str(&text)
            .map_err(|e| usage(format!("weights file {}: {e}", path.display())))?;
        return match parsed {
            WeightsFile::Search(r) => {
                let rank = a.rank.unwrap_or(0);
                r.ranked.get(rank).map(|c| c.weights).ok_or_else(|| {
                    usage(format!("rank {rank} beyond {} candidates", r.ranked.len()))
                })
            }
            WeightsFile::Single(w) => {
                if a.rank.unwrap_or(0) != 0 {
                    return Err(usage("--rank needs a search result file"));
                }
                Ok(w)
            }
        };
    }
    let spec = a.weights.as_deref().unwrap_or("equal");
    spec.parse().map_err(|e: Error| usage(e.to_string()))
}

fn write_track_set(out: &Path, ts: &TrackSet) -> CliResult<()> {
    write_sequence(out, &ts.video_id, &ts.label_maps)?;
    write_file(
        &out.join(&ts.video_id).join(SELECTIONS_FILE),
        pretty(&ts.report()),
    )
}

fn cmd_merge(a: MergeArgs) -> CliResult<()> {
    let weights = resolve_weights(&a)?;
    let active: ComponentMask = match &a.components {
        Some(s) => s.parse().map_err(|e: Error| usage(e.to_string()))?,
        None => ComponentMask::ALL,
    };
    let manifests = load_manifests(&a.input.inputs)?;
    create_dir(&a.out)?;
    manifests.par_iter().try_for_each(|m| {
        let ts = PreparedVideo::new(m)?.merge(&weights, active)?;
        write_track_set(&a.out, &ts)
    })
}

/// Full ground truth for `video_id`; object ids are those labelled in any frame.
fn load_ground_truth(root: &Path, video_id: &str) -> CliResult<GroundTruthVideo> {
    let frames = read_sequence(root, video_id)?;
    let mut ids: Vec<u8> = frames.iter().flat_map(|f| f.object_labels()).collect();
    ids.sort_unstable();
    ids.dedup();
    Ok(GroundTruthVideo::new(ids, frames)?)
}

fn cmd_oracle(a: OracleArgs) -> CliResult<()> {
    require_dir(&a.gt, "ground-truth")?;
    let manifests = load_manifests(&a.input.inputs)?;
    create_dir(&a.out)?;
    manifests.par_iter().try_for_each(|m| {
        let gt = load_ground_truth(&a.gt, &m.video_id)?;
        let ts = oracle_merge(m, &gt)?;
        write_track_set(&a.out, &ts)
    })
}

fn video_ids_in(root: &Path) -> CliResult<Vec<String>> {
    let mut ids = Vec::new();
    let entries = fs::read_dir(root).map_err(|e| CliError::Run(Error::io(root, e)))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::Run(Error::io(root, e)))?;
        if entry.path().is_dir() {
            ids.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    ids.sort();
    if ids.is_empty() {
        return Err(usage(format!(
            "no video directories under {}",
            root.display()
        )));
    }
    Ok(ids)
}

fn cmd_eval(a: EvalArgs) -> CliResult<()> {
    require_dir(&a.pred, "prediction")?;
    require_dir(&a.gt, "ground-truth")?;
    let ids = video_ids_in(&a.gt)?;
    let opts = a.flags.options();
    let videos = ids
        .par_iter()
        .map(|id| {
            let gt = load_ground_truth(&a.gt, id)?;
            let pred = read_sequence(&a.pred, id)?;
            Ok(evaluate(id, &pred, &gt, &opts)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let result = aggregate(videos)?;
    write_file(&a.out, pretty(&result))?;
    if let Some(csv) = &a.csv {
        write_file(csv, result.to_csv()?)?;
    }
    Ok(())
}

fn cmd_search(a: SearchArgs) -> CliResult<()> {
    require_dir(&a.gt, "ground-truth")?;
    let cfg = SearchConfig {
        sample_count: a.samples,
        seed: a.seed,
        top_k: a.top_k,
        objective: a.objective.into(),
        eval: a.flags.options(),
        parallel: true,
    };
    cfg.validate()?;
    let manifests = load_manifests(&a.input.inputs)?;
    let videos = manifests
        .into_iter()
        .map(|m| {
            let ground_truth = load_ground_truth(&a.gt, &m.video_id)?;
            Ok(SearchVideo {
                manifest: m,
                ground_truth,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let result = random_search(&videos, &cfg)?;
    write_file(&a.out, pretty(&result))
}

fn cmd_ensemble(a: EnsembleArgs) -> CliResult<()> {
    for d in &a.inputs {
        require_dir(d, "ensemble input")?;
    }
    let ids = video_ids_in(&a.inputs[0])?;
    create_dir(&a.out)?;
    ids.par_iter().try_for_each(|id| {
        let results = a
            .inputs
            .iter()
            .map(|d| read_sequence(d, id))
            .collect::<Result<Vec<_>, _>>()?;
        let voted = majority_vote(&results)?;
        Ok(write_sequence(&a.out, id, &voted)?)
    })
}

fn cmd_synth(a: SynthArgs) -> CliResult<()> {
    if a.count == 0 {
        return Err(usage("--count must be positive"));
    }
    let videos = (0..a.count as u64)
        .into_par_iter()
        .map(|k| {
            let seed = a.seed.wrapping_add(k);
            let fixed = |mut spec: ScenarioSpec| -> CliResult<_> {
                if a.count > 1 {
                    spec.video_id = format!("{}{k:03}", spec.video_id);
                }
                Ok(generate(&spec)?)
            };
            match a.preset {
                Preset::Single => fixed(ScenarioSpec::single_object(seed)),
                Preset::Crossing => fixed(ScenarioSpec::crossing_identical(seed)),
                Preset::Random => Ok(generate_random(seed, RandomLimits::default())),
            }
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(synth::write_corpus(&a.out, &videos)?)
}
