//! Random search over merging weights.
//!
//! Candidates are drawn uniformly from the 4-simplex by normalizing five
//! standard-exponential draws from a seeded SplitMix64 stream. Candidate 0 is
//! always the equal-weights vector, so the best result can never fall below
//! the naive baseline on the search corpus. All candidates are drawn before
//! any is evaluated, which keeps parallel and serial runs identical.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_distr::Exp1;
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::GroundTruthVideo;
use crate::manifest::VideoManifest;
use crate::merging::PreparedVideo;
use crate::metrics::{aggregate, Aggregate, EvalOptions, PreparedGroundTruth};
use crate::scoring::{ComponentMask, WeightVector};

pub const DEFAULT_SAMPLE_COUNT: usize = 25_000;
pub const DEFAULT_TOP_K: usize = 11;

/// The seeded generator behind every random draw in the crate.
pub type SearchRng = SplitMix64;

pub fn rng_from_seed(seed: u64) -> SearchRng {
    SplitMix64::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    JfMean,
    JMean,
    FMean,
}

impl Objective {
    pub fn score(self, agg: &Aggregate) -> f64 {
        match self {
            Objective::JfMean => agg.jf_mean,
            Objective::JMean => agg.j.mean,
            Objective::FMean => agg.f.mean,
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jf" | "jf_mean" | "j&f" => Ok(Objective::JfMean),
            "j" | "j_mean" => Ok(Objective::JMean),
            "f" | "f_mean" => Ok(Objective::FMean),
            other => Err(Error::InvalidInput(format!("unknown objective `{other}`"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::JfMean => "jf_mean",
            Objective::JMean => "j_mean",
            Objective::FMean => "f_mean",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Total candidates evaluated, the equal-weights vector included.
    pub sample_count: usize,
    pub seed: u64,
    pub top_k: usize,
    pub objective: Objective,
    #[serde(skip)]
    pub eval: EvalOptions,
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            sample_count: DEFAULT_SAMPLE_COUNT,
            seed: 0,
            top_k: DEFAULT_TOP_K,
            objective: Objective::JfMean,
            eval: EvalOptions::default(),
            parallel: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidInput("sample_count must be positive".into()));
        }
        if self.top_k == 0 || self.top_k > self.sample_count {
            return Err(Error::InvalidInput(format!(
                "top_k must lie in 1..={}, got {}",
                self.sample_count, self.top_k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Position in sampling order; 0 is the equal-weights vector.
    pub sample: usize,
    pub weights: WeightVector,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub objective: Objective,
    pub seed: u64,
    pub best: Candidate,
    /// The `top_k` highest-scoring weight sets, best first.
    pub top_k: Vec<WeightVector>,
    /// Every candidate, best first; ties keep sampling order.
    pub ranked: Vec<Candidate>,
    /// Every candidate in sampling order.
    pub trace: Vec<Candidate>,
}

/// A video together with its full ground truth.
#[derive(Debug, Clone)]
pub struct SearchVideo {
    pub manifest: VideoManifest,
    pub ground_truth: GroundTruthVideo,
}

/// Uniform draw from the probability simplex.
pub fn sample_simplex<R: Rng + ?Sized>(rng: &mut R) -> WeightVector {
    let e: [f64; 5] = std::array::from_fn(|_| rng.sample(Exp1));
    let sum: f64 = e.iter().sum();
    WeightVector::new(e.map(|x| x / sum)).expect("normalized exponentials lie on the simplex")
}

/// The full candidate list: equal weights first, then `sample_count - 1`
/// simplex draws.
pub fn draw_candidates(sample_count: usize, seed: u64) -> Vec<WeightVector> {
    let mut rng = rng_from_seed(seed);
    std::iter::once(WeightVector::equal())
        .chain((1..sample_count).map(|_| sample_simplex(&mut rng)))
        .collect()
}

/// Scores one weight vector over a prepared corpus.
pub struct Corpus<'a> {
    videos: Vec<(PreparedVideo<'a>, PreparedGroundTruth)>,
}

impl<'a> Corpus<'a> {
    pub fn new(videos: &'a [SearchVideo], eval: &EvalOptions) -> Result<Self> {
        if videos.is_empty() {
            return Err(Error::InvalidInput(
                "search needs at least one video".into(),
            ));
        }
        let videos = videos
            .iter()
            .map(|v| {
                Ok((
                    PreparedVideo::new(&v.manifest)?,
                    PreparedGroundTruth::new(&v.ground_truth, eval)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { videos })
    }

    pub fn aggregate(&self, weights: &WeightVector, active: ComponentMask) -> Result<Aggregate> {
        let evals = self
            .videos
            .iter()
            .map(|(pv, gt)| {
                let ts = pv.merge(weights, active)?;
                gt.evaluate(&ts.video_id, &ts.label_maps)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(aggregate(evals)?.aggregate)
    }
}

pub fn random_search(videos: &[SearchVideo], cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let corpus = Corpus::new(videos, &cfg.eval)?;
    let candidates = draw_candidates(cfg.sample_count, cfg.seed);
    let evaluate = |(sample, w): (usize, &WeightVector)| -> Result<Candidate> {
        let agg = corpus.aggregate(w, ComponentMask::ALL)?;
        Ok(Candidate {
            sample,
            weights: *w,
            score: cfg.objective.score(&agg),
        })
    };
    let trace: Vec<Candidate> = if cfg.parallel {
        candidates
            .par_iter()
            .enumerate()
            .map(evaluate)
            .collect::<Result<_>>()?
    } else {
        candidates
            .iter()
            .enumerate()
            .map(evaluate)
            .collect::<Result<_>>()?
    };
    let mut ranked = trace.clone();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(SearchResult {
        objective: cfg.objective,
        seed: cfg.seed,
        best: ranked[0],
        top_k: ranked.iter().take(cfg.top_k).map(|c| c.weights).collect(),
        ranked,
        trace,
    })
}
