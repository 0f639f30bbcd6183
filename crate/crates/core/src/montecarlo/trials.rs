//! Repeated independent trials of a stream spec through the sketch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::metric::Metric;
use super::stats::TrialStats;
use super::stream::{generate_with, Multiplicity, StreamSpec};
use crate::error::SimulationError;
use crate::estimators::GreenExtractor;
use crate::hashing::BitModel;
use crate::par::{map_chunks, Execution};
use crate::sketch::AdaptiveSampler;

/// Sampler parameters shared by every trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    pub b: u32,
    pub q: f64,
    /// Engages the black-green extractor with this multiplicity.
    pub green_mult: Option<u64>,
}

impl SketchConfig {
    pub fn new(b: u32, q: f64) -> Self {
        Self { b, q, green_mult: None }
    }

    pub fn with_green(mut self, mu_g: u64) -> Self {
        self.green_mult = Some(mu_g);
        self
    }
}

/// How a trial is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    /// Generate the stream, hash every occurrence, run the sampler.
    #[default]
    Full,
    /// Skip hashing: the number of keys of level at least `d` is thinned
    /// level by level, `N_{d+1} ~ Bin(N_d, q)` per color, until it fits in
    /// the cache; resident multiplicities are drawn from the class law.
    /// Same law of `(R, D, U_C, ν)` as the full pipeline, independent of
    /// stream order.
    LevelOnly,
}

impl Pipeline {
    fn name(self) -> &'static str {
        match self {
            Pipeline::Full => "full",
            Pipeline::LevelOnly => "level-only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub trials: u64,
    pub master_seed: u64,
    pub pipeline: Pipeline,
    pub execution: Execution,
}

impl TrialConfig {
    pub fn new(trials: u64, master_seed: u64) -> Self {
        Self {
            trials,
            master_seed,
            pipeline: Pipeline::Full,
            execution: Execution::default(),
        }
    }

    pub fn with_pipeline(mut self, pipeline: Pipeline) -> Self {
        self.pipeline = pipeline;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index`: element `index` of the splitmix64 sequence
/// started at `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Hashing seed used by a full-pipeline trial with the given trial seed.
pub fn hash_seed(trial_seed: u64) -> u64 {
    splitmix64(trial_seed ^ 0xA076_1D64_78BD_642F)
}

/// Final state of one full-pipeline trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub sampler: AdaptiveSampler,
    pub green: Option<GreenExtractor>,
    /// Plain sampler fed the same stream, present when green is.
    pub plain: Option<AdaptiveSampler>,
}

/// Runs the full pipeline once with the given trial seed.
pub fn run_single(
    spec: &StreamSpec,
    sketch: &SketchConfig,
    seed: u64,
) -> Result<TrialOutcome, SimulationError> {
    spec.validate()?;
    let model = BitModel::new(sketch.q, hash_seed(seed))?;
    full_trial(spec, sketch, model, seed, true)
}

fn full_trial(
    spec: &StreamSpec,
    sketch: &SketchConfig,
    model: BitModel,
    seed: u64,
    with_plain: bool,
) -> Result<TrialOutcome, SimulationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stream = generate_with(spec, &mut rng);
    let mut sampler = AdaptiveSampler::new(sketch.b, model)?;
    let mut green = sketch.green_mult.map(GreenExtractor::new).transpose()?;
    let mut plain = match (&green, with_plain) {
        (Some(_), true) => Some(AdaptiveSampler::new(sketch.b, model)?),
        _ => None,
    };
    for item in &stream {
        let d = crate::hashing::digest(&item.key_bytes(), model.seed())?;
        match green.as_mut() {
            Some(g) => g.insert_digest(&mut sampler, d, Some(item.color)),
            None => sampler.insert_digest(d, Some(item.color)),
        }
        if let Some(p) = plain.as_mut() {
            p.insert_digest(d, Some(item.color));
        }
    }
    Ok(TrialOutcome { sampler, green, plain })
}

/// What the metrics are computed from.
struct Observation {
    r: u64,
    d: u32,
    /// Per spec class: resident counts.
    counts: Vec<Vec<u64>>,
    green: Option<GreenObservation>,
}

struct GreenObservation {
    d_star: u32,
    d_plain: Option<u32>,
    h_total: u64,
    n_g_hat: f64,
    n_b_hat: f64,
}

struct Context {
    n: f64,
    growth: f64,
    log_growth: f64,
    tags: Vec<u32>,
    sizes: Vec<u64>,
    n_green: f64,
}

impl Context {
    fn class(&self, tag: u32) -> Option<usize> {
        self.tags.iter().position(|&t| t == tag)
    }
}

fn evaluate(m: Metric, obs: &Observation, ctx: &Context) -> f64 {
    let r = obs.r as f64;
    let scale = ctx.growth.powi(obs.d as i32);
    let on = |cond: bool, v: f64| if cond { v } else { f64::NAN };
    let class = |t: u32| ctx.class(t).map(|i| (&obs.counts[i], ctx.sizes[i]));
    let green = obs.green.as_ref();
    match m {
        Metric::R => r,
        Metric::D => obs.d as f64,
        Metric::Z => r * scale / ctx.n,
        Metric::W => on(obs.r > 0, (r * scale / ctx.n).ln() / ctx.log_growth),
        Metric::InvR => on(obs.r > 0, 1.0 / r),
        Metric::U(t) => class(t).map_or(f64::NAN, |(c, _)| c.len() as f64),
        Metric::PHat(t) => class(t).map_or(f64::NAN, |(c, _)| on(obs.r > 0, c.len() as f64 / r)),
        Metric::InvU(t) => class(t).map_or(f64::NAN, |(c, _)| on(!c.is_empty(), 1.0 / c.len() as f64)),
        Metric::NcRatio(t) => class(t).map_or(f64::NAN, |(c, size)| scale * c.len() as f64 / size as f64),
        Metric::MuHat(t) => class(t).map_or(f64::NAN, |(c, _)| {
            on(!c.is_empty(), c.iter().sum::<u64>() as f64 / c.len() as f64)
        }),
        Metric::Sigma2Hat(t) => class(t).map_or(f64::NAN, |(c, _)| {
            if c.len() < 2 {
                return f64::NAN;
            }
            let u = c.len() as f64;
            let mu = c.iter().sum::<u64>() as f64 / u;
            c.iter().map(|&x| (x as f64 - mu).powi(2)).sum::<f64>() / u
        }),
        Metric::DStar => green.map_or(f64::NAN, |g| g.d_star as f64),
        Metric::DPlain => green.and_then(|g| g.d_plain).map_or(f64::NAN, |d| d as f64),
        Metric::DepthGap => green
            .and_then(|g| g.d_plain.map(|d| d as f64 - g.d_star as f64))
            .unwrap_or(f64::NAN),
        Metric::HTotal => green.map_or(f64::NAN, |g| g.h_total as f64),
        Metric::NgRatio => green.map_or(f64::NAN, |g| g.n_g_hat / ctx.n_green),
        Metric::NbRatio => green.map_or(f64::NAN, |g| g.n_b_hat / (ctx.n - ctx.n_green)),
        Metric::NHatRatio => green.map_or(f64::NAN, |g| (g.n_g_hat + g.n_b_hat) / ctx.n),
    }
}

fn observe_full(outcome: &TrialOutcome, spec: &StreamSpec) -> Observation {
    let s = &outcome.sampler;
    let mut counts = vec![Vec::new(); spec.colors.len()];
    for e in s.entries() {
        if let Some(i) = e.color.and_then(|c| spec.colors.iter().position(|k| k.tag == c.0)) {
            counts[i].push(e.count);
        }
    }
    let green = outcome.green.as_ref().map(|g| {
        let rep = g.report(s);
        GreenObservation {
            d_star: rep.d_star,
            d_plain: outcome.plain.as_ref().map(|p| p.depth()),
            h_total: rep.h.iter().sum(),
            n_g_hat: rep.n_g_hat,
            n_b_hat: rep.n_b_hat,
        }
    });
    Observation {
        r: s.len() as u64,
        d: s.depth(),
        counts,
        green,
    }
}

fn observe_level_only<R: Rng>(
    spec: &StreamSpec,
    sizes: &[u64],
    sketch: &SketchConfig,
    rng: &mut R,
) -> Observation {
    let mut alive: Vec<u64> = sizes.to_vec();
    let mut d = 0u32;
    while alive.iter().sum::<u64>() > sketch.b as u64 {
        d += 1;
        for a in alive.iter_mut() {
            if *a > 0 {
                *a = Binomial::new(*a, sketch.q).expect("valid binomial").sample(rng);
            }
        }
    }
    let counts = spec
        .colors
        .iter()
        .zip(&alive)
        .map(|(class, &u)| match class.multiplicity {
            Multiplicity::Constant(m) => vec![m; u as usize],
            law => (0..u).map(|_| law.sample(rng)).collect(),
        })
        .collect();
    Observation {
        r: alive.iter().sum(),
        d,
        counts,
        green: None,
    }
}

/// Runs `cfg.trials` independent trials and collects `metrics`.
///
/// Trial `i` uses seed [`trial_seed`]`(master, i)` both for the stream and,
/// through [`hash_seed`], for the hash; results do not depend on the
/// execution mode.
pub fn run_trials(
    spec: &StreamSpec,
    sketch: &SketchConfig,
    cfg: &TrialConfig,
    metrics: &[Metric],
) -> Result<TrialStats, SimulationError> {
    if cfg.trials == 0 {
        return Err(SimulationError::NoTrials);
    }
    spec.validate()?;
    BitModel::new(sketch.q, 0)?;
    AdaptiveSampler::new(sketch.b, BitModel::symmetric(0))?;
    if let Some(mu) = sketch.green_mult {
        GreenExtractor::new(mu)?;
    }
    for m in metrics {
        if let Some(t) = m.color() {
            if spec.class_size(t).is_none() {
                return Err(SimulationError::InvalidSpec(format!("metric {m}: no color {t}")));
            }
        }
        if m.needs_green() && (sketch.green_mult.is_none() || cfg.pipeline == Pipeline::LevelOnly) {
            return Err(SimulationError::UnsupportedMetric(m.to_string(), cfg.pipeline.name()));
        }
    }
    if cfg.pipeline == Pipeline::LevelOnly && sketch.green_mult.is_some() {
        return Err(SimulationError::UnsupportedMetric(
            "green extraction".into(),
            cfg.pipeline.name(),
        ));
    }

    let sizes = spec.class_sizes();
    let n_green = sketch.green_mult.map_or(0.0, |mu| {
        spec.colors
            .iter()
            .zip(&sizes)
            .filter(|(c, _)| c.multiplicity == Multiplicity::Constant(mu))
            .map(|(_, &s)| s as f64)
            .sum()
    });
    let ctx = Context {
        n: spec.n as f64,
        growth: 1.0 / sketch.q,
        log_growth: -sketch.q.ln(),
        tags: spec.colors.iter().map(|c| c.tag).collect(),
        sizes: sizes.clone(),
        n_green,
    };
    let with_plain = metrics.iter().any(|m| matches!(m, Metric::DPlain | Metric::DepthGap));

    let run_chunk = |range: std::ops::Range<u64>| -> Result<TrialStats, SimulationError> {
        let mut stats = TrialStats::new(metrics);
        let mut values = vec![0.0; metrics.len()];
        for i in range {
            let seed = trial_seed(cfg.master_seed, i);
            let obs = match cfg.pipeline {
                Pipeline::Full => {
                    let model = BitModel::new(sketch.q, hash_seed(seed))?;
                    let outcome = full_trial(spec, sketch, model, seed, with_plain)?;
                    observe_full(&outcome, spec)
                }
                Pipeline::LevelOnly => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    observe_level_only(spec, &sizes, sketch, &mut rng)
                }
            };
            for (v, m) in values.iter_mut().zip(metrics) {
                *v = evaluate(*m, &obs, &ctx);
            }
            stats.record(obs.r, obs.d, &values);
        }
        Ok(stats)
    };

    let mut out = TrialStats::new(metrics);
    for part in map_chunks(cfg.trials, cfg.execution, run_chunk) {
        out.merge(part?);
    }
    Ok(out)
}
