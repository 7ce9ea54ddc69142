//! Experiment configuration: a flat `key = value` file, named presets, and
//! command-line overrides, merged in that order of increasing priority.
//!
//! Recognized keys:
//!
//! | key            | meaning                                                   |
//! |----------------|-----------------------------------------------------------|
//! | `generator`    | `isotropic`, `anisotropic`, `rank_dminus1`, `adversarial3d`, `adversarial_highdim` |
//! | `d`, `r`, `T`  | dimension, task rank, number of tasks                     |
//! | `K`            | group size of `adversarial3d`                             |
//! | `strategies`   | comma-separated strategy names                            |
//! | `iterations`   | steps per run, defaults to `T`                            |
//! | `repeats`      | number of fresh collections                               |
//! | `seed`         | base seed; repeat `i` uses `seed + i`                     |
//! | `out`          | CSV output path                                           |
//! | `log_every`    | metrics cadence in steps                                  |
//! | `hybrid_alpha` | exponent `α` of the random-ordering rate `C / T^α`        |
//! | `hybrid_c`     | constant `C`; defaults to `2 (d − r)`                     |
//! | `rel_tol`      | relative SVD truncation threshold                         |
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ordlab_core::generators::{
    gen_adversarial_3d, gen_adversarial_highdim, gen_anisotropic, gen_isotropic, gen_rank_dminus1,
};
use ordlab_core::linalg::DEFAULT_REL_TOL;
use ordlab_core::{CollectionOptions, GreedyRule, HybridRule, OrderingPolicy, TaskCollection};

use crate::error::{HarnessError, Result};

/// Base seed used by every preset.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategySpec {
    RandomWithout,
    RandomWith,
    Md,
    Mr,
    MinDistance,
    MdRep,
    MrRep,
    /// Relative threshold `β̃`; `None` derives it from the random-ordering rate.
    HybridMd(Option<f64>),
    HybridMr(Option<f64>),
}

impl StrategySpec {
    pub fn single_pass(&self) -> bool {
        !matches!(
            self,
            StrategySpec::RandomWith | StrategySpec::MdRep | StrategySpec::MrRep
        )
    }

    pub fn hybrid_rule(&self) -> Option<(HybridRule, Option<f64>)> {
        match *self {
            StrategySpec::HybridMd(b) => Some((HybridRule::MaxDistance, b)),
            StrategySpec::HybridMr(b) => Some((HybridRule::MaxResidual, b)),
            _ => None,
        }
    }

    /// Policy for one run. `threshold` is the absolute hybrid threshold.
    pub fn policy(&self, seed: u64, threshold: Option<f64>) -> OrderingPolicy {
        match *self {
            StrategySpec::RandomWithout => OrderingPolicy::random_without(seed),
            StrategySpec::RandomWith => OrderingPolicy::random_with(seed),
            StrategySpec::Md => OrderingPolicy::greedy(GreedyRule::MaxDistance),
            StrategySpec::Mr => OrderingPolicy::greedy(GreedyRule::MaxResidual),
            StrategySpec::MinDistance => OrderingPolicy::greedy(GreedyRule::MinDistance),
            StrategySpec::MdRep => OrderingPolicy::greedy_with_repetition(GreedyRule::MaxDistance),
            StrategySpec::MrRep => OrderingPolicy::greedy_with_repetition(GreedyRule::MaxResidual),
            StrategySpec::HybridMd(_) | StrategySpec::HybridMr(_) => {
                let (rule, _) = self.hybrid_rule().expect("hybrid");
                OrderingPolicy::Hybrid {
                    rule,
                    threshold: threshold.unwrap_or(0.0),
                    seed,
                }
            }
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StrategySpec::RandomWithout => "random-without",
            StrategySpec::RandomWith => "random-with",
            StrategySpec::Md => "md",
            StrategySpec::Mr => "mr",
            StrategySpec::MinDistance => "min-distance",
            StrategySpec::MdRep => "md-rep",
            StrategySpec::MrRep => "mr-rep",
            StrategySpec::HybridMd(None) => "hybrid-md",
            StrategySpec::HybridMr(None) => "hybrid-mr",
            StrategySpec::HybridMd(Some(b)) => return write!(f, "hybrid-md={b}"),
            StrategySpec::HybridMr(Some(b)) => return write!(f, "hybrid-mr={b}"),
        };
        f.write_str(s)
    }
}

impl FromStr for StrategySpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, beta) = match s.split_once('=') {
            Some((n, b)) => {
                let b: f64 = b.trim().parse().map_err(|_| {
                    HarnessError::usage(format!("bad hybrid threshold in strategy '{s}'"))
                })?;
                if !(b >= 0.0) || !b.is_finite() {
                    return Err(HarnessError::usage(format!(
                        "hybrid threshold must be finite and non-negative in '{s}'"
                    )));
                }
                (n.trim(), Some(b))
            }
            None => (s, None),
        };
        let spec = match (name, beta) {
            ("random-without", None) => StrategySpec::RandomWithout,
            ("random-with", None) => StrategySpec::RandomWith,
            ("md", None) => StrategySpec::Md,
            ("mr", None) => StrategySpec::Mr,
            ("min-distance", None) => StrategySpec::MinDistance,
            ("md-rep", None) => StrategySpec::MdRep,
            ("mr-rep", None) => StrategySpec::MrRep,
            ("hybrid-md", b) => StrategySpec::HybridMd(b),
            ("hybrid-mr", b) => StrategySpec::HybridMr(b),
            _ => {
                return Err(HarnessError::usage(format!(
                    "unknown strategy '{s}' (expected one of random-without, random-with, md, mr, \
                     min-distance, md-rep, mr-rep, hybrid-md[=beta], hybrid-mr[=beta])"
                )))
            }
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorSpec {
    Isotropic { d: usize, r: usize, tasks: usize },
    Anisotropic { d: usize, r: usize, tasks: usize },
    RankDMinus1 { d: usize, tasks: usize },
    Adversarial3d { k: usize },
    AdversarialHighDim { d: usize },
}

impl GeneratorSpec {
    pub fn tasks(&self) -> usize {
        match *self {
            GeneratorSpec::Isotropic { tasks, .. }
            | GeneratorSpec::Anisotropic { tasks, .. }
            | GeneratorSpec::RankDMinus1 { tasks, .. } => tasks,
            GeneratorSpec::Adversarial3d { k } => 4 * k - 1,
            GeneratorSpec::AdversarialHighDim { d } => d - 1,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            GeneratorSpec::Isotropic { d, .. }
            | GeneratorSpec::Anisotropic { d, .. }
            | GeneratorSpec::RankDMinus1 { d, .. }
            | GeneratorSpec::AdversarialHighDim { d } => d,
            GeneratorSpec::Adversarial3d { .. } => 3,
        }
    }

    /// Rank of every task, when it is the same for all of them.
    pub fn task_rank(&self) -> Option<usize> {
        match *self {
            GeneratorSpec::Isotropic { r, .. } | GeneratorSpec::Anisotropic { r, .. } => Some(r),
            GeneratorSpec::RankDMinus1 { d, .. } => Some(d - 1),
            _ => None,
        }
    }

    /// Adversarial families do not depend on the seed.
    pub fn is_deterministic(&self) -> bool {
        matches!(
            self,
            GeneratorSpec::Adversarial3d { .. } | GeneratorSpec::AdversarialHighDim { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::Isotropic { .. } => "isotropic",
            GeneratorSpec::Anisotropic { .. } => "anisotropic",
            GeneratorSpec::RankDMinus1 { .. } => "rank_dminus1",
            GeneratorSpec::Adversarial3d { .. } => "adversarial3d",
            GeneratorSpec::AdversarialHighDim { .. } => "adversarial_highdim",
        }
    }

    pub fn generate(&self, seed: u64) -> ordlab_core::Result<TaskCollection> {
        Ok(match *self {
            GeneratorSpec::Isotropic { d, r, tasks } => {
                gen_isotropic(d, r, tasks, seed)?.collection
            }
            GeneratorSpec::Anisotropic { d, r, tasks } => {
                gen_anisotropic(d, r, tasks, seed)?.collection
            }
            GeneratorSpec::RankDMinus1 { d, tasks } => gen_rank_dminus1(d, tasks, seed)?.collection,
            GeneratorSpec::Adversarial3d { k } => gen_adversarial_3d(k)?.collection,
            GeneratorSpec::AdversarialHighDim { d } => gen_adversarial_highdim(d)?.collection,
        })
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::usage(m));
        match *self {
            GeneratorSpec::Isotropic { d, r, tasks }
            | GeneratorSpec::Anisotropic { d, r, tasks } => {
                if d == 0 || r == 0 || r > d {
                    return bad(format!("need 1 <= r <= d, got r = {r}, d = {d}"));
                }
                if tasks == 0 {
                    return bad("T must be at least 1".into());
                }
            }
            GeneratorSpec::RankDMinus1 { d, tasks } => {
                if d < 2 || tasks == 0 {
                    return bad(format!(
                        "rank_dminus1 needs d >= 2 and T >= 1, got d = {d}, T = {tasks}"
                    ));
                }
            }
            GeneratorSpec::Adversarial3d { k } => {
                if k < 2 {
                    return bad(format!("adversarial3d needs K >= 2, got {k}"));
                }
            }
            GeneratorSpec::AdversarialHighDim { d } => {
                if d < 30 {
                    return bad(format!("adversarial_highdim needs d >= 30, got {d}"));
                }
            }
        }
        Ok(())
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub generator: GeneratorSpec,
    pub strategies: Vec<StrategySpec>,
    pub iterations: usize,
    pub repeats: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub log_every: usize,
    pub hybrid_alpha: f64,
    pub hybrid_c: Option<f64>,
    pub rel_tol: f64,
}

impl ExperimentConfig {
    /// Collection for repeat `i`, seeded with `seed + i`.
    pub fn collection(&self, repeat: usize) -> ordlab_core::Result<TaskCollection> {
        let c = self.generator.generate(self.repeat_seed(repeat))?;
        if self.rel_tol == DEFAULT_REL_TOL {
            return Ok(c);
        }
        let options = CollectionOptions {
            rel_tol: self.rel_tol,
            ..CollectionOptions::default()
        };
        TaskCollection::with_options(c.tasks().to_vec(), Some(c.start().clone()), options)
    }

    pub fn repeat_seed(&self, repeat: usize) -> u64 {
        self.seed.wrapping_add(repeat as u64)
    }
}

/// Unvalidated settings; every field is optional until [`Settings::build`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub name: Option<String>,
    pub generator: Option<String>,
    pub d: Option<usize>,
    pub r: Option<usize>,
    pub tasks: Option<usize>,
    pub k: Option<usize>,
    pub strategies: Option<Vec<StrategySpec>>,
    pub iterations: Option<usize>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub log_every: Option<usize>,
    pub hybrid_alpha: Option<f64>,
    pub hybrid_c: Option<f64>,
    pub rel_tol: Option<f64>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::usage(format!("invalid value '{value}' for key '{key}'")))
}

pub fn parse_strategies(list: &str) -> Result<Vec<StrategySpec>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

impl Settings {
    /// Applies one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "generator" => self.generator = Some(value.trim().to_string()),
            "d" => self.d = Some(parse(key, value)?),
            "r" => self.r = Some(parse(key, value)?),
            "T" => self.tasks = Some(parse(key, value)?),
            "K" => self.k = Some(parse(key, value)?),
            "strategies" | "strategy" => self.strategies = Some(parse_strategies(value)?),
            "iterations" => self.iterations = Some(parse(key, value)?),
            "repeats" => self.repeats = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "out" => self.output = Some(PathBuf::from(value.trim())),
            "log_every" => self.log_every = Some(parse(key, value)?),
            "hybrid_alpha" => self.hybrid_alpha = Some(parse(key, value)?),
            "hybrid_c" => self.hybrid_c = Some(parse(key, value)?),
            "rel_tol" => self.rel_tol = Some(parse(key, value)?),
            "name" => self.name = Some(value.trim().to_string()),
            _ => return Err(HarnessError::usage(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                HarnessError::usage(format!("line {}: expected key = value", n + 1))
            })?;
            s.set(k, v)?;
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse_str(&text)
    }

    /// `other`'s fields take priority.
    pub fn merge(self, other: Settings) -> Settings {
        Settings {
            name: other.name.or(self.name),
            generator: other.generator.or(self.generator),
            d: other.d.or(self.d),
            r: other.r.or(self.r),
            tasks: other.tasks.or(self.tasks),
            k: other.k.or(self.k),
            strategies: other.strategies.or(self.strategies),
            iterations: other.iterations.or(self.iterations),
            repeats: other.repeats.or(self.repeats),
            seed: other.seed.or(self.seed),
            output: other.output.or(self.output),
            log_every: other.log_every.or(self.log_every),
            hybrid_alpha: other.hybrid_alpha.or(self.hybrid_alpha),
            hybrid_c: other.hybrid_c.or(self.hybrid_c),
            rel_tol: other.rel_tol.or(self.rel_tol),
        }
    }

    fn generator_spec(&self) -> Result<GeneratorSpec> {
        let need = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| HarnessError::usage(format!("missing '{key}' for this generator")))
        };
        let name = self.generator.as_deref().ok_or_else(|| {
            HarnessError::usage("no generator given (use --preset or --generator)")
        })?;
        let spec = match name {
            "isotropic" => GeneratorSpec::Isotropic {
                d: need(self.d, "d")?,
                r: need(self.r, "r")?,
                tasks: need(self.tasks, "T")?,
            },
            "anisotropic" => GeneratorSpec::Anisotropic {
                d: need(self.d, "d")?,
                r: need(self.r, "r")?,
                tasks: need(self.tasks, "T")?,
            },
            "rank_dminus1" => GeneratorSpec::RankDMinus1 {
                d: need(self.d, "d")?,
                tasks: need(self.tasks, "T")?,
            },
            "adversarial3d" => GeneratorSpec::Adversarial3d {
                k: need(self.k, "K")?,
            },
            "adversarial_highdim" => GeneratorSpec::AdversarialHighDim {
                d: need(self.d, "d")?,
            },
            other => return Err(HarnessError::usage(format!("unknown generator '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn build(&self) -> Result<ExperimentConfig> {
        let generator = self.generator_spec()?;
        let strategies = self.strategies.clone().unwrap_or_default();
        if strategies.is_empty() {
            return Err(HarnessError::usage("at least one strategy is required"));
        }
        let tasks = generator.tasks();
        let iterations = self.iterations.unwrap_or(tasks);
        if iterations == 0 {
            return Err(HarnessError::usage("iterations must be at least 1"));
        }
        if let Some(s) = strategies.iter().find(|s| s.single_pass()) {
            if iterations > tasks {
                return Err(HarnessError::usage(format!(
                    "iterations = {iterations} exceeds T = {tasks}, but '{s}' is single-pass"
                )));
            }
        }
        let repeats = self.repeats.unwrap_or(1);
        if repeats == 0 {
            return Err(HarnessError::usage("repeats must be at least 1"));
        }
        if generator.is_deterministic() && repeats > 1 {
            return Err(HarnessError::usage(format!(
                "{} is deterministic; repeats must be 1",
                generator.name()
            )));
        }
        let log_every = self.log_every.unwrap_or(1);
        if log_every == 0 {
            return Err(HarnessError::usage("log_every must be at least 1"));
        }
        let hybrid_alpha = self.hybrid_alpha.unwrap_or(1.0);
        if !(hybrid_alpha > 0.0 && hybrid_alpha <= 1.0) {
            return Err(HarnessError::usage(format!(
                "hybrid_alpha must lie in (0, 1], got {hybrid_alpha}"
            )));
        }
        let hybrid_c = self.hybrid_c.or_else(|| {
            generator
                .task_rank()
                .map(|r| 2.0 * (generator.dim() - r) as f64)
        });
        let needs_c = strategies
            .iter()
            .any(|s| matches!(s.hybrid_rule(), Some((_, None))));
        if needs_c && !hybrid_c.is_some_and(|c| c > 0.0 && c.is_finite()) {
            return Err(HarnessError::usage(
                "hybrid strategies without an explicit threshold need a positive hybrid_c",
            ));
        }
        let rel_tol = self.rel_tol.unwrap_or(DEFAULT_REL_TOL);
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(HarnessError::usage(format!(
                "rel_tol must lie in (0, 1), got {rel_tol}"
            )));
        }
        Ok(ExperimentConfig {
            name: self.name.clone().unwrap_or_else(|| "experiment".into()),
            generator,
            strategies,
            iterations,
            repeats,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            output: self.output.clone(),
            log_every,
            hybrid_alpha,
            hybrid_c,
            rel_tol,
        })
    }
}
