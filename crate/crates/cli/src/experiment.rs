//! Seeded sweeps over (strategy × repeat) cells.

use ordlab_core::{
    beta_min_threshold, run_policy, HybridRule, OrderingPolicy, Run, RunOptions, TaskCollection,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, StrategySpec};
use crate::error::{HarnessError, Result};

/// One logged metrics row of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub strategy: String,
    pub repeat: usize,
    pub seed: u64,
    pub iteration: usize,
    pub avg_loss: f64,
    pub distance_sq: f64,
    pub decrement: f64,
    /// 0-based index of the task learned at this iteration.
    pub chosen_index: usize,
}

/// One (strategy, repeat) cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub strategy: StrategySpec,
    pub repeat: usize,
    pub seed: u64,
    /// Absolute hybrid threshold, for hybrid strategies.
    pub threshold: Option<f64>,
    pub run: Run,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    /// One collection per repeat.
    pub collections: Vec<TaskCollection>,
    /// Ordered by strategy (config order), then repeat.
    pub cells: Vec<Cell>,
    pub warnings: Vec<String>,
}

impl Experiment {
    pub fn records(&self) -> Vec<RunRecord> {
        self.cells
            .iter()
            .flat_map(|cell| {
                let label = cell.strategy.to_string();
                cell.run.rows.iter().map(move |row| RunRecord {
                    strategy: label.clone(),
                    repeat: cell.repeat,
                    seed: cell.seed,
                    iteration: row.iteration,
                    avg_loss: row.avg_loss,
                    distance_sq: row.distance_sq,
                    decrement: row.decrement,
                    chosen_index: row.chosen_index,
                })
            })
            .collect()
    }

    /// Mean final average loss of one strategy over all repeats.
    pub fn mean_final_loss(&self, strategy: StrategySpec) -> Option<f64> {
        let finals: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.strategy == strategy)
            .filter_map(|c| c.run.rows.last().map(|r| r.avg_loss))
            .collect();
        (!finals.is_empty()).then(|| finals.iter().sum::<f64>() / finals.len() as f64)
    }
}

/// Relative hybrid threshold for `strategy`, plus a warning when the
/// derived value's validity condition does not hold.
pub fn relative_threshold(
    config: &ExperimentConfig,
    strategy: StrategySpec,
) -> Result<Option<(f64, Option<String>)>> {
    let Some((_, explicit)) = strategy.hybrid_rule() else {
        return Ok(None);
    };
    if let Some(b) = explicit {
        return Ok(Some((b, None)));
    }
    let c = config
        .hybrid_c
        .ok_or_else(|| HarnessError::usage("hybrid_c is required for a derived threshold"))?;
    let beta = beta_min_threshold(config.generator.tasks(), c, config.hybrid_alpha)?;
    let warning = (!beta.precondition_holds()).then(|| {
        format!(
            "{strategy}: C/T^alpha = {:.4} exceeds 1/(2-alpha) = {:.4}; using beta = {:e} anyway",
            beta.ratio, beta.limit, beta.value
        )
    });
    Ok(Some((beta.value, warning)))
}

/// Scales a relative threshold to the collection: by `‖w₀ − w*‖²` for MD
/// scores and by `R² ‖w₀ − w*‖²` for MR scores.
pub fn absolute_threshold(rule: HybridRule, relative: f64, c: &TaskCollection) -> f64 {
    let d2 = c.norm_ref().powi(2);
    match rule {
        HybridRule::MaxDistance => relative * d2,
        HybridRule::MaxResidual => relative * c.radius().powi(2) * d2,
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    let mut warnings = Vec::new();
    let mut relative = Vec::with_capacity(config.strategies.len());
    for &s in &config.strategies {
        let r = relative_threshold(config, s)?;
        if let Some((_, Some(w))) = &r {
            warnings.push(w.clone());
        }
        relative.push(r.map(|(b, _)| b));
    }

    let collections = (0..config.repeats)
        .into_par_iter()
        .map(|repeat| {
            let c = config.collection(repeat)?;
            if !c.is_realizable() {
                let joint = c.joint();
                return Err(HarnessError::NotRealizable {
                    repeat,
                    seed: config.repeat_seed(repeat),
                    residual: joint.residual,
                    tolerance: joint.tolerance,
                });
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;

    let opts = RunOptions {
        steps: config.iterations,
        log_every: config.log_every,
    };
    let jobs: Vec<(usize, usize)> = (0..config.strategies.len())
        .flat_map(|s| (0..config.repeats).map(move |r| (s, r)))
        .collect();
    let cells = jobs
        .into_par_iter()
        .map(|(s, repeat)| {
            let strategy = config.strategies[s];
            let c = &collections[repeat];
            let seed = config.repeat_seed(repeat);
            let threshold = strategy
                .hybrid_rule()
                .zip(relative[s])
                .map(|((rule, _), b)| absolute_threshold(rule, b, c));
            let policy: OrderingPolicy = strategy.policy(seed, threshold);
            let run = run_policy(c, policy, opts)?;
            Ok(Cell {
                strategy,
                repeat,
                seed,
                threshold,
                run,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Experiment {
        config: config.clone(),
        collections,
        cells,
        warnings,
    })
}
