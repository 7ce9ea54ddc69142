//! Runs a policy over a collection, logging metrics along the way.

use crate::error::{Error, Result};
use crate::learner::LearnerState;
use crate::metrics::{metrics_row, MetricsRow};
use crate::orderings::{HybridState, OrderingPolicy, Phase, Selector};
use crate::task::TaskCollection;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Maximum number of steps `k`. Single-pass policies stop early once
    /// every task has been learned.
    pub steps: usize,
    /// Log a metrics row every `log_every` steps; the last step is always logged.
    pub log_every: usize,
}

impl RunOptions {
    pub fn steps(steps: usize) -> Self {
        RunOptions {
            steps,
            log_every: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Run {
    pub policy: OrderingPolicy,
    pub state: LearnerState,
    pub rows: Vec<MetricsRow>,
    pub hybrid: Option<HybridState>,
}

pub fn run_policy(c: &TaskCollection, policy: OrderingPolicy, opts: RunOptions) -> Result<Run> {
    if opts.log_every == 0 {
        return Err(Error::InvalidInput("log cadence must be at least 1".into()));
    }
    let mut selector = Selector::new(policy)?;
    let mut state = LearnerState::for_collection(c);
    let mut rows = Vec::new();
    for t in 1..=opts.steps {
        let Some(sel) = selector.next_index(c, &state)? else {
            break;
        };
        state.advance(c, sel.index, sel.phase, sel.best_score)?;
        if t % opts.log_every == 0 || t == opts.steps {
            rows.push(metrics_row(c, &state)?);
        }
    }
    if state.step() > 0 && rows.last().map(|r| r.iteration) != Some(state.step()) {
        rows.push(metrics_row(c, &state)?);
    }
    Ok(Run {
        policy,
        state,
        rows,
        hybrid: selector.hybrid_state(),
    })
}

/// Learns the tasks in the given fixed order.
pub fn replay(c: &TaskCollection, order: &[usize]) -> Result<LearnerState> {
    let mut state = LearnerState::for_collection(c);
    for &m in order {
        state.advance(c, m, Phase::Greedy, None)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orderings::GreedyRule;
    use crate::task::Task;
    use nalgebra::{dmatrix, dvector};

    fn three() -> TaskCollection {
        let tasks = vec![
            Task::new(dmatrix![1.0, 0.0, 0.0], dvector![1.0]).unwrap(),
            Task::new(dmatrix![1.0, 1.0, 0.0], dvector![2.0]).unwrap(),
            Task::new(dmatrix![0.0, 1.0, 1.0], dvector![2.0]).unwrap(),
        ];
        TaskCollection::new(tasks).unwrap()
    }

    #[test]
    fn single_pass_stops_at_t() {
        let c = three();
        let run = run_policy(
            &c,
            OrderingPolicy::greedy(GreedyRule::MaxDistance),
            RunOptions::steps(10),
        )
        .unwrap();
        assert_eq!(run.state.step(), 3);
        assert_eq!(run.rows.len(), 3);
        let mut order = run.state.order();
        order.sort_unstable();
        assert_eq!(order, vec![0, 1, 2]);
    }

    #[test]
    fn cadence_keeps_last_row() {
        let c = three();
        let opts = RunOptions {
            steps: 7,
            log_every: 3,
        };
        let run = run_policy(&c, OrderingPolicy::random_with(1), opts).unwrap();
        let its: Vec<_> = run.rows.iter().map(|r| r.iteration).collect();
        assert_eq!(its, vec![3, 6, 7]);
        let opts = RunOptions {
            steps: 3,
            log_every: 0,
        };
        assert!(run_policy(&c, OrderingPolicy::random_with(1), opts).is_err());
    }

    #[test]
    fn replay_matches_run() {
        let c = three();
        let run = run_policy(&c, OrderingPolicy::random_without(11), RunOptions::steps(3)).unwrap();
        let again = replay(&c, &run.state.order()).unwrap();
        assert_eq!(again.iterate(), run.state.iterate());
    }
}
