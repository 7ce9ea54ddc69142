//! Task-selection policies.
//!
//! Greedy rules score every candidate from the current iterate and take the
//! best one; ties always go to the smallest index. Random rules draw from a
//! ChaCha8 stream seeded by the policy seed, one draw per step, so a policy
//! and seed fully determine the ordering on a given collection.

use std::fmt;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::learner::LearnerState;
use crate::task::{residual_norm_sq, ProjectorCache, Task, TaskCollection};

/// Maximum-distance score `‖X⁺(X w − y)‖²`, the squared length of the step a
/// fit of `task` would take from `w`.
pub fn md_score(task: &Task, cache: &ProjectorCache, w: &DVector<f64>) -> Result<f64> {
    let r = task.residual(w)?;
    Ok(cache.apply_pinv(task, &r)?.norm_squared())
}

/// Maximum-residual score `‖X w − y‖²`.
pub fn mr_score(task: &Task, w: &DVector<f64>) -> Result<f64> {
    residual_norm_sq(task, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GreedyRule {
    /// argmax of [`md_score`].
    MaxDistance,
    /// argmax of [`mr_score`].
    MaxResidual,
    /// argmin of [`md_score`].
    MinDistance,
}

impl GreedyRule {
    fn score(self, collection: &TaskCollection, m: usize, w: &DVector<f64>) -> Result<f64> {
        match self {
            GreedyRule::MaxDistance | GreedyRule::MinDistance => {
                md_score(collection.task(m), collection.cache(m), w)
            }
            GreedyRule::MaxResidual => mr_score(collection.task(m), w),
        }
    }

    fn prefers(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            GreedyRule::MinDistance => candidate < incumbent,
            _ => candidate > incumbent,
        }
    }
}

/// Greedy rule used during the greedy phase of a hybrid ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HybridRule {
    MaxDistance,
    MaxResidual,
}

impl HybridRule {
    fn greedy(self) -> GreedyRule {
        match self {
            HybridRule::MaxDistance => GreedyRule::MaxDistance,
            HybridRule::MaxResidual => GreedyRule::MaxResidual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderingPolicy {
    /// Uniform sampling, with or without replacement.
    Random {
        replacement: bool,
        seed: u64,
    },
    Greedy {
        rule: GreedyRule,
        repetition: bool,
    },
    /// Greedy while the best score stays at or above `threshold`, then
    /// uniform without replacement over the remaining tasks.
    Hybrid {
        rule: HybridRule,
        threshold: f64,
        seed: u64,
    },
}

impl OrderingPolicy {
    pub fn random_without(seed: u64) -> Self {
        OrderingPolicy::Random {
            replacement: false,
            seed,
        }
    }

    pub fn random_with(seed: u64) -> Self {
        OrderingPolicy::Random {
            replacement: true,
            seed,
        }
    }

    pub fn greedy(rule: GreedyRule) -> Self {
        OrderingPolicy::Greedy {
            rule,
            repetition: false,
        }
    }

    pub fn greedy_with_repetition(rule: GreedyRule) -> Self {
        OrderingPolicy::Greedy {
            rule,
            repetition: true,
        }
    }

    /// Whether a task may be selected more than once.
    pub fn allows_repetition(&self) -> bool {
        match *self {
            OrderingPolicy::Random { replacement, .. } => replacement,
            OrderingPolicy::Greedy { repetition, .. } => repetition,
            OrderingPolicy::Hybrid { .. } => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let OrderingPolicy::Hybrid { threshold, .. } = *self {
            if !(threshold >= 0.0) || !threshold.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "hybrid threshold must be finite and non-negative, got {threshold}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for OrderingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            OrderingPolicy::Random { replacement, .. } => f.write_str(if replacement {
                "random-with"
            } else {
                "random-without"
            }),
            OrderingPolicy::Greedy { rule, repetition } => {
                let base = match rule {
                    GreedyRule::MaxDistance => "md",
                    GreedyRule::MaxResidual => "mr",
                    GreedyRule::MinDistance => "min-distance",
                };
                if repetition {
                    write!(f, "{base}-rep")
                } else {
                    f.write_str(base)
                }
            }
            OrderingPolicy::Hybrid { rule, .. } => f.write_str(match rule {
                HybridRule::MaxDistance => "hybrid-md",
                HybridRule::MaxResidual => "hybrid-mr",
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Greedy,
    Random,
}

/// Phase bookkeeping for hybrid orderings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridState {
    pub phase: Phase,
    /// One-based iteration whose greedy candidate first missed the threshold.
    pub switch_step: Option<usize>,
}

impl HybridState {
    fn new() -> Self {
        HybridState {
            phase: Phase::Greedy,
            switch_step: None,
        }
    }

    /// Number of greedy steps taken before the switch, given `total` steps.
    pub fn greedy_steps(&self, total: usize) -> usize {
        self.switch_step.map_or(total, |s| s - 1)
    }
}

/// The outcome of one selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub phase: Phase,
    pub best_score: Option<f64>,
}

/// Per-run selection state: the policy, its RNG stream, and hybrid phase.
#[derive(Debug, Clone)]
pub struct Selector {
    policy: OrderingPolicy,
    rng: ChaCha8Rng,
    hybrid: Option<HybridState>,
}

impl Selector {
    pub fn new(policy: OrderingPolicy) -> Result<Self> {
        policy.validate()?;
        let seed = match policy {
            OrderingPolicy::Random { seed, .. } | OrderingPolicy::Hybrid { seed, .. } => seed,
            OrderingPolicy::Greedy { .. } => 0,
        };
        let hybrid = matches!(policy, OrderingPolicy::Hybrid { .. }).then(HybridState::new);
        Ok(Selector {
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            hybrid,
        })
    }

    pub fn policy(&self) -> OrderingPolicy {
        self.policy
    }

    pub fn hybrid_state(&self) -> Option<HybridState> {
        self.hybrid
    }

    /// Next task to learn, or `None` once a single-pass policy has used up
    /// every task.
    pub fn next_index(
        &mut self,
        collection: &TaskCollection,
        state: &LearnerState,
    ) -> Result<Option<Selection>> {
        let t = collection.len();
        if state.task_count() != t {
            return Err(Error::InvalidInput(
                "learner state does not match the collection".into(),
            ));
        }
        let repetition = self.policy.allows_repetition();
        if !repetition && state.visited_count() == t {
            return Ok(None);
        }
        let w = state.iterate();
        match self.policy {
            OrderingPolicy::Random { replacement, .. } => {
                let index = if replacement {
                    self.rng.random_range(0..t)
                } else {
                    self.draw_unvisited(state)
                };
                Ok(Some(Selection {
                    index,
                    phase: Phase::Random,
                    best_score: None,
                }))
            }
            OrderingPolicy::Greedy { rule, repetition } => {
                let (index, score) = best_candidate(collection, state, w, rule, repetition)?;
                Ok(Some(Selection {
                    index,
                    phase: Phase::Greedy,
                    best_score: Some(score),
                }))
            }
            OrderingPolicy::Hybrid {
                rule, threshold, ..
            } => {
                let hybrid = self
                    .hybrid
                    .as_mut()
                    .expect("hybrid policy has hybrid state");
                if hybrid.phase == Phase::Greedy {
                    let (index, score) =
                        best_candidate(collection, state, w, rule.greedy(), false)?;
                    if score >= threshold {
                        return Ok(Some(Selection {
                            index,
                            phase: Phase::Greedy,
                            best_score: Some(score),
                        }));
                    }
                    hybrid.phase = Phase::Random;
                    hybrid.switch_step = Some(state.step() + 1);
                    let index = self.draw_unvisited(state);
                    return Ok(Some(Selection {
                        index,
                        phase: Phase::Random,
                        best_score: Some(score),
                    }));
                }
                let index = self.draw_unvisited(state);
                Ok(Some(Selection {
                    index,
                    phase: Phase::Random,
                    best_score: None,
                }))
            }
        }
    }

    fn draw_unvisited(&mut self, state: &LearnerState) -> usize {
        let pool = state.unvisited();
        pool[self.rng.random_range(0..pool.len())]
    }
}

fn best_candidate(
    collection: &TaskCollection,
    state: &LearnerState,
    w: &DVector<f64>,
    rule: GreedyRule,
    repetition: bool,
) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for m in 0..collection.len() {
        if !repetition && state.is_visited(m) {
            continue;
        }
        let s = rule.score(collection, m, w)?;
        if !s.is_finite() {
            return Err(Error::NonFinite("greedy score"));
        }
        match best {
            Some((_, b)) if !rule.prefers(s, b) => {}
            _ => best = Some((m, s)),
        }
    }
    best.ok_or_else(|| Error::InvalidInput("no candidate tasks".into()))
}

/// Relative hybrid threshold `(T^α − C(1 − α)) / (C T)` derived from a
/// random-ordering bound `C / T^α`, with its validity condition
/// `C / T^α ≤ 1 / (2 − α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaMin {
    pub value: f64,
    /// `C / T^α`.
    pub ratio: f64,
    /// `1 / (2 − α)`.
    pub limit: f64,
}

impl BetaMin {
    pub fn precondition_holds(&self) -> bool {
        self.ratio <= self.limit
    }

    /// The threshold, or an error when the validity condition fails.
    pub fn checked(self) -> Result<f64> {
        if self.precondition_holds() {
            Ok(self.value)
        } else {
            Err(Error::Precondition(format!(
                "C/T^alpha = {} exceeds 1/(2-alpha) = {}",
                self.ratio, self.limit
            )))
        }
    }
}

pub fn beta_min_threshold(tasks: usize, c: f64, alpha: f64) -> Result<BetaMin> {
    if tasks == 0 {
        return Err(Error::InvalidInput("T must be positive".into()));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidInput(format!("C must be positive, got {c}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let t = tasks as f64;
    let t_alpha = t.powf(alpha);
    Ok(BetaMin {
        value: (t_alpha - c * (1.0 - alpha)) / (c * t),
        ratio: c / t_alpha,
        limit: 1.0 / (2.0 - alpha),
    })
}
