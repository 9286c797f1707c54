//! Q-learning over primitive actions, with a behavior policy that picks
//! uniformly among primitives and the options initiable in the current state.
//!
//! Every primitive transition taken, inside an option or not, performs one
//! Watkins update. After each episode the greedy policy is rolled out from the
//! start state and its discounted return is recorded.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::env::{Action, GridWorld};
use crate::io::{compensated_sum, fmt17, mean_stderr};
use crate::options::{bottleneck_options, default_cap, option_trajectory, MarkovOption, OptionsError};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("invalid learning configuration: {0}")]
    InvalidConfig(String),
    #[error("state {0} is out of range")]
    StateOutOfRange(usize),
    #[error("no tasks given")]
    NoTasks,
    #[error(transparent)]
    Options(#[from] OptionsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LearnConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub episodes: usize,
    pub episode_len: usize,
    pub trials: usize,
    pub start: usize,
    pub goal: usize,
}

impl LearnConfig {
    /// α = 0.1, γ = 0.9, 100-step episodes, 500 episodes, 100 trials.
    pub fn standard(start: usize, goal: usize) -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            episodes: 500,
            episode_len: 100,
            trials: 100,
            start,
            goal,
        }
    }

    pub fn with_task(self, start: usize, goal: usize) -> Self {
        Self { start, goal, ..self }
    }

    pub fn validate(&self, world: &GridWorld) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidConfig(m.into()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if self.episode_len == 0 {
            return bad("episode_len must be at least 1");
        }
        for s in [self.start, self.goal] {
            if s >= world.num_states() {
                return Err(LearnError::StateOutOfRange(s));
            }
        }
        if self.start == self.goal {
            return bad("start and goal coincide");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearningCurve {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub seeds: Vec<u64>,
    /// `per_trial[t][e]`: greedy return after episode `e` of trial `t`.
    #[serde(skip)]
    pub per_trial: Vec<Vec<f64>>,
}

impl LearningCurve {
    fn from_trials(per_trial: Vec<Vec<f64>>, seeds: Vec<u64>, episodes: usize) -> Self {
        let (mean, stderr) = (0..episodes)
            .map(|e| mean_stderr(&per_trial.iter().map(|t| t[e]).collect::<Vec<_>>()))
            .unzip();
        Self { mean, stderr, seeds, per_trial }
    }

    pub fn area(&self) -> f64 {
        curve_area(&self.mean)
    }

    pub fn trial_areas(&self) -> Vec<f64> {
        self.per_trial.iter().map(|t| curve_area(t)).collect()
    }

    /// Mean return over the last 5% of episodes (at least one).
    pub fn final_value(&self) -> f64 {
        let tail = (self.mean.len() / 20).max(1).min(self.mean.len());
        compensated_sum(self.mean[self.mean.len() - tail..].iter().copied()) / tail.max(1) as f64
    }

    /// First episode (1-based) whose mean return exceeds `fraction` of [`final_value`](Self::final_value).
    pub fn episodes_to_fraction(&self, fraction: f64) -> Option<usize> {
        let target = fraction * self.final_value();
        self.mean.iter().position(|&r| r > target).map(|e| e + 1)
    }

    /// CSV with columns `episode,mean_return,stderr`, episodes numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,mean_return,stderr\n");
        for (e, (m, s)) in self.mean.iter().zip(&self.stderr).enumerate() {
            writeln!(out, "{},{},{}", e + 1, fmt17(*m), fmt17(*s)).expect("write to string");
        }
        out
    }
}

pub fn curve_area(returns: &[f64]) -> f64 {
    compensated_sum(returns.iter().copied())
}

/// Trials in which `a`'s area is at least `b`'s (both curves must share seeds).
pub fn paired_wins(a: &LearningCurve, b: &LearningCurve) -> usize {
    assert_eq!(a.seeds, b.seeds, "curves are not paired");
    a.trial_areas().iter().zip(b.trial_areas()).filter(|(x, y)| **x >= *y).count()
}

/// Mean and standard error of the per-seed area difference `a − b`.
pub fn paired_difference(a: &LearningCurve, b: &LearningCurve) -> (f64, f64) {
    assert_eq!(a.seeds, b.seeds, "curves are not paired");
    let d: Vec<f64> = a.trial_areas().iter().zip(b.trial_areas()).map(|(x, y)| x - y).collect();
    mean_stderr(&d)
}

/// Primitive moves of one option from each start state, or `None` where it is not initiable.
type Rollouts = Vec<Vec<Option<Vec<(usize, Action)>>>>;

fn option_moves(world: &GridWorld, options: &[MarkovOption], episode_len: usize) -> Result<Rollouts, LearnError> {
    let cap = default_cap(world).max(episode_len);
    options
        .iter()
        .map(|o| {
            (0..world.num_states())
                .map(|s| {
                    if !o.can_start(s) {
                        return Ok(None);
                    }
                    let t = option_trajectory(world, o, s, None, cap)?;
                    let moves = t.visited[..t.visited.len() - 1]
                        .iter()
                        .map(|&v| (v, o.policy[v].primitive().expect("non-terminal state has a move")))
                        .collect();
                    Ok(Some(moves))
                })
                .collect::<Result<Vec<_>, LearnError>>()
        })
        .collect()
}

/// Per-state action priority used to break ties between equal Q-values.
pub type TieOrder = Vec<[usize; 4]>;

/// A random action priority for every state, drawn from stream 1 of `seed`.
///
/// A fixed global order would bias greedy rollouts of a barely trained Q
/// towards one direction, favouring goals that happen to lie that way.
pub fn tie_order(num_states: usize, seed: u64) -> TieOrder {
    let mut rng = seeds::stream(seed, 1);
    (0..num_states)
        .map(|_| {
            let mut p = [0, 1, 2, 3];
            p.shuffle(&mut rng);
            p
        })
        .collect()
}

fn argmax(q: &[f64; 4], priority: &[usize; 4]) -> usize {
    let mut best = priority[0];
    for &a in &priority[1..] {
        if q[a] > q[best] {
            best = a;
        }
    }
    best
}

/// Discounted return of the greedy policy from `cfg.start`: `γ^(steps−1)` on
/// reaching the goal within `episode_len` steps, else 0. Ties between equal
/// Q-values follow `ties`.
pub fn greedy_return(world: &GridWorld, q: &[[f64; 4]], ties: &[[usize; 4]], cfg: &LearnConfig) -> f64 {
    let mut s = cfg.start;
    for step in 0..cfg.episode_len {
        s = world.step(s, Action::ALL[argmax(&q[s], &ties[s])]);
        if s == cfg.goal {
            return cfg.gamma.powi(step as i32);
        }
    }
    0.0
}

struct Learner<'a> {
    world: &'a GridWorld,
    cfg: LearnConfig,
    q: Vec<[f64; 4]>,
}

impl Learner<'_> {
    fn update(&mut self, s: usize, a: Action, next: usize) {
        let (r, future) = if next == self.cfg.goal {
            (1.0, 0.0)
        } else {
            (0.0, self.q[next].iter().copied().fold(f64::NEG_INFINITY, f64::max))
        };
        let cell = &mut self.q[s][a.index()];
        *cell += self.cfg.alpha * (r + self.cfg.gamma * future - *cell);
        debug_assert!((0.0..=1.0).contains(cell), "Q({s},{a:?}) = {cell} left [0, 1]");
    }
}

fn run_trial(world: &GridWorld, rollouts: &Rollouts, initiable: &[Vec<usize>], cfg: &LearnConfig, seed: u64) -> Vec<f64> {
    let mut rng = seeds::stream(seed, 0);
    let ties = tie_order(world.num_states(), seed);
    let mut l = Learner {
        world,
        cfg: *cfg,
        q: vec![[0.0; 4]; world.num_states()],
    };
    let mut curve = Vec::with_capacity(cfg.episodes);
    for _ in 0..cfg.episodes {
        let mut s = cfg.start;
        let mut steps = 0;
        while steps < cfg.episode_len && s != cfg.goal {
            let choice = rng.gen_range(0..4 + initiable[s].len());
            if choice < 4 {
                let a = Action::ALL[choice];
                let next = l.world.step(s, a);
                l.update(s, a, next);
                s = next;
                steps += 1;
                continue;
            }
            let moves = rollouts[initiable[s][choice - 4]][s].as_ref().expect("initiable");
            for &(from, a) in moves {
                let next = l.world.step(from, a);
                l.update(from, a, next);
                s = next;
                steps += 1;
                if s == cfg.goal || steps == cfg.episode_len {
                    break;
                }
            }
        }
        curve.push(greedy_return(world, &l.q, &ties, cfg));
    }
    curve
}

/// Learning curve averaged over `cfg.trials` trials seeded from `seed`.
pub fn q_learning_with_options(world: &GridWorld, options: &[MarkovOption], cfg: &LearnConfig, seed: u64) -> Result<LearningCurve, LearnError> {
    cfg.validate(world)?;
    let rollouts = option_moves(world, options, cfg.episode_len)?;
    let initiable: Vec<Vec<usize>> = (0..world.num_states())
        .map(|s| (0..options.len()).filter(|&o| rollouts[o][s].is_some()).collect())
        .collect();
    let trial_seeds: Vec<u64> = (0..cfg.trials as u64).map(|t| seeds::derive(seed, t)).collect();
    let trial = |&s: &u64| run_trial(world, &rollouts, &initiable, cfg, s);

    #[cfg(feature = "parallel")]
    let per_trial: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        trial_seeds.par_iter().map(trial).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_trial: Vec<Vec<f64>> = trial_seeds.iter().map(trial).collect();

    Ok(LearningCurve::from_trials(per_trial, trial_seeds, cfg.episodes))
}

/// One curve per option count, using the first `count` options and the same seeds throughout.
pub fn option_count_sweep(world: &GridWorld, options: &[MarkovOption], cfg: &LearnConfig, counts: &[usize], seed: u64) -> Result<Vec<(usize, LearningCurve)>, LearnError> {
    counts
        .iter()
        .map(|&c| {
            if c % 2 != 0 || c > options.len() {
                return Err(LearnError::InvalidConfig(format!("option count {c} must be even and at most {}", options.len())));
            }
            Ok((c, q_learning_with_options(world, &options[..c], cfg, seed)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub start: usize,
    pub goal: usize,
    pub options: LearningCurve,
    pub primitives: LearningCurve,
    /// Present when the map has the four-room doorway structure.
    pub bottleneck: Option<LearningCurve>,
}

/// Evaluates one fixed option set on each task and on each task's swap,
/// against primitives-only and bottleneck-option baselines.
pub fn multitask_eval(world: &GridWorld, options: &[MarkovOption], tasks: &[(usize, usize)], cfg: &LearnConfig, seed: u64) -> Result<Vec<TaskResult>, LearnError> {
    if tasks.is_empty() {
        return Err(LearnError::NoTasks);
    }
    let mut all: Vec<(usize, usize)> = Vec::new();
    for &(s, g) in tasks {
        for t in [(s, g), (g, s)] {
            if !all.contains(&t) {
                all.push(t);
            }
        }
    }
    let bottleneck = bottleneck_options(world).ok();
    all.into_iter()
        .map(|(start, goal)| {
            let c = cfg.with_task(start, goal);
            Ok(TaskResult {
                start,
                goal,
                options: q_learning_with_options(world, options, &c, seed)?,
                primitives: q_learning_with_options(world, &[], &c, seed)?,
                bottleneck: bottleneck.as_deref().map(|b| q_learning_with_options(world, b, &c, seed)).transpose()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{maps, parse_map};
    use crate::options::random_subgoal_option;

    fn small(start: usize, goal: usize) -> LearnConfig {
        LearnConfig {
            episodes: 30,
            trials: 8,
            ..LearnConfig::standard(start, goal)
        }
    }

    #[test]
    fn unreachable_goal_gives_zero_curve() {
        let g = parse_map(".................").unwrap();
        let cfg = LearnConfig {
            episode_len: 5,
            ..small(0, 16)
        };
        let c = q_learning_with_options(&g, &[], &cfg, 3).unwrap();
        assert!(c.mean.iter().all(|&r| r == 0.0));
        assert_eq!(c.mean.len(), 30);
    }

    #[test]
    fn two_state_chain_reaches_one() {
        let g = parse_map("..").unwrap();
        let c = q_learning_with_options(&g, &[], &small(0, 1), 1).unwrap();
        assert_eq!(*c.mean.last().unwrap(), 1.0);
        assert!(c.stderr.last().unwrap().abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_config() {
        let g = maps::open_grid();
        for cfg in [
            LearnConfig { alpha: 0.0, ..small(0, 1) },
            LearnConfig { gamma: 1.0, ..small(0, 1) },
            LearnConfig { episode_len: 0, ..small(0, 1) },
            small(2, 2),
        ] {
            assert!(matches!(q_learning_with_options(&g, &[], &cfg, 0), Err(LearnError::InvalidConfig(_))));
        }
        assert_eq!(q_learning_with_options(&g, &[], &small(0, 1000), 0), Err(LearnError::StateOutOfRange(1000)));
    }

    /// Textbook Q-learner with a uniform behavior policy, written independently.
    fn reference(g: &GridWorld, cfg: &LearnConfig, seed: u64) -> Vec<f64> {
        let mut rng = seeds::stream(seed, 0);
        let ties = tie_order(g.num_states(), seed);
        let mut q = vec![[0.0f64; 4]; g.num_states()];
        let mut out = vec![];
        for _ in 0..cfg.episodes {
            let mut s = cfg.start;
            for _ in 0..cfg.episode_len {
                let a = rng.gen_range(0..4);
                let n = g.step(s, Action::ALL[a]);
                let target = if n == cfg.goal { 1.0 } else { cfg.gamma * q[n].iter().cloned().fold(f64::MIN, f64::max) };
                q[s][a] += cfg.alpha * (target - q[s][a]);
                s = n;
                if s == cfg.goal {
                    break;
                }
            }
            out.push(greedy_return(g, &q, &ties, cfg));
        }
        out
    }

    #[test]
    fn zero_options_match_plain_q_learning_bitwise() {
        let g = maps::four_room();
        let cfg = small(g.start().unwrap(), g.goal().unwrap());
        let c = q_learning_with_options(&g, &[], &cfg, 11).unwrap();
        for (t, seed) in c.seeds.iter().enumerate() {
            let r = reference(&g, &cfg, *seed);
            assert!(r.iter().zip(&c.per_trial[t]).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn deterministic_and_paired() {
        let g = maps::four_room();
        let cfg = small(g.start().unwrap(), g.goal().unwrap());
        let opts: Vec<_> = (0..4).map(|x| random_subgoal_option(&g, x * 20)).collect();
        let a = q_learning_with_options(&g, &opts, &cfg, 5).unwrap();
        let b = q_learning_with_options(&g, &opts, &cfg, 5).unwrap();
        assert_eq!(a, b);
        let sweep = option_count_sweep(&g, &opts, &cfg, &[0, 4], 5).unwrap();
        assert_eq!(sweep[0].1.seeds, sweep[1].1.seeds);
        assert_eq!(sweep[1].1, a);
        assert!(option_count_sweep(&g, &opts, &cfg, &[3], 5).is_err());
        assert!(a.mean.iter().all(|r| (0.0..=1.0).contains(r)));
    }

    #[test]
    fn curve_statistics() {
        let c = LearningCurve::from_trials(vec![vec![0.0, 0.5, 1.0, 1.0], vec![0.0, 0.0, 1.0, 1.0]], vec![1, 2], 4);
        assert_eq!(c.mean, vec![0.0, 0.25, 1.0, 1.0]);
        assert_eq!(c.final_value(), 1.0);
        assert_eq!(c.episodes_to_fraction(0.9), Some(3));
        assert_eq!(c.area(), 2.25);
        assert_eq!(paired_wins(&c, &c), 2);
        assert_eq!(paired_difference(&c, &c).0, 0.0);
        let csv = c.to_csv();
        assert!(csv.starts_with("episode,mean_return,stderr\n1,"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn multitask_adds_swaps() {
        let g = maps::four_room();
        let cfg = LearnConfig { episodes: 5, trials: 2, ..LearnConfig::standard(0, 1) };
        let r = multitask_eval(&g, &[], &[(0, 50), (50, 0), (3, 9)], &cfg, 1).unwrap();
        let tasks: Vec<_> = r.iter().map(|t| (t.start, t.goal)).collect();
        assert_eq!(tasks, vec![(0, 50), (50, 0), (3, 9), (9, 3)]);
        assert!(r.iter().all(|t| t.bottleneck.is_some()));
        assert_eq!(multitask_eval(&g, &[], &[], &cfg, 1), Err(LearnError::NoTasks));
    }
}
