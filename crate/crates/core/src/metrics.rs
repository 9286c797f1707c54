//! Diffusion time: the expected number of primitive steps a uniformly random
//! agent needs to travel between two uniformly chosen states.
//!
//! At each decision point the agent picks uniformly among the four primitive
//! moves and the options initiable in its current state. The exact value
//! comes from one hitting-time linear system per goal; the Monte Carlo
//! estimator simulates the same process and serves as an independent check.

use std::fmt::Write as _;

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use thiserror::Error;

use crate::env::{Action, GridWorld};
use crate::io::{compensated_sum, fmt17};
use crate::linalg::{self, LinalgError};
use crate::options::{default_cap, option_trajectory, MarkovOption, OptionTrajectory, OptionsError, RolloutEnd};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("option {name} does not terminate from state {state}")]
    NonTerminating { name: String, state: usize },
    #[error("hitting-time system for goal {goal} is unsolvable: {source}")]
    Singular { goal: usize, source: LinalgError },
    #[error("map needs at least two states")]
    TooSmall,
    #[error(transparent)]
    Options(#[from] OptionsError),
}

/// How an option that walks through the goal mid-trajectory is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arrival {
    /// The first visit to the goal ends the walk, even inside an option.
    #[default]
    FirstVisit,
    /// Only decision points count; an option must end on the goal.
    DecisionPointsOnly,
}

/// A gridworld plus an option set with each option's rollout cached per start state.
#[derive(Debug, Clone)]
pub struct DiffusionSpec<'a> {
    world: &'a GridWorld,
    options: Vec<MarkovOption>,
    rollouts: Vec<Vec<Option<OptionTrajectory>>>,
    /// Bitset of the states each rollout passes through after its start.
    visits: Vec<Vec<Vec<u64>>>,
    pub arrival: Arrival,
}

impl<'a> DiffusionSpec<'a> {
    pub fn new(world: &'a GridWorld, options: &[MarkovOption]) -> Result<Self, MetricsError> {
        if world.num_states() < 2 {
            return Err(MetricsError::TooSmall);
        }
        let cap = default_cap(world);
        let rollouts = options
            .iter()
            .map(|o| {
                (0..world.num_states())
                    .map(|s| {
                        if !o.can_start(s) {
                            return Ok(None);
                        }
                        let t = option_trajectory(world, o, s, None, cap)?;
                        if t.outcome == RolloutEnd::Capped {
                            return Err(MetricsError::NonTerminating {
                                name: o.name.clone(),
                                state: s,
                            });
                        }
                        Ok(Some(t))
                    })
                    .collect::<Result<Vec<_>, MetricsError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let words = world.num_states().div_ceil(64);
        let visits = rollouts
            .iter()
            .map(|per_start| {
                per_start
                    .iter()
                    .map(|t| {
                        let mut bits = vec![0u64; words];
                        for &v in t.iter().flat_map(|t| &t.visited[1..]) {
                            bits[v / 64] |= 1 << (v % 64);
                        }
                        bits
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            world,
            options: options.to_vec(),
            rollouts,
            visits,
            arrival: Arrival::default(),
        })
    }

    pub fn primitives_only(world: &'a GridWorld) -> Result<Self, MetricsError> {
        Self::new(world, &[])
    }

    pub fn world(&self) -> &GridWorld {
        self.world
    }

    pub fn options(&self) -> &[MarkovOption] {
        &self.options
    }

    /// The same spec restricted to its first `count` options.
    pub fn prefix(&self, count: usize) -> Self {
        let count = count.min(self.options.len());
        Self {
            world: self.world,
            options: self.options[..count].to_vec(),
            rollouts: self.rollouts[..count].to_vec(),
            visits: self.visits[..count].to_vec(),
            arrival: self.arrival,
        }
    }

    /// `(duration, end)` of one choice from `s` towards `goal`, truncated at
    /// the first visit to `goal` when [`Arrival::FirstVisit`] applies.
    fn option_outcome(&self, option: usize, s: usize, goal: usize) -> (usize, usize) {
        let t = self.rollouts[option][s].as_ref().expect("option is initiable here");
        if self.arrival == Arrival::FirstVisit && self.visits[option][s][goal / 64] & (1 << (goal % 64)) != 0 {
            if let Some(i) = t.visited.iter().skip(1).position(|&v| v == goal) {
                return (i + 1, goal);
            }
        }
        (t.duration, t.end)
    }

    fn initiable(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.options.len()).filter(move |&o| self.rollouts[o][s].is_some())
    }
}

/// Expected steps to reach `goal` from every state (zero at `goal`).
pub fn hitting_times(spec: &DiffusionSpec, goal: usize) -> Result<Vec<f64>, MetricsError> {
    let g = spec.world();
    let n = g.num_states();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        a[s * n + s] += 1.0;
        if s == goal {
            continue;
        }
        let mut choices: Vec<(usize, usize)> = Action::ALL.iter().map(|&m| (1, g.step(s, m))).collect();
        choices.extend(spec.initiable(s).map(|o| spec.option_outcome(o, s, goal)));
        let p = 1.0 / choices.len() as f64;
        for (dur, end) in choices {
            b[s] += p * dur as f64;
            if end != goal {
                a[s * n + end] -= p;
            }
        }
    }
    linalg::solve(&a, &b, 1e-8).map_err(|source| MetricsError::Singular { goal, source })
}

/// Exact diffusion time: mean hitting time over all ordered pairs `s != goal`.
pub fn diffusion_time(spec: &DiffusionSpec) -> Result<f64, MetricsError> {
    let n = spec.world().num_states();
    let per_goal = |goal: usize| -> Result<f64, MetricsError> {
        let v = hitting_times(spec, goal)?;
        Ok(compensated_sum(v.iter().enumerate().filter(|(s, _)| *s != goal).map(|(_, x)| *x)))
    };
    #[cfg(feature = "parallel")]
    let sums: Vec<f64> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(per_goal).collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let sums: Vec<f64> = (0..n).map(per_goal).collect::<Result<_, _>>()?;
    Ok(compensated_sum(sums) / (n * (n - 1)) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub walks: usize,
    /// Walks that hit the step cap; each was recorded at the cap.
    pub capped: usize,
}

/// Monte Carlo diffusion time over `walks` random (start, goal) pairs.
pub fn diffusion_time_mc(spec: &DiffusionSpec, walks: usize, cap: usize, seed: u64) -> McEstimate {
    let g = spec.world();
    let n = g.num_states();
    let initiable: Vec<Vec<usize>> = (0..n).map(|s| spec.initiable(s).collect()).collect();
    // One sampler per choice-set size; building a range per draw is several times slower.
    let choosers: Vec<Uniform<u32>> = (0..=spec.options.len() as u32).map(|k| Uniform::new(0, 4 + k)).collect();

    let walk = |i: usize| -> (f64, bool) {
        let mut rng = seeds::stream(seed, i as u64);
        let start = rng.gen_range(0..n);
        let mut goal = rng.gen_range(0..n - 1);
        if goal >= start {
            goal += 1;
        }
        let mut s = start;
        let mut steps = 0usize;
        loop {
            if steps >= cap {
                return (cap as f64, true);
            }
            let choice = choosers[initiable[s].len()].sample(&mut rng) as usize;
            let (dur, end) = if choice < 4 {
                (1, g.step(s, Action::ALL[choice]))
            } else {
                spec.option_outcome(initiable[s][choice - 4], s, goal)
            };
            steps += dur;
            s = end;
            if s == goal {
                return if steps <= cap { (steps as f64, false) } else { (cap as f64, true) };
            }
        }
    };

    #[cfg(feature = "parallel")]
    let results: Vec<(f64, bool)> = {
        use rayon::prelude::*;
        (0..walks).into_par_iter().map(walk).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(f64, bool)> = (0..walks).map(walk).collect();

    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (mean, stderr) = crate::io::mean_stderr(&values);
    McEstimate {
        mean,
        stderr,
        walks,
        capped: results.iter().filter(|r| r.1).count(),
    }
}

/// Monte Carlo settings for [`diffusion_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub walks: usize,
    pub cap: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub option_count: usize,
    pub diffusion_time: f64,
    pub mc: Option<McEstimate>,
}

/// Diffusion time with the first 0, 2, 4, ... options (sign pairs in the given order).
pub fn diffusion_sweep(world: &GridWorld, options: &[MarkovOption], max_options: usize, arrival: Arrival, mc: Option<McSettings>) -> Result<Vec<SweepRow>, MetricsError> {
    let max_options = max_options.min(options.len());
    let mut full = DiffusionSpec::new(world, &options[..max_options])?;
    full.arrival = arrival;
    (0..=max_options)
        .step_by(2)
        .map(|count| {
            let spec = full.prefix(count);
            Ok(SweepRow {
                option_count: count,
                diffusion_time: diffusion_time(&spec)?,
                mc: mc.map(|m| diffusion_time_mc(&spec, m.walks, m.cap, m.seed)),
            })
        })
        .collect()
}

/// CSV with columns `option_count,diffusion_time,mc_estimate,mc_stderr`; MC cells are empty when not run.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("option_count,diffusion_time,mc_estimate,mc_stderr\n");
    for r in rows {
        let (m, e) = r.mc.map_or((String::new(), String::new()), |mc| (fmt17(mc.mean), fmt17(mc.stderr)));
        writeln!(out, "{},{},{m},{e}", r.option_count, fmt17(r.diffusion_time)).expect("write to string");
    }
    out
}

/// Mean number of primitive steps an option runs, over all of its initiation states.
pub fn mean_option_duration(world: &GridWorld, option: &MarkovOption) -> Result<f64, MetricsError> {
    let starts = option.initiation_states();
    let total: usize = starts
        .iter()
        .map(|&s| option_trajectory(world, option, s, None, default_cap(world)).map(|t| t.duration))
        .sum::<Result<usize, _>>()?;
    Ok(total as f64 / starts.len().max(1) as f64)
}
