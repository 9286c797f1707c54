//! Eigenoptions and the baseline option sets.
//!
//! An eigenpurpose `e` defines the intrinsic reward
//! `r(s, s') = e · (φ(s') − φ(s))`. Adding a terminate action `⊥` with value
//! pinned at zero and solving the resulting MDP gives the option: it is
//! initiable wherever some primitive action has positive value and
//! terminates everywhere else.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Action, FeatureMap, GridWorld};
use crate::io::Sig17;
use crate::linalg::{self, LinalgError};
use crate::seeds;
use crate::spectral::{self, Eigenpurpose, LaplacianKind, Sign, SpectralError};

/// Default discount of the option-solving MDP.
pub const DEFAULT_GAMMA: f64 = 0.9;

/// Default tolerance for the Bellman residual of a solved q table.
pub const SOLVE_TOL: f64 = 1e-10;

/// q values at or below this count as non-positive. Eigenvector round-off
/// produces rewards around 1e-16, which must not create initiable states.
pub const POSITIVE_TOL: f64 = 1e-10;

/// Action values closer than this are ties, resolved by action order.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptionsError {
    #[error("vector length {found} does not match eigenpurpose dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("discount {0} is outside [0, 1)")]
    InvalidGamma(f64),
    #[error("option {0} has an empty termination set")]
    EmptyTermination(String),
    #[error("state {0} is not in the option's initiation set")]
    NotInitiable(usize),
    #[error("map is not a four-room layout: {0}")]
    NotFourRoom(String),
    #[error("policy iteration did not stabilise after {0} improvements")]
    NoConvergence(usize),
    #[error("Bellman residual {residual:e} at state {state} exceeds {tol:e}")]
    BellmanResidual { state: usize, residual: f64, tol: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// A primitive move or the terminate action `⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionAction {
    Up,
    Down,
    Right,
    Left,
    Terminate,
}

impl OptionAction {
    /// Tie-break order: up, down, right, left, terminate.
    pub const ALL: [OptionAction; 5] = [
        OptionAction::Up,
        OptionAction::Down,
        OptionAction::Right,
        OptionAction::Left,
        OptionAction::Terminate,
    ];

    pub fn primitive(self) -> Option<Action> {
        match self {
            OptionAction::Up => Some(Action::Up),
            OptionAction::Down => Some(Action::Down),
            OptionAction::Right => Some(Action::Right),
            OptionAction::Left => Some(Action::Left),
            OptionAction::Terminate => None,
        }
    }

    pub fn glyph(self) -> char {
        self.primitive().map_or('T', Action::arrow)
    }
}

impl From<Action> for OptionAction {
    fn from(a: Action) -> Self {
        OptionAction::ALL[a.index()]
    }
}

/// An option ⟨ℐ, π, 𝒯⟩ over a gridworld's states.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovOption {
    pub name: String,
    pub policy: Vec<OptionAction>,
    pub initiation: Vec<bool>,
    pub termination: Vec<bool>,
}

impl MarkovOption {
    pub fn can_start(&self, s: usize) -> bool {
        self.initiation[s]
    }

    pub fn initiation_states(&self) -> Vec<usize> {
        members(&self.initiation)
    }

    pub fn termination_states(&self) -> Vec<usize> {
        members(&self.termination)
    }

    /// One character per cell: `#` wall, `T` terminate, arrows for moves.
    pub fn render(&self, g: &GridWorld) -> String {
        let mut out = String::new();
        for row in 0..g.height() {
            for col in 0..g.width() {
                out.push(match g.state_at(row, col) {
                    None => '#',
                    Some(s) => self.policy[s].glyph(),
                });
            }
            out.push('\n');
        }
        out
    }
}

fn members(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &m)| m).map(|(s, _)| s).collect()
}

/// Intrinsic reward `e · (φ(s') − φ(s))`.
pub fn eigenpurpose_reward(e: &Eigenpurpose, phi_s: &[f64], phi_next: &[f64]) -> Result<f64, OptionsError> {
    let expected = e.vector.len();
    for v in [phi_s, phi_next] {
        if v.len() != expected {
            return Err(OptionsError::DimensionMismatch { expected, found: v.len() });
        }
    }
    Ok(e.vector
        .iter()
        .zip(phi_s.iter().zip(phi_next))
        .map(|(w, (a, b))| w * (b - a))
        .sum())
}

/// The eigenpurpose's MDP over `𝒜 ∪ {⊥}`, with rewards precomputed per (state, move).
#[derive(Debug, Clone)]
pub struct AugmentedMdp<'a> {
    world: &'a GridWorld,
    purpose: Eigenpurpose,
    rewards: Vec<[f64; 4]>,
    gamma: f64,
}

impl<'a> AugmentedMdp<'a> {
    pub fn new(world: &'a GridWorld, purpose: &Eigenpurpose, features: FeatureMap, gamma: f64) -> Result<Self, OptionsError> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(OptionsError::InvalidGamma(gamma));
        }
        let phi: Vec<Vec<f64>> = (0..world.num_states()).map(|s| features.features(world, s)).collect();
        let mut rewards = Vec::with_capacity(world.num_states());
        for s in 0..world.num_states() {
            let mut row = [0.0; 4];
            for a in Action::ALL {
                row[a.index()] = eigenpurpose_reward(purpose, &phi[s], &phi[world.step(s, a)])?;
            }
            rewards.push(row);
        }
        Ok(Self {
            world,
            purpose: purpose.clone(),
            rewards,
            gamma,
        })
    }

    pub fn world(&self) -> &GridWorld {
        self.world
    }

    pub fn purpose(&self) -> &Eigenpurpose {
        &self.purpose
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward(&self, s: usize, a: Action) -> f64 {
        self.rewards[s][a.index()]
    }

    /// Exact value of a deterministic policy, from `(I − γ P_π) v = r_π`.
    pub fn evaluate(&self, policy: &[OptionAction]) -> Result<Vec<f64>, OptionsError> {
        let n = self.world.num_states();
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for s in 0..n {
            a[s * n + s] = 1.0;
            if let Some(m) = policy[s].primitive() {
                a[s * n + self.world.step(s, m)] -= self.gamma;
                b[s] = self.reward(s, m);
            }
        }
        let scale = b.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
        Ok(linalg::solve(&a, &b, 1e-12 * scale)?)
    }

    fn q_from_values(&self, v: &[f64]) -> QTable {
        let values = (0..self.world.num_states())
            .map(|s| {
                let mut row = [0.0; 5];
                for a in Action::ALL {
                    row[a.index()] = self.reward(s, a) + self.gamma * v[self.world.step(s, a)];
                }
                row
            })
            .collect();
        QTable { values }
    }
}

/// Action values over `up, down, right, left, ⊥`; the `⊥` column is always 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub values: Vec<[f64; 5]>,
}

impl QTable {
    pub fn get(&self, s: usize, a: OptionAction) -> f64 {
        self.values[s][a as usize]
    }

    /// Greedy choice: the first move (in action order) within [`TIE_TOL`] of
    /// the best move, unless that value is not positive, in which case `⊥`.
    pub fn greedy(&self, s: usize) -> OptionAction {
        let row = &self.values[s];
        let best = row[..4].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if best <= POSITIVE_TOL {
            return OptionAction::Terminate;
        }
        let i = row[..4].iter().position(|&q| q >= best - TIE_TOL).expect("max is attained");
        OptionAction::ALL[i]
    }

    /// Largest `|q(s,a) − (r + γ max(0, max_b q(s',b)))|` over all states and moves.
    pub fn bellman_residual(&self, m: &AugmentedMdp) -> (usize, f64) {
        let g = m.world();
        let value = |s: usize| self.values[s][..4].iter().copied().fold(0.0, f64::max);
        let mut worst = (0, 0.0);
        for s in 0..g.num_states() {
            for a in Action::ALL {
                let target = m.reward(s, a) + m.gamma() * value(g.step(s, a));
                let residual = (self.values[s][a.index()] - target).abs();
                if residual > worst.1 {
                    worst = (s, residual);
                }
            }
            if self.values[s][4] != 0.0 {
                worst = (s, f64::INFINITY);
            }
        }
        worst
    }
}

/// Policy iteration on the augmented MDP, starting from the all-`⊥` policy.
///
/// A state switches action only when the new action is better by more than
/// [`TIE_TOL`], so the sequence of policies strictly improves and stops.
pub fn solve_eigenbehavior(m: &AugmentedMdp, tol: f64) -> Result<QTable, OptionsError> {
    let n = m.world().num_states();
    let mut policy = vec![OptionAction::Terminate; n];
    // Each improvement strictly increases the value vector, so this cap is never reached.
    let cap = 100 * n.max(1);
    let mut rounds = 0;
    let q = loop {
        let v = m.evaluate(&policy)?;
        let q = m.q_from_values(&v);
        let mut changed = false;
        for (s, current) in policy.iter_mut().enumerate() {
            let row = &q.values[s];
            let (best_i, best) = row
                .iter()
                .copied()
                .enumerate()
                .fold((4, 0.0), |acc, (i, x)| if x > acc.1 + TIE_TOL { (i, x) } else { acc });
            if best > row[*current as usize] + TIE_TOL {
                *current = OptionAction::ALL[best_i];
                changed = true;
            }
        }
        if !changed {
            break q;
        }
        rounds += 1;
        if rounds > cap {
            return Err(OptionsError::NoConvergence(rounds));
        }
    };
    let (state, residual) = q.bellman_residual(m);
    if residual > tol {
        return Err(OptionsError::BellmanResidual { state, residual, tol });
    }
    Ok(q)
}

/// An option induced by an eigenpurpose, with the q table it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenoption {
    pub purpose: Eigenpurpose,
    pub gamma: f64,
    pub q: QTable,
    pub option: MarkovOption,
}

pub fn build_eigenoption(m: &AugmentedMdp, q: QTable) -> Result<Eigenoption, OptionsError> {
    let n = m.world().num_states();
    let policy: Vec<OptionAction> = (0..n).map(|s| q.greedy(s)).collect();
    let initiation: Vec<bool> = policy.iter().map(|&a| a != OptionAction::Terminate).collect();
    let termination: Vec<bool> = initiation.iter().map(|&i| !i).collect();
    let name = format!("eigenoption {}", m.purpose().label());
    if !termination.iter().any(|&t| t) {
        return Err(OptionsError::EmptyTermination(name));
    }
    Ok(Eigenoption {
        purpose: m.purpose().clone(),
        gamma: m.gamma(),
        q,
        option: MarkovOption {
            name,
            policy,
            initiation,
            termination,
        },
    })
}

/// Solve and build the eigenoption of one purpose.
pub fn eigenoption(world: &GridWorld, purpose: &Eigenpurpose, features: FeatureMap, gamma: f64) -> Result<Eigenoption, OptionsError> {
    let m = AugmentedMdp::new(world, purpose, features, gamma)?;
    let q = solve_eigenbehavior(&m, SOLVE_TOL)?;
    build_eigenoption(&m, q)
}

/// Eigenoptions for a list of purposes, in the same order.
pub fn eigenoptions_for(world: &GridWorld, purposes: &[Eigenpurpose], features: FeatureMap, gamma: f64) -> Result<Vec<Eigenoption>, OptionsError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        purposes.par_iter().map(|p| eigenoption(world, p, features, gamma)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        purposes.iter().map(|p| eigenoption(world, p, features, gamma)).collect()
    }
}

/// The `2k` eigenoptions of the `k` smallest-eigenvalue PVFs, in sign pairs.
pub fn discover(world: &GridWorld, kind: LaplacianKind, k: usize, gamma: f64) -> Result<Vec<Eigenoption>, OptionsError> {
    let purposes = spectral::pvf_sequence(world, kind, k)?;
    eigenoptions_for(world, &purposes, FeatureMap::TabularOneHot, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RolloutEnd {
    /// The policy chose `⊥` or entered the termination set.
    Terminated,
    /// Entered the externally supplied absorbing state.
    Absorbed,
    /// Hit the safety cap.
    Capped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionTrajectory {
    pub start: usize,
    pub visited: Vec<usize>,
    pub duration: usize,
    pub end: usize,
    pub outcome: RolloutEnd,
}

/// Default rollout cap: ten primitive steps per state.
pub fn default_cap(g: &GridWorld) -> usize {
    10 * g.num_states()
}

/// Executes `o` from `s` until it terminates, enters `absorb`, or takes `cap` steps.
pub fn option_trajectory(g: &GridWorld, o: &MarkovOption, s: usize, absorb: Option<usize>, cap: usize) -> Result<OptionTrajectory, OptionsError> {
    if !o.can_start(s) {
        return Err(OptionsError::NotInitiable(s));
    }
    let mut visited = vec![s];
    let mut cur = s;
    let outcome = loop {
        if visited.len() > 1 && o.termination[cur] {
            break RolloutEnd::Terminated;
        }
        let Some(a) = o.policy[cur].primitive() else {
            break RolloutEnd::Terminated;
        };
        if visited.len() > cap {
            break RolloutEnd::Capped;
        }
        cur = g.step(cur, a);
        visited.push(cur);
        if absorb == Some(cur) {
            break RolloutEnd::Absorbed;
        }
    };
    Ok(OptionTrajectory {
        start: s,
        duration: visited.len() - 1,
        end: cur,
        visited,
        outcome,
    })
}

/// Policy that follows a BFS shortest path to `target` (first action in order that decreases the distance).
fn shortest_path_policy(g: &GridWorld, target: usize) -> (Vec<OptionAction>, Vec<usize>) {
    let dist = g.bfs_distances(target);
    let policy = (0..g.num_states())
        .map(|s| {
            if s == target {
                return OptionAction::Terminate;
            }
            Action::ALL
                .into_iter()
                .find(|&a| dist[g.step(s, a)] + 1 == dist[s])
                .map_or(OptionAction::Terminate, OptionAction::from)
        })
        .collect();
    (policy, dist)
}

/// Option defined everywhere except `goal`, moving along a shortest path to `goal`.
pub fn random_subgoal_option(g: &GridWorld, goal: usize) -> MarkovOption {
    let (policy, _) = shortest_path_policy(g, goal);
    let n = g.num_states();
    MarkovOption {
        name: format!("subgoal {goal}"),
        policy,
        initiation: (0..n).map(|s| s != goal).collect(),
        termination: (0..n).map(|s| s == goal).collect(),
    }
}

/// `count` independent random orderings of all states, used as subgoal sequences.
pub fn random_subgoal_orderings(g: &GridWorld, count: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..count)
        .map(|i| {
            let mut order: Vec<usize> = (0..g.num_states()).collect();
            order.shuffle(&mut seeds::stream(seed, i as u64));
            order
        })
        .collect()
}

/// One option per room of a four-room map, each leading to one doorway.
///
/// Rooms are the components left after removing the four doorway cells. A
/// room's target is the adjacent doorway with the smallest mean BFS distance
/// from the room's cells; ties go to the doorway that comes first in
/// row-major order. The option is initiable only inside its room.
pub fn bottleneck_options(g: &GridWorld) -> Result<Vec<MarkovOption>, OptionsError> {
    let doors = g.doorways();
    if doors.len() != 4 {
        return Err(OptionsError::NotFourRoom(format!("found {} doorways", doors.len())));
    }
    let n = g.num_states();
    let mut room_of = vec![usize::MAX; n];
    let mut rooms: Vec<Vec<usize>> = Vec::new();
    for seed in 0..n {
        if room_of[seed] != usize::MAX || doors.contains(&seed) {
            continue;
        }
        let id = rooms.len();
        let mut cells = vec![seed];
        room_of[seed] = id;
        let mut i = 0;
        while i < cells.len() {
            let s = cells[i];
            for t in g.neighbors(s) {
                if room_of[t] == usize::MAX && !doors.contains(&t) {
                    room_of[t] = id;
                    cells.push(t);
                }
            }
            i += 1;
        }
        rooms.push(cells);
    }
    if rooms.len() != 4 {
        return Err(OptionsError::NotFourRoom(format!("found {} rooms", rooms.len())));
    }

    rooms
        .iter()
        .enumerate()
        .map(|(id, cells)| {
            let adjacent: Vec<usize> = doors
                .iter()
                .copied()
                .filter(|&d| g.neighbors(d).any(|t| room_of[t] == id))
                .collect();
            let mut best: Option<(usize, f64, Vec<OptionAction>)> = None;
            for &d in &adjacent {
                let (policy, dist) = shortest_path_policy(g, d);
                let mean = cells.iter().map(|&s| dist[s] as f64).sum::<f64>() / cells.len() as f64;
                if best.as_ref().is_none_or(|b| mean < b.1) {
                    best = Some((d, mean, policy));
                }
            }
            let (door, _, full) = best.ok_or_else(|| OptionsError::NotFourRoom(format!("room {id} has no doorway")))?;
            let initiation: Vec<bool> = (0..n).map(|s| room_of[s] == id).collect();
            let policy = (0..n)
                .map(|s| if initiation[s] { full[s] } else { OptionAction::Terminate })
                .collect();
            let (row, col) = g.cell(door);
            Ok(MarkovOption {
                name: format!("bottleneck room {id} -> ({row},{col})"),
                policy,
                initiation,
                termination: (0..n).map(|s| s == door).collect(),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct OptionRecord<'a> {
    name: &'a str,
    purpose_rank: Option<usize>,
    sign: Option<Sign>,
    eigenvalue: Option<Sig17>,
    gamma: Option<Sig17>,
    policy: &'a [OptionAction],
    initiation: Vec<usize>,
    termination: Vec<usize>,
    q: Option<Vec<[Sig17; 5]>>,
}

/// JSON `{purpose_rank, sign, gamma, policy[], initiation[], termination[], q[][]}`.
/// Fields that belong to eigenoptions are `null` for other options.
pub fn option_to_json(option: &MarkovOption, source: Option<&Eigenoption>) -> String {
    let record = OptionRecord {
        name: &option.name,
        purpose_rank: source.map(|e| e.purpose.rank),
        sign: source.map(|e| e.purpose.sign),
        eigenvalue: source.map(|e| Sig17(e.purpose.eigenvalue)),
        gamma: source.map(|e| Sig17(e.gamma)),
        policy: &option.policy,
        initiation: option.initiation_states(),
        termination: option.termination_states(),
        q: source.map(|e| e.q.values.iter().map(|row| row.map(Sig17)).collect()),
    };
    serde_json::to_string_pretty(&record).expect("option record serializes")
}

impl Eigenoption {
    pub fn to_json(&self) -> String {
        option_to_json(&self.option, Some(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{maps, parse_map};
    use crate::spectral::PurposeSource;

    fn purpose(v: Vec<f64>) -> Eigenpurpose {
        Eigenpurpose {
            vector: v,
            eigenvalue: 0.0,
            sign: Sign::Positive,
            source: PurposeSource::Laplacian,
            rank: 1,
        }
    }

    #[test]
    fn reward_examples() {
        let e = purpose(vec![0.0, 1.0]);
        assert_eq!(eigenpurpose_reward(&e, &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(eigenpurpose_reward(&e, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(eigenpurpose_reward(&e, &[0.0, 1.0], &[1.0, 0.0]).unwrap(), -1.0);
        assert_eq!(
            eigenpurpose_reward(&e, &[1.0], &[0.0, 1.0]),
            Err(OptionsError::DimensionMismatch { expected: 2, found: 1 })
        );
    }

    #[test]
    fn tabular_reward_is_entry_difference() {
        let g = maps::four_room();
        let p = &spectral::pvf_sequence(&g, LaplacianKind::Normalized, 3).unwrap()[4];
        let m = AugmentedMdp::new(&g, p, FeatureMap::TabularOneHot, 0.9).unwrap();
        for s in 0..g.num_states() {
            for a in Action::ALL {
                let t = g.step(s, a);
                assert_eq!(m.reward(s, a), p.vector[t] - p.vector[s]);
            }
        }
    }

    #[test]
    fn invalid_gamma() {
        let g = parse_map("..").unwrap();
        let p = purpose(vec![0.0, 1.0]);
        assert!(matches!(
            AugmentedMdp::new(&g, &p, FeatureMap::TabularOneHot, 1.0),
            Err(OptionsError::InvalidGamma(_))
        ));
    }

    #[test]
    fn constant_purpose_is_vacuous() {
        let g = maps::four_room();
        let purposes = spectral::pvf_sequence(&g, LaplacianKind::Combinatorial, 1).unwrap();
        for p in &purposes {
            let o = eigenoption(&g, p, FeatureMap::TabularOneHot, 0.9).unwrap();
            assert!(o.q.values.iter().all(|row| row.iter().all(|q| q.abs() <= POSITIVE_TOL)));
            assert!(o.option.initiation_states().is_empty());
            assert_eq!(o.option.termination_states().len(), g.num_states());
            assert!(o.option.policy.iter().all(|&a| a == OptionAction::Terminate));
        }
    }

    #[test]
    fn corridor_option_moves_to_high_end() {
        let g = parse_map("...").unwrap();
        // Second PVF of the 1×3 path, up to sign: (1, 0, -1)/√2. Use the increasing orientation.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let o = eigenoption(&g, &purpose(vec![-r, 0.0, r]), FeatureMap::TabularOneHot, 0.9).unwrap();
        assert_eq!(o.option.policy, vec![OptionAction::Right, OptionAction::Right, OptionAction::Terminate]);
        let t = option_trajectory(&g, &o.option, 0, None, default_cap(&g)).unwrap();
        assert_eq!((t.duration, t.end, t.outcome), (2, 2, RolloutEnd::Terminated));
        assert_eq!(t.visited, vec![0, 1, 2]);
    }

    #[test]
    fn rollout_from_termination_state_is_rejected() {
        let g = parse_map("...").unwrap();
        let o = random_subgoal_option(&g, 1);
        assert_eq!(option_trajectory(&g, &o, 1, None, 10), Err(OptionsError::NotInitiable(1)));
    }

    #[test]
    fn rollout_stops_at_absorbing_state_and_cap() {
        let g = parse_map(".....").unwrap();
        let o = random_subgoal_option(&g, 4);
        let t = option_trajectory(&g, &o, 0, Some(2), 100).unwrap();
        assert_eq!((t.end, t.duration, t.outcome), (2, 2, RolloutEnd::Absorbed));
        let t = option_trajectory(&g, &o, 0, None, 3).unwrap();
        assert_eq!((t.end, t.duration, t.outcome), (3, 3, RolloutEnd::Capped));
    }

    #[test]
    fn second_pvf_terminates_at_its_extremes() {
        let g = maps::four_room();
        let purposes = spectral::pvf_sequence(&g, LaplacianKind::Normalized, 2).unwrap();
        let argmax = |v: &[f64]| (0..v.len()).max_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap();
        for p in &purposes[2..4] {
            let o = eigenoption(&g, p, FeatureMap::TabularOneHot, 0.9).unwrap();
            assert!(o.option.termination[argmax(&p.vector)], "{} misses its argmax", p.label());
        }
        // The negated purpose terminates at the argmin of the original.
        let argmin = |v: &[f64]| (0..v.len()).min_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap();
        let o = eigenoption(&g, &purposes[3], FeatureMap::TabularOneHot, 0.9).unwrap();
        assert!(o.option.termination[argmin(&purposes[2].vector)]);
    }

    #[test]
    fn random_subgoal_follows_shortest_paths() {
        let g = maps::four_room();
        let goal = g.goal().unwrap();
        let o = random_subgoal_option(&g, goal);
        let dist = g.bfs_distances(goal);
        for s in 0..g.num_states() {
            if s == goal {
                assert!(!o.can_start(s));
                continue;
            }
            let t = option_trajectory(&g, &o, s, None, default_cap(&g)).unwrap();
            assert_eq!(t.duration, dist[s]);
            assert_eq!(t.end, goal);
        }
        let next_to_goal = g.neighbors(goal).next().unwrap();
        let a = o.policy[next_to_goal].primitive().unwrap();
        assert_eq!(g.step(next_to_goal, a), goal);
    }

    #[test]
    fn bottleneck_options_on_four_room() {
        let g = maps::four_room();
        let opts = bottleneck_options(&g).unwrap();
        assert_eq!(opts.len(), 4);
        let doors = g.doorways();
        for o in &opts {
            let term = o.termination_states();
            assert_eq!(term.len(), 1);
            assert!(doors.contains(&term[0]));
            for s in 0..g.num_states() {
                if !o.can_start(s) {
                    assert!(option_trajectory(&g, o, s, None, 10).is_err());
                    continue;
                }
                let t = option_trajectory(&g, o, s, None, default_cap(&g)).unwrap();
                assert_eq!(t.end, term[0]);
                assert_eq!(t.outcome, RolloutEnd::Terminated);
                if g.neighbors(s).any(|x| x == term[0]) {
                    assert_eq!(t.duration, 1);
                }
            }
        }
        let initiable: usize = opts.iter().map(|o| o.initiation_states().len()).sum();
        assert_eq!(initiable, g.num_states() - 4);
    }

    #[test]
    fn bottleneck_rejects_other_maps() {
        assert!(matches!(bottleneck_options(&maps::open_grid()), Err(OptionsError::NotFourRoom(_))));
    }

    #[test]
    fn orderings_are_permutations() {
        let g = maps::four_room();
        let orders = random_subgoal_orderings(&g, 3, 5);
        assert_eq!(orders, random_subgoal_orderings(&g, 3, 5));
        for o in &orders {
            let mut sorted = o.clone();
            sorted.sort();
            assert_eq!(sorted, (0..g.num_states()).collect::<Vec<_>>());
        }
        assert_ne!(orders[0], orders[1]);
    }

    #[test]
    fn json_and_rendering() {
        let g = parse_map("...").unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let o = eigenoption(&g, &purpose(vec![-r, 0.0, r]), FeatureMap::TabularOneHot, 0.9).unwrap();
        assert_eq!(o.option.render(&g), ">>T\n");
        let v: serde_json::Value = serde_json::from_str(&o.to_json()).unwrap();
        assert_eq!(v["policy"], serde_json::json!(["right", "right", "terminate"]));
        assert_eq!(v["initiation"], serde_json::json!([0, 1]));
        assert_eq!(v["termination"], serde_json::json!([2]));
        assert_eq!(v["q"].as_array().unwrap().len(), 3);
    }
}
