//! Exhaustive eigenbehavior oracle over every small connected map.
//!
//! The optimal value is the pointwise maximum over every deterministic policy
//! on {up, down, right, left, terminate}, each evaluated exactly by path
//! following with closed-form cycle sums. No linear solver is involved.

#![allow(dead_code)]

use std::collections::HashSet;

use eigenoptions::env::{parse_map, Action, FeatureMap, GridWorld};
use eigenoptions::options::{solve_eigenbehavior, AugmentedMdp, OptionAction, SOLVE_TOL};
use eigenoptions::spectral::{pvf_sequence, Eigenpurpose, LaplacianKind, PurposeSource, Sign};
use rand::{Rng, SeedableRng};

pub type Cells = Vec<(i32, i32)>;

fn normalize(cells: &[(i32, i32)]) -> Cells {
    let r0 = cells.iter().map(|c| c.0).min().unwrap();
    let c0 = cells.iter().map(|c| c.1).min().unwrap();
    let mut out: Cells = cells.iter().map(|&(r, c)| (r - r0, c - c0)).collect();
    out.sort_unstable();
    out
}

/// Smallest of the eight rotations/reflections.
fn canonical(cells: &[(i32, i32)]) -> Cells {
    let maps: [fn((i32, i32)) -> (i32, i32); 8] = [
        |(r, c)| (r, c),
        |(r, c)| (c, -r),
        |(r, c)| (-r, -c),
        |(r, c)| (-c, r),
        |(r, c)| (r, -c),
        |(r, c)| (-r, c),
        |(r, c)| (c, r),
        |(r, c)| (-c, -r),
    ];
    maps.iter()
        .map(|f| normalize(&cells.iter().map(|&x| f(x)).collect::<Vec<_>>()))
        .min()
        .unwrap()
}

/// All free polyominoes with 1..=max cells.
pub fn polyominoes(max: usize) -> Vec<Cells> {
    let mut all = vec![];
    let mut layer: HashSet<Cells> = HashSet::from([vec![(0, 0)]]);
    for _ in 1..=max {
        all.extend(layer.iter().cloned());
        let mut next = HashSet::new();
        for p in &layer {
            for &(r, c) in p {
                for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                    let cell = (r + dr, c + dc);
                    if !p.contains(&cell) {
                        let mut q = p.clone();
                        q.push(cell);
                        next.insert(canonical(&q));
                    }
                }
            }
        }
        layer = next;
    }
    all.sort();
    all
}

pub fn to_world(cells: &[(i32, i32)]) -> GridWorld {
    let h = cells.iter().map(|c| c.0).max().unwrap() + 1;
    let w = cells.iter().map(|c| c.1).max().unwrap() + 1;
    let text: String = (0..h)
        .map(|r| {
            let mut line: String = (0..w).map(|c| if cells.contains(&(r, c)) { '.' } else { 'X' }).collect();
            line.push('\n');
            line
        })
        .collect();
    parse_map(&text).unwrap()
}

const MAX: usize = 8;

/// Pointwise maximum of the value over every deterministic policy.
pub fn brute_force_values(succ: &[[usize; 4]], reward: &[[f64; 4]], gamma: f64) -> Vec<f64> {
    let n = succ.len();
    assert!(n <= MAX);
    let mut best = [f64::NEG_INFINITY; MAX];
    let mut choice = [0u8; MAX];
    let mut v = [0.0_f64; MAX];
    // 0: unseen, 1: on the current path, 2: evaluated.
    let mut mark: [u8; MAX];
    let mut pos = [0usize; MAX];
    let mut path = [0usize; MAX];
    loop {
        mark = [0; MAX];
        for s0 in 0..n {
            if mark[s0] == 2 {
                continue;
            }
            let mut len = 0;
            let mut s = s0;
            loop {
                if choice[s] == 4 {
                    v[s] = 0.0;
                    mark[s] = 2;
                    break;
                }
                if mark[s] == 2 {
                    break;
                }
                if mark[s] == 1 {
                    // Closed cycle starting at s.
                    let at = pos[s];
                    let (mut sum, mut disc) = (0.0_f64, 1.0_f64);
                    for &c in &path[at..len] {
                        sum += disc * reward[c][choice[c] as usize];
                        disc *= gamma;
                    }
                    v[s] = sum / (1.0 - disc);
                    mark[s] = 2;
                    for &c in path[at + 1..len].iter().rev() {
                        let a = choice[c] as usize;
                        v[c] = reward[c][a] + gamma * v[succ[c][a]];
                        mark[c] = 2;
                    }
                    len = at;
                    break;
                }
                mark[s] = 1;
                pos[s] = len;
                path[len] = s;
                len += 1;
                s = succ[s][choice[s] as usize];
            }
            for &p in path[..len].iter().rev() {
                let a = choice[p] as usize;
                v[p] = reward[p][a] + gamma * v[succ[p][a]];
                mark[p] = 2;
            }
        }
        for s in 0..n {
            best[s] = best[s].max(v[s]);
        }
        // Odometer over 5^n policies.
        let mut i = 0;
        while i < n {
            choice[i] += 1;
            if choice[i] < 5 {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == n {
            return best[..n].to_vec();
        }
    }
}

pub fn purposes(g: &GridWorld, seed: u64) -> Vec<Eigenpurpose> {
    let n = g.num_states();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let random = Eigenpurpose {
        vector: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        eigenvalue: 0.0,
        sign: Sign::Positive,
        source: PurposeSource::Laplacian,
        rank: 0,
    };
    if n < 2 {
        return vec![random];
    }
    let seq = pvf_sequence(g, LaplacianKind::Normalized, n).unwrap();
    if n == MAX {
        return vec![seq[2].clone(), seq[3].clone(), random];
    }
    vec![seq[2].clone(), seq[3].clone(), seq[2 * n - 2].clone(), random]
}

/// Largest |q − q*| over all states and moves.
pub fn check(g: &GridWorld, e: &Eigenpurpose, gamma: f64) -> f64 {
    let n = g.num_states();
    let succ: Vec<[usize; 4]> = (0..n).map(|s| Action::ALL.map(|a| g.step(s, a))).collect();
    let reward: Vec<[f64; 4]> = (0..n).map(|s| Action::ALL.map(|a| e.vector[g.step(s, a)] - e.vector[s])).collect();
    let v = brute_force_values(&succ, &reward, gamma);
    let m = AugmentedMdp::new(g, e, FeatureMap::TabularOneHot, gamma).unwrap();
    let q = solve_eigenbehavior(&m, SOLVE_TOL).unwrap();
    let mut worst = 0.0_f64;
    for s in 0..n {
        for a in Action::ALL {
            let expected = reward[s][a.index()] + gamma * v[succ[s][a.index()]];
            worst = worst.max((q.get(s, OptionAction::from(a)) - expected).abs());
        }
        assert_eq!(q.get(s, OptionAction::Terminate), 0.0);
    }
    worst
}

