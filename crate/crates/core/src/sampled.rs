//! Option discovery from sampled transitions.
//!
//! Each new transition contributes the row `φ(s') − φ(s)` to the incidence
//! matrix `T`. The right singular vectors of `T`, obtained here as the
//! eigenvectors of `TᵀT`, serve as eigenpurposes. With one-hot features and
//! every transition sampled once, `TᵀT = 2 (D − A)`.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::env::{Action, FeatureMap, GridWorld};
use crate::io::fmt17;
use crate::options::OptionAction;
use crate::seeds;
use crate::spectral::{eig_sym, Eigenpurpose, PurposeSource, SpectralError, SymmetricMatrix, EIG_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampledError {
    #[error("incidence matrix has no rows")]
    Empty,
    #[error("requested {k} purposes but the feature dimension is {dim}")]
    CountOutOfRange { k: usize, dim: usize },
    #[error("dimension mismatch: incidence matrix has {found} columns, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("incidence CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Deduplicated transition differences.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    feature_dim: usize,
    rows: Vec<Vec<f64>>,
    seen: HashSet<Vec<u64>>,
    seed: Option<u64>,
}

fn row_key(row: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same difference.
    row.iter().map(|&x| if x == 0.0 { 0 } else { x.to_bits() }).collect()
}

impl IncidenceMatrix {
    pub fn new(feature_dim: usize) -> Self {
        Self {
            feature_dim,
            rows: Vec::new(),
            seen: HashSet::new(),
            seed: None,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Adds `φ(s') − φ(s)` unless it is all zeros or already present.
    pub fn add_transition(&mut self, phi_s: &[f64], phi_next: &[f64]) -> bool {
        let diff: Vec<f64> = phi_next.iter().zip(phi_s).map(|(b, a)| b - a).collect();
        self.add_row(diff)
    }

    /// Adds a difference row unless it is all zeros or already present.
    pub fn add_row(&mut self, row: Vec<f64>) -> bool {
        assert_eq!(row.len(), self.feature_dim, "row dimension");
        if row.iter().all(|&x| x == 0.0) || !self.seen.insert(row_key(&row)) {
            return false;
        }
        self.rows.push(row);
        true
    }

    /// Appends a row without deduplication. Only useful for negative controls.
    pub fn push_duplicate_unchecked(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.feature_dim, "row dimension");
        self.rows.push(row);
    }

    /// Sorts rows lexicographically so the matrix no longer depends on insertion order.
    pub fn canonicalize(&mut self) {
        self.rows.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    /// Union of two matrices over the same features, in canonical order.
    pub fn merge(mut self, other: &IncidenceMatrix) -> Result<Self, SampledError> {
        if other.feature_dim != self.feature_dim {
            return Err(SampledError::DimensionMismatch {
                expected: self.feature_dim,
                found: other.feature_dim,
            });
        }
        for row in &other.rows {
            self.add_row(row.clone());
        }
        self.canonicalize();
        Ok(self)
    }

    /// Keeps at most `max_rows` rows drawn uniformly without replacement.
    pub fn subsample(&self, max_rows: usize, seed: u64) -> Self {
        if self.rows.len() <= max_rows {
            return self.clone();
        }
        let mut rng = seeds::stream(seed, 0);
        let mut picked = rand::seq::index::sample(&mut rng, self.rows.len(), max_rows).into_vec();
        picked.sort_unstable();
        let mut out = Self::new(self.feature_dim);
        out.seed = Some(seed);
        for i in picked {
            out.add_row(self.rows[i].clone());
        }
        out
    }

    /// `TᵀT`.
    pub fn gram(&self) -> SymmetricMatrix {
        let d = self.feature_dim;
        let mut acc = vec![0.0; d * d];
        for row in &self.rows {
            let nz: Vec<(usize, f64)> = row.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect();
            for &(i, x) in &nz {
                for &(j, y) in &nz {
                    acc[i * d + j] += x * y;
                }
            }
        }
        let mut m = SymmetricMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                m.set(i, j, acc[i * d + j]);
            }
        }
        m
    }

    /// CSV: a header `feature_dim=<d>,seed=<seed|none>`, then one row per difference.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        writeln!(out, "feature_dim={},seed={seed}", self.feature_dim).expect("write to string");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Reads [`IncidenceMatrix::to_csv`] output. Rows are kept verbatim,
    /// duplicates included, so a corrupted file stays detectable.
    pub fn from_csv(text: &str) -> Result<Self, SampledError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(SampledError::Csv {
            line: 1,
            message: "missing header".into(),
        })?;
        let bad_header = || SampledError::Csv {
            line: 1,
            message: format!("expected feature_dim=<n>,seed=<n|none>, found {header:?}"),
        };
        let (dim_part, seed_part) = header.trim().split_once(',').ok_or_else(bad_header)?;
        let feature_dim: usize = dim_part
            .strip_prefix("feature_dim=")
            .and_then(|d| d.parse().ok())
            .ok_or_else(bad_header)?;
        let seed = match seed_part.strip_prefix("seed=").ok_or_else(bad_header)? {
            "none" => None,
            s => Some(s.parse().map_err(|_| bad_header())?),
        };
        let mut m = Self::new(feature_dim);
        m.seed = seed;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| SampledError::Csv {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if row.len() != feature_dim {
                return Err(SampledError::Csv {
                    line: i + 1,
                    message: format!("expected {feature_dim} values, found {}", row.len()),
                });
            }
            m.seen.insert(row_key(&row));
            m.rows.push(row);
        }
        Ok(m)
    }
}

/// Random-walk sampling: a uniformly drawn start, then `budget` uniformly random primitive moves.
pub fn collect_transitions(g: &GridWorld, f: FeatureMap, budget: usize, seed: u64) -> IncidenceMatrix {
    let mut rng = seeds::stream(seed, 0);
    let mut t = IncidenceMatrix::new(f.dim(g));
    t.seed = Some(seed);
    let mut s = rng.gen_range(0..g.num_states());
    let mut phi = f.features(g, s);
    for _ in 0..budget {
        let a = Action::ALL[rng.gen_range(0..4)];
        let next = g.step(s, a);
        let phi_next = f.features(g, next);
        t.add_transition(&phi, &phi_next);
        s = next;
        phi = phi_next;
    }
    t
}

/// Every `(s, a)` with `step(s, a) != s`, each contributing once.
pub fn collect_exhaustive(g: &GridWorld, f: FeatureMap) -> IncidenceMatrix {
    let mut t = IncidenceMatrix::new(f.dim(g));
    let phi: Vec<Vec<f64>> = (0..g.num_states()).map(|s| f.features(g, s)).collect();
    for s in 0..g.num_states() {
        for a in Action::ALL {
            let next = g.step(s, a);
            if next != s {
                t.add_transition(&phi[s], &phi[next]);
            }
        }
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularOrder {
    #[default]
    Ascending,
    Descending,
}

/// Right singular vectors of `T`, both signs, ordered by singular value.
pub fn svd_eigenpurposes(t: &IncidenceMatrix, k: usize, order: SingularOrder) -> Result<Vec<Eigenpurpose>, SampledError> {
    if t.is_empty() {
        return Err(SampledError::Empty);
    }
    let dim = t.feature_dim();
    if k == 0 || k > dim {
        return Err(SampledError::CountOutOfRange { k, dim });
    }
    let eig = eig_sym(&t.gram(), EIG_TOL * t.len().max(1) as f64)?;
    let mut idx: Vec<usize> = (0..dim).collect();
    if order == SingularOrder::Descending {
        idx.reverse();
    }
    Ok(idx
        .into_iter()
        .take(k)
        .enumerate()
        .flat_map(|(rank, i)| {
            let sigma = eig.values[i].max(0.0).sqrt();
            Eigenpurpose::pair(&eig.vectors[i], sigma, PurposeSource::Svd, rank + 1)
        })
        .collect())
}

/// `‖TᵀT − 2L‖∞` (largest absolute entry) for a combinatorial Laplacian `L`.
pub fn verify_incidence_gram(t: &IncidenceMatrix, l: &SymmetricMatrix) -> Result<f64, SampledError> {
    if t.feature_dim() != l.dim() {
        return Err(SampledError::DimensionMismatch {
            expected: l.dim(),
            found: t.feature_dim(),
        });
    }
    Ok(t.gram().max_abs_diff(&l.scaled(2.0)))
}

/// One-step (γ = 0) greedy option action: the move with the largest intrinsic
/// reward, or `⊥` when no move has positive reward.
pub fn greedy_option_action(g: &GridWorld, f: FeatureMap, e: &Eigenpurpose, s: usize) -> OptionAction {
    let phi = f.features(g, s);
    let score = |a: Action| -> f64 {
        let next = f.features(g, g.step(s, a));
        e.vector.iter().zip(next.iter().zip(&phi)).map(|(w, (b, a))| w * (b - a)).sum()
    };
    let mut best: Option<(Action, f64)> = None;
    for a in Action::ALL {
        let r = score(a);
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((a, r));
        }
    }
    match best {
        Some((a, r)) if r > 0.0 => a.into(),
        _ => OptionAction::Terminate,
    }
}

/// Runs the greedy option from `s` until it picks `⊥` or `cap` steps pass. Returns visited states.
pub fn greedy_rollout(g: &GridWorld, f: FeatureMap, e: &Eigenpurpose, s: usize, cap: usize) -> Vec<usize> {
    let mut visited = vec![s];
    let mut cur = s;
    while visited.len() <= cap {
        match greedy_option_action(g, f, e, cur).primitive() {
            Some(a) => {
                cur = g.step(cur, a);
                visited.push(cur);
            }
            None => break,
        }
    }
    visited
}
