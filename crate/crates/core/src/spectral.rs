//! Graph Laplacians of a gridworld and their ascending eigendecomposition.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::GridWorld;
use crate::io::Sig17;

/// Eigenvalues closer than this are treated as one degenerate group.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Default residual tolerance for [`eig_sym`].
pub const EIG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("node {0} has zero degree")]
    ZeroDegree(usize),
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("eigenpair {index} residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { index: usize, residual: f64, tol: f64 },
    #[error("requested {k} eigenvectors but the matrix has dimension {n}")]
    CountOutOfRange { k: usize, n: usize },
}

/// Dense symmetric matrix. Writes go through [`SymmetricMatrix::set`], which
/// stores both triangles, so the storage is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from rows, symmetrizing from the upper triangle.
    pub fn from_upper(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, rows[i][j]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Whether wall bumps contribute self-loops to the adjacency matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfLoops {
    #[default]
    Exclude,
    Include,
}

/// Unweighted adjacency of the state-transition graph (no self-loops).
pub fn build_graph(g: &GridWorld) -> SymmetricMatrix {
    build_graph_with(g, SelfLoops::Exclude)
}

pub fn build_graph_with(g: &GridWorld, loops: SelfLoops) -> SymmetricMatrix {
    let n = g.num_states();
    let mut a = SymmetricMatrix::zeros(n);
    for s in 0..n {
        for t in g.neighbors(s) {
            a.set(s, t, 1.0);
        }
        if loops == SelfLoops::Include && g.degree(s) < 4 {
            a.set(s, s, 1.0);
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianKind {
    Combinatorial,
    #[default]
    Normalized,
}

impl std::str::FromStr for LaplacianKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "combinatorial" => Ok(Self::Combinatorial),
            "normalized" => Ok(Self::Normalized),
            other => Err(format!("unknown Laplacian kind {other:?}")),
        }
    }
}

pub fn degrees(a: &SymmetricMatrix) -> Vec<f64> {
    (0..a.dim()).map(|i| a.row(i).iter().sum()).collect()
}

/// `D - A`, or `D^{-1/2} (D - A) D^{-1/2}` for the normalized kind.
pub fn laplacian(a: &SymmetricMatrix, kind: LaplacianKind) -> Result<SymmetricMatrix, SpectralError> {
    let n = a.dim();
    let deg = degrees(a);
    if let Some(i) = deg.iter().position(|&d| d <= 0.0) {
        return Err(SpectralError::ZeroDegree(i));
    }
    let mut l = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let combinatorial = if i == j { deg[i] - a.get(i, i) } else { -a.get(i, j) };
            let value = match kind {
                LaplacianKind::Combinatorial => combinatorial,
                LaplacianKind::Normalized => combinatorial / (deg[i].sqrt() * deg[j].sqrt()),
            };
            l.set(i, j, value);
        }
    }
    Ok(l)
}

/// Ascending eigenvalues with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    /// Index ranges of eigenvalue groups whose neighbours differ by at most [`DEGENERACY_TOL`].
    pub fn groups(&self) -> Vec<std::ops::Range<usize>> {
        degenerate_groups(&self.values)
    }
}

fn degenerate_groups(values: &[f64]) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut begin = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > DEGENERACY_TOL {
            groups.push(begin..i);
            begin = i;
        }
    }
    groups
}

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
///
/// Output is deterministic: eigenvalues ascend, each eigenvector's first
/// component above 1e-12 in magnitude is positive, and vectors inside a
/// degenerate group are ordered lexicographically (largest first). Every
/// returned pair satisfies `‖M v − λ v‖∞ ≤ tol`.
pub fn eig_sym(m: &SymmetricMatrix, tol: f64) -> Result<EigenDecomposition, SpectralError> {
    let n = m.dim();
    let mut a = m.data.clone();
    let mut v = SymmetricMatrix::identity(n).data;
    let scale = m.frobenius().max(f64::MIN_POSITIVE);
    let max_sweeps = 100 * n.max(1);

    let off_norm = |a: &[f64]| -> f64 {
        let mut sum = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                sum += a[p * n + q] * a[p * n + q];
            }
        }
        (2.0 * sum).sqrt()
    };

    let mut sweeps = 0;
    let mut previous = f64::INFINITY;
    loop {
        let off = off_norm(&a);
        // Stop at round-off level, or when a sweep no longer shrinks a tiny remainder.
        if off <= 1e-14 * scale || (off >= previous && off <= 1e-10 * scale) {
            break;
        }
        previous = off;
        if sweeps == max_sweeps {
            return Err(SpectralError::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| {
            let mut col: Vec<f64> = (0..n).map(|k| v[k * n + j]).collect();
            normalize_sign(&mut col);
            (a[j * n + j], col)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    for group in degenerate_groups(&values) {
        pairs[group].sort_by(|x, y| lexicographic(&y.1, &x.1));
    }
    let (values, vectors): (Vec<f64>, Vec<Vec<f64>>) = pairs.into_iter().unzip();

    for (index, (lambda, vec)) in values.iter().zip(&vectors).enumerate() {
        let residual = m
            .mul_vec(vec)
            .iter()
            .zip(vec)
            .map(|(mv, x)| (mv - lambda * x).abs())
            .fold(0.0, f64::max);
        if residual > tol {
            return Err(SpectralError::Residual { index, residual, tol });
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

fn normalize_sign(v: &mut [f64]) {
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PurposeSource {
    Laplacian,
    Svd,
}

/// A unit vector whose inner product with feature differences is an intrinsic reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpurpose {
    pub vector: Vec<f64>,
    /// Laplacian eigenvalue, or singular value for [`PurposeSource::Svd`].
    pub eigenvalue: f64,
    pub sign: Sign,
    pub source: PurposeSource,
    /// 1-based position in the ascending order.
    pub rank: usize,
}

impl Eigenpurpose {
    /// `+v` then `-v` for one eigenvector.
    pub fn pair(vector: &[f64], eigenvalue: f64, source: PurposeSource, rank: usize) -> [Eigenpurpose; 2] {
        [Sign::Positive, Sign::Negative].map(|sign| Eigenpurpose {
            vector: vector.iter().map(|x| sign.factor() * x).collect(),
            eigenvalue,
            sign,
            source,
            rank,
        })
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.rank, self.sign)
    }
}

/// The `k` smallest-eigenvalue PVFs of `g`, each emitted with both signs:
/// rank 1 +, rank 1 −, rank 2 +, ...
pub fn pvf_sequence(g: &GridWorld, kind: LaplacianKind, k: usize) -> Result<Vec<Eigenpurpose>, SpectralError> {
    let n = g.num_states();
    if k == 0 || k > n {
        return Err(SpectralError::CountOutOfRange { k, n });
    }
    let l = laplacian(&build_graph(g), kind)?;
    let eig = eig_sym(&l, EIG_TOL)?;
    Ok(eig
        .values
        .iter()
        .zip(&eig.vectors)
        .take(k)
        .enumerate()
        .flat_map(|(i, (&lambda, v))| Eigenpurpose::pair(v, lambda, PurposeSource::Laplacian, i + 1))
        .collect())
}

#[derive(Serialize)]
struct PurposeRecord {
    rank: usize,
    eigenvalue: Sig17,
    sign: Sign,
    source: PurposeSource,
    vector: Vec<Sig17>,
}

/// JSON array of `{rank, eigenvalue, sign, source, vector}` with 17 significant digits.
pub fn purposes_to_json(purposes: &[Eigenpurpose]) -> String {
    let records: Vec<PurposeRecord> = purposes
        .iter()
        .map(|p| PurposeRecord {
            rank: p.rank,
            eigenvalue: Sig17(p.eigenvalue),
            sign: p.sign,
            source: p.source,
            vector: p.vector.iter().copied().map(Sig17).collect(),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("purpose records serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{maps, parse_map};

    fn path2() -> SymmetricMatrix {
        SymmetricMatrix::from_upper(&[vec![0.0, 1.0], vec![1.0, 0.0]])
    }

    #[test]
    fn corridor_graphs() {
        let g = parse_map("..").unwrap();
        assert_eq!(build_graph(&g), path2());
        let g = parse_map("...").unwrap();
        assert_eq!(degrees(&build_graph(&g)), vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn self_loop_flag_adds_diagonal() {
        let g = parse_map("...").unwrap();
        let a = build_graph_with(&g, SelfLoops::Include);
        assert!((0..3).all(|i| a.get(i, i) == 1.0));
        assert!((0..3).all(|i| build_graph(&g).get(i, i) == 0.0));
    }

    #[test]
    fn two_path_laplacians() {
        let expected = SymmetricMatrix::from_upper(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert_eq!(laplacian(&path2(), LaplacianKind::Combinatorial).unwrap(), expected);
        assert_eq!(laplacian(&path2(), LaplacianKind::Normalized).unwrap(), expected);
    }

    #[test]
    fn combinatorial_rows_sum_to_zero() {
        let l = laplacian(&build_graph(&maps::four_room()), LaplacianKind::Combinatorial).unwrap();
        for i in 0..l.dim() {
            assert_eq!(l.row(i).iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn zero_degree_rejected() {
        let a = SymmetricMatrix::zeros(2);
        assert_eq!(laplacian(&a, LaplacianKind::Normalized), Err(SpectralError::ZeroDegree(0)));
    }

    #[test]
    fn two_path_spectrum() {
        let l = laplacian(&path2(), LaplacianKind::Combinatorial).unwrap();
        let eig = eig_sym(&l, EIG_TOL).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(eig.values[0].abs() < 1e-15);
        assert!((eig.values[1] - 2.0).abs() < 1e-15);
        for (x, y) in eig.vectors[0].iter().zip([r, r]) {
            assert!((x - y).abs() < 1e-15);
        }
        for (x, y) in eig.vectors[1].iter().zip([r, -r]) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_spectrum() {
        let eig = eig_sym(&SymmetricMatrix::identity(5), EIG_TOL).unwrap();
        assert!(eig.values.iter().all(|&l| l == 1.0));
        assert_eq!(eig.groups(), vec![0..5]);
    }

    #[test]
    fn orthonormal_and_deterministic_on_shipped_maps() {
        for (_, text) in maps::all() {
            let g = parse_map(text).unwrap();
            for kind in [LaplacianKind::Combinatorial, LaplacianKind::Normalized] {
                let l = laplacian(&build_graph(&g), kind).unwrap();
                let eig = eig_sym(&l, EIG_TOL).unwrap();
                assert!(eig.values[0].abs() < 1e-9);
                assert!(eig.values[1] > 1e-9, "connected graph has a simple zero eigenvalue");
                for i in 0..eig.vectors.len() {
                    for j in 0..=i {
                        let dot: f64 = eig.vectors[i].iter().zip(&eig.vectors[j]).map(|(a, b)| a * b).sum();
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((dot - expect).abs() <= 1e-9);
                    }
                }
                assert_eq!(eig, eig_sym(&l, EIG_TOL).unwrap());
            }
        }
    }

    #[test]
    fn pvf_sequence_shape() {
        let g = maps::four_room();
        assert_eq!(
            pvf_sequence(&g, LaplacianKind::Normalized, 0),
            Err(SpectralError::CountOutOfRange { k: 0, n: 104 })
        );
        assert!(pvf_sequence(&g, LaplacianKind::Normalized, 105).is_err());
        let seq = pvf_sequence(&g, LaplacianKind::Normalized, 3).unwrap();
        assert_eq!(seq.len(), 6);
        for pair in seq.chunks(2) {
            assert_eq!(pair[0].rank, pair[1].rank);
            assert_eq!(pair[0].sign, Sign::Positive);
            assert_eq!(pair[1].sign, Sign::Negative);
            assert!(pair[0].vector.iter().zip(&pair[1].vector).all(|(a, b)| *a == -*b));
            let norm: f64 = pair[0].vector.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn first_combinatorial_pvf_is_constant() {
        let g = maps::imaze();
        let seq = pvf_sequence(&g, LaplacianKind::Combinatorial, 1).unwrap();
        let c = 1.0 / (g.num_states() as f64).sqrt();
        assert!(seq[0].vector.iter().all(|x| (x - c).abs() < 1e-12));
        assert!(seq[1].vector.iter().all(|x| (x + c).abs() < 1e-12));
    }

    #[test]
    fn json_export_uses_17_significant_digits() {
        let g = parse_map("..").unwrap();
        let json = purposes_to_json(&pvf_sequence(&g, LaplacianKind::Combinatorial, 1).unwrap());
        assert!(json.contains("7.0710678118654746e-1") || json.contains("7.0710678118654757e-1"));
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.as_array().unwrap().len(), 2);
        assert_eq!(parsed[1]["sign"], "-");
    }
}
