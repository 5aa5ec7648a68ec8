//! Deterministic generator of the synthetic relevance dataset, with CSV
//! persistence.
//!
//! Each sample draws one scalar feature per node; the central node gets the
//! minimum of the drawn values so that every neighbor difference `x_j - x_0`
//! is nonnegative. The ground-truth relevant neighbor maximizes
//! `sin(x_j - x_0)` and the regression target is `y_0 = x_r - x_0`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graphs::Graph;
use crate::{Error, Result};

/// Minimum relevance gap between best and runner-up neighbor; samples below
/// it are redrawn so the argmax is unique.
pub const RELEVANCE_GAP: f64 = 1e-6;
const RETRY_LIMIT: usize = 1000;

/// Default sample count per split.
pub const DEFAULT_M: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Value range [0, pi/2]; relevance strictly monotonic; d' = 1.
    I,
    /// Value range [0, pi]; relevance parabolic; d' = 2.
    II,
}

impl ExperimentKind {
    pub fn value_range(self) -> (f64, f64) {
        match self {
            ExperimentKind::I => (0.0, 0.5 * PI),
            ExperimentKind::II => (0.0, PI),
        }
    }

    pub fn latent_dim(self) -> usize {
        match self {
            ExperimentKind::I => 1,
            ExperimentKind::II => 2,
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" => Ok(ExperimentKind::I),
            "II" | "ii" | "2" => Ok(ExperimentKind::II),
            other => Err(Error::invalid(format!("unknown experiment kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExperimentKind::I => write!(f, "I"),
            ExperimentKind::II => write!(f, "II"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub m_train: usize,
    pub m_test: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        ExperimentSpec { kind, m_train: DEFAULT_M, m_test: DEFAULT_M, seed }
    }

    pub fn with_sizes(mut self, m_train: usize, m_test: usize) -> Self {
        self.m_train = m_train;
        self.m_test = m_test;
        self
    }
}

/// One generated sample. Only the central node carries a target; the stored
/// one-hot ground-truth attention is derived from `r_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Per-node scalar features; `x[0]` is the central node.
    pub x: Vec<f64>,
    /// Index of the ground-truth relevant neighbor (>= 1 on the star).
    pub r_index: usize,
    /// Regression target for the central node, `x[r_index] - x[0]`.
    pub y0: f64,
}

impl Sample {
    /// One-hot ground-truth attention row over all nodes; position 0 (the
    /// query node) is 0.
    pub fn alpha_true(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.x.len()];
        a[self.r_index] = 1.0;
        a
    }
}

/// Simulated relevance of node `j` for node `i`: `sin(x_j - x_i)`.
pub fn relevance(x_i: f64, x_j: f64) -> f64 {
    (x_j - x_i).sin()
}

/// Generate `m` samples for the given experiment on `graph`. The central node
/// (index 0) is assigned the minimum of the drawn features; the remaining
/// values keep their draw order.
pub fn generate(spec: &ExperimentSpec, graph: &Graph, m: usize, seed: u64) -> Result<Vec<Sample>> {
    let n = graph.node_count();
    let (lo, hi) = spec.kind.value_range();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(m);

    let neighbors: Vec<usize> = graph
        .neighbors(0)
        .iter()
        .copied()
        .filter(|&j| j != 0)
        .collect();
    if neighbors.is_empty() {
        return Err(Error::invalid("central node has no neighbors"));
    }

    for _ in 0..m {
        let mut accepted = None;
        for _ in 0..RETRY_LIMIT {
            let mut draws: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
            let min_idx = draws
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            draws.swap(0, min_idx);

            let x0 = draws[0];
            let mut best: Option<(usize, f64)> = None;
            let mut second = f64::NEG_INFINITY;
            for &j in &neighbors {
                let r = relevance(x0, draws[j]);
                match best {
                    Some((_, br)) if r > br => {
                        second = br;
                        best = Some((j, r));
                    }
                    Some((_, br)) => second = second.max(r.min(br)),
                    None => best = Some((j, r)),
                }
            }
            let (r_index, best_rel) = best.unwrap();
            if neighbors.len() == 1 || best_rel - second >= RELEVANCE_GAP {
                accepted = Some(Sample { y0: draws[r_index] - x0, x: draws, r_index });
                break;
            }
        }
        match accepted {
            Some(s) => samples.push(s),
            None => {
                return Err(Error::Generation(format!(
                    "no unique argmax after {RETRY_LIMIT} redraws"
                )))
            }
        }
    }
    Ok(samples)
}

/// Derived seed for the test split so train and test draws never overlap.
pub fn test_split_seed(seed: u64) -> u64 {
    seed.wrapping_add(1_000_000_007)
}

/// Generate the train and test splits of an experiment.
pub fn generate_splits(spec: &ExperimentSpec, graph: &Graph) -> Result<(Vec<Sample>, Vec<Sample>)> {
    let train = generate(spec, graph, spec.m_train, spec.seed)?;
    let test = generate(spec, graph, spec.m_test, test_split_seed(spec.seed))?;
    Ok((train, test))
}

fn fmt_f64(v: f64) -> String {
    // 17 significant digits round-trips f64 exactly
    format!("{v:.16e}")
}

/// Serialize samples to the dataset CSV: header then one row
/// `m,x_0,...,x_{n-1},r_index,y_0` per sample, LF line endings.
pub fn to_csv(samples: &[Sample]) -> String {
    let n = samples.first().map_or(0, |s| s.x.len());
    let mut out = String::new();
    out.push('m');
    for i in 0..n {
        let _ = write!(out, ",x_{i}");
    }
    out.push_str(",r_index,y_0\n");
    for (m, s) in samples.iter().enumerate() {
        let _ = write!(out, "{m}");
        for &x in &s.x {
            let _ = write!(out, ",{}", fmt_f64(x));
        }
        let _ = write!(out, ",{},{}\n", s.r_index, fmt_f64(s.y0));
    }
    out
}

pub fn save(samples: &[Sample], path: &Path) -> Result<()> {
    std::fs::write(path, to_csv(samples))?;
    Ok(())
}

pub fn from_csv(text: &str) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Ok(samples);
    };
    let cols = header.split(',').count();
    if cols < 4 {
        return Err(Error::Parse { line: 1, msg: format!("expected >= 4 columns, got {cols}") });
    }
    let n = cols - 3;
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {cols} columns, got {}", fields.len()),
            });
        }
        let parse = |f: &str| -> Result<f64> {
            f.parse::<f64>().map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })
        };
        let x: Vec<f64> = fields[1..1 + n].iter().map(|f| parse(f)).collect::<Result<_>>()?;
        let r_index: usize = fields[1 + n]
            .parse()
            .map_err(|e: std::num::ParseIntError| Error::Parse { line: lineno, msg: e.to_string() })?;
        let y0 = parse(fields[2 + n])?;
        samples.push(Sample { x, r_index, y0 });
    }
    Ok(samples)
}

pub fn load(path: &Path) -> Result<Vec<Sample>> {
    let text = std::fs::read_to_string(path)?;
    from_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::star_graph;

    #[test]
    fn relevance_examples() {
        assert!((relevance(0.0, PI / 2.0) - 1.0).abs() < 1e-15);
        assert!((relevance(0.1, 1.4) - 1.3f64.sin()).abs() < 1e-15);
        assert_eq!(relevance(0.7, 0.7), 0.0);
    }

    #[test]
    fn hand_picked_relevance_selection_experiment_i() {
        // x = (0.1, 0.9, 1.4): relevances sin(0.8) ~ 0.717, sin(1.3) ~ 0.964
        let x0 = 0.1;
        let r1 = relevance(x0, 0.9);
        let r2 = relevance(x0, 1.4);
        assert!(r2 > r1);
        assert!((r1 - 0.8f64.sin()).abs() < 1e-15);
        assert!((1.4 - x0 - 1.3).abs() < 1e-12);
    }

    #[test]
    fn hand_picked_relevance_selection_experiment_ii() {
        // x = (0.2, 1.77, 3.0): sin(1.57) ~ 1.000 beats sin(2.8) ~ 0.335
        let x0 = 0.2;
        assert!(relevance(x0, 1.77) > relevance(x0, 3.0));
        assert!((1.77 - x0 - 1.57).abs() < 1e-12);
    }

    #[test]
    fn generated_samples_satisfy_constraints() {
        let g = star_graph(3).unwrap();
        let spec = ExperimentSpec::new(ExperimentKind::II, 0);
        let samples = generate(&spec, &g, 500, 42).unwrap();
        assert_eq!(samples.len(), 500);
        let (lo, hi) = ExperimentKind::II.value_range();
        for s in &samples {
            assert!(s.x.iter().all(|&x| (lo..=hi).contains(&x)));
            // central node holds the minimum, so y0 >= 0
            for j in 1..s.x.len() {
                assert!(s.x[j] - s.x[0] >= 0.0);
            }
            assert!(s.y0 >= 0.0);
            assert!((s.y0 - (s.x[s.r_index] - s.x[0])).abs() < 1e-15);
            let a = s.alpha_true();
            assert_eq!(a.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(a[0], 0.0);
        }
    }

    #[test]
    fn brute_force_argmax_agrees() {
        let g = star_graph(3).unwrap();
        for kind in [ExperimentKind::I, ExperimentKind::II] {
            let spec = ExperimentSpec::new(kind, 0);
            let samples = generate(&spec, &g, 1000, 7).unwrap();
            for s in &samples {
                let brute = (1..s.x.len())
                    .max_by(|&a, &b| {
                        relevance(s.x[0], s.x[a])
                            .partial_cmp(&relevance(s.x[0], s.x[b]))
                            .unwrap()
                    })
                    .unwrap();
                assert_eq!(s.r_index, brute);
                if kind == ExperimentKind::I {
                    // monotonic relevance: argmax of x_j
                    let argmax_x = (1..s.x.len())
                        .max_by(|&a, &b| s.x[a].partial_cmp(&s.x[b]).unwrap())
                        .unwrap();
                    assert_eq!(s.r_index, argmax_x);
                }
            }
        }
    }

    #[test]
    fn single_neighbor_star_always_selects_it() {
        let g = star_graph(2).unwrap();
        let spec = ExperimentSpec::new(ExperimentKind::I, 0);
        let samples = generate(&spec, &g, 100, 3).unwrap();
        for s in &samples {
            assert_eq!(s.r_index, 1);
            assert!((s.y0 - (s.x[1] - s.x[0])).abs() < 1e-15);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let g = star_graph(3).unwrap();
        let spec = ExperimentSpec::new(ExperimentKind::I, 0);
        let a = generate(&spec, &g, 200, 9).unwrap();
        let b = generate(&spec, &g, 200, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let g = star_graph(3).unwrap();
        let spec = ExperimentSpec::new(ExperimentKind::II, 0);
        let samples = generate(&spec, &g, 300, 5).unwrap();
        let csv = to_csv(&samples);
        let back = from_csv(&csv).unwrap();
        assert_eq!(samples.len(), back.len());
        for (a, b) in samples.iter().zip(&back) {
            assert_eq!(a.r_index, b.r_index);
            assert_eq!(a.y0.to_bits(), b.y0.to_bits());
            for (x, y) in a.x.iter().zip(&b.x) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        // and the re-serialization is byte-identical
        assert_eq!(csv, to_csv(&back));
    }

    #[test]
    fn malformed_row_names_line() {
        let text = "m,x_0,x_1,x_2,r_index,y_0\n0,1.0,2.0\n";
        match from_csv(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(from_csv("").unwrap().is_empty());
        assert!(from_csv("m,x_0,x_1,x_2,r_index,y_0\n").unwrap().is_empty());
    }
}
