//! Domain types for the adversarial decision-fusion model.

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::fusion::derive_delta;

/// A candidate or true system trajectory over the observation window:
/// bit `j` is the system state at time slot `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSequence {
    bits: BitVec,
}

impl StateSequence {
    pub fn zeros(t: usize) -> Self {
        StateSequence {
            bits: BitVec::zeros(t),
        }
    }

    /// Sequence from the low `t` bits of `word`; bit `j` of `word` is slot `j`.
    pub fn from_word(t: usize, word: u64) -> Self {
        StateSequence {
            bits: BitVec::from_word(t, word),
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        StateSequence {
            bits: BitVec::from_bits(bits),
        }
    }

    pub fn from_str01(s: &str) -> Self {
        StateSequence {
            bits: BitVec::from_str01(s),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, j: usize) -> bool {
        self.bits.get(j)
    }

    pub fn bits(&self) -> &BitVec {
        &self.bits
    }

    pub fn complement(&self) -> Self {
        StateSequence {
            bits: self.bits.complement(),
        }
    }

    /// Number of slots where the two sequences disagree.
    pub fn hamming(&self, other: &StateSequence) -> Result<u32> {
        self.bits.hamming(&other.bits)
    }

    /// The sequence as the low `T` bits of a word (slot 0 least significant).
    pub fn as_word(&self) -> u64 {
        self.bits.word0()
    }
}

impl std::fmt::Display for StateSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.bits.fmt(f)
    }
}

/// Per-node honest/Byzantine indicator: bit `i` = 1 means node `i` is Byzantine.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeStateVector {
    bits: BitVec,
}

impl NodeStateVector {
    pub fn zeros(n: usize) -> Self {
        NodeStateVector {
            bits: BitVec::zeros(n),
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        NodeStateVector {
            bits: BitVec::from_bits(bits),
        }
    }

    pub fn from_word(n: usize, word: u64) -> Self {
        NodeStateVector {
            bits: BitVec::from_word(n, word),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// True when node `i` is Byzantine.
    pub fn is_byzantine(&self, i: usize) -> bool {
        self.bits.get(i)
    }

    pub fn bits(&self) -> &BitVec {
        &self.bits
    }

    pub fn count_byzantine(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn set(&mut self, i: usize, byzantine: bool) {
        self.bits.set(i, byzantine)
    }
}

impl std::fmt::Display for NodeStateVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.bits.fmt(f)
    }
}

/// The n x T matrix of reports received by the fusion center; row `i`, bit `j`
/// is the report of node `i` for time slot `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportMatrix {
    n: usize,
    t: usize,
    rows: Vec<BitVec>,
}

impl ReportMatrix {
    pub fn new(rows: Vec<BitVec>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "report matrix rows",
                expected: 1,
                actual: 0,
            });
        }
        let t = rows[0].len();
        if t == 0 {
            return Err(Error::DimensionMismatch {
                what: "report matrix columns",
                expected: 1,
                actual: 0,
            });
        }
        for row in &rows {
            if row.len() != t {
                return Err(Error::LengthMismatch {
                    left: t,
                    right: row.len(),
                });
            }
        }
        Ok(ReportMatrix {
            n: rows.len(),
            t,
            rows,
        })
    }

    /// Build from one word per row; bit `j` of `words[i]` is report r_ij.
    pub fn from_words(t: usize, words: &[u64]) -> Result<Self> {
        let rows = words.iter().map(|&w| BitVec::from_word(t, w)).collect();
        ReportMatrix::new(rows)
    }

    /// Build from '0'/'1' strings, one per node.
    pub fn from_strs(rows: &[&str]) -> Result<Self> {
        ReportMatrix::new(rows.iter().map(|s| BitVec::from_str01(s)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    /// Report r_ij as a bool.
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    /// Matrix with every report flipped.
    pub fn complement(&self) -> ReportMatrix {
        ReportMatrix {
            n: self.n,
            t: self.t,
            rows: self.rows.iter().map(|r| r.complement()).collect(),
        }
    }

    /// Matrix with rows reordered by `perm` (row `i` of the result is row
    /// `perm[i]` of `self`).
    pub fn permute_rows(&self, perm: &[usize]) -> ReportMatrix {
        assert_eq!(perm.len(), self.n);
        ReportMatrix {
            n: self.n,
            t: self.t,
            rows: perm.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// The two binary-symmetric-channel crossover probabilities of the report
/// model: honest nodes report wrongly with probability epsilon, Byzantine
/// nodes with probability delta = epsilon(1-P_mal) + (1-epsilon)P_mal.
/// delta is always derived, never set independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    epsilon: f64,
    p_mal: f64,
    delta: f64,
}

impl ChannelParams {
    pub fn new(epsilon: f64, p_mal: f64) -> Result<Self> {
        let delta = derive_delta(epsilon, p_mal)?;
        Ok(ChannelParams {
            epsilon,
            p_mal,
            delta,
        })
    }

    /// Same local error probability, different flipping probability
    /// (delta re-derived).
    pub fn with_p_mal(&self, p_mal: f64) -> Result<Self> {
        ChannelParams::new(self.epsilon, p_mal)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn p_mal(&self) -> f64 {
        self.p_mal
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// An explicit prior over node-state vectors: a normalized probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitPrior {
    n: usize,
    entries: Vec<(NodeStateVector, f64)>,
}

impl ExplicitPrior {
    pub fn new(entries: Vec<(NodeStateVector, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyPrior);
        }
        let n = entries[0].0.len();
        let mut sum = 0.0;
        for (vec, p) in &entries {
            if vec.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: vec.len(),
                });
            }
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::Domain {
                    name: "prior probability",
                    value: *p,
                    range: "[0, 1]",
                });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::PriorNotNormalized { sum });
        }
        Ok(ExplicitPrior { n, entries })
    }

    /// Point mass on a single node-state vector.
    pub fn point_mass(vec: NodeStateVector) -> Self {
        ExplicitPrior {
            n: vec.len(),
            entries: vec![(vec, 1.0)],
        }
    }

    /// The table encoding of independent Bernoulli(alpha) node states over
    /// all 2^n vectors. Intended for cross-checking the factorized rule.
    pub fn bernoulli_table(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::Domain {
                name: "n",
                value: n as f64,
                range: "[1, 20] for table expansion",
            });
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain {
                name: "alpha",
                value: alpha,
                range: "[0, 1]",
            });
        }
        let mut entries = Vec::with_capacity(1 << n);
        for code in 0u64..(1 << n) {
            let ones = code.count_ones();
            let p = alpha.powi(ones as i32) * (1.0 - alpha).powi((n as u32 - ones) as i32);
            entries.push((NodeStateVector::from_word(n, code), p));
        }
        // Normalization holds to rounding; rescale so the invariant is exact.
        let sum: f64 = entries.iter().map(|(_, p)| *p).sum();
        for (_, p) in &mut entries {
            *p /= sum;
        }
        ExplicitPrior::new(entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(NodeStateVector, f64)] {
        &self.entries
    }
}

/// Prior knowledge about the distribution of Byzantine nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorModel {
    /// Each node is Byzantine independently with probability alpha.
    Independent { alpha: f64 },
    /// Exactly k nodes are Byzantine, uniformly over all k-subsets.
    FixedCount { k: usize },
    /// Arbitrary probability table.
    Explicit(ExplicitPrior),
}

impl PriorModel {
    /// Validate the prior against a network of `n` nodes.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        match self {
            PriorModel::Independent { alpha } => {
                if !(0.0..=1.0).contains(alpha) || !alpha.is_finite() {
                    return Err(Error::Domain {
                        name: "alpha",
                        value: *alpha,
                        range: "[0, 1]",
                    });
                }
            }
            PriorModel::FixedCount { k } => {
                if *k > n {
                    return Err(Error::KOutOfRange { k: *k, n });
                }
            }
            PriorModel::Explicit(prior) => {
                if prior.n() != n {
                    return Err(Error::DimensionMismatch {
                        what: "explicit prior vector length",
                        expected: n,
                        actual: prior.n(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Which Bayesian fusion rule to apply.
#[derive(Debug, Clone, PartialEq)]
pub enum FusionRule {
    /// General rule for an arbitrary explicit prior over node states.
    General(ExplicitPrior),
    /// Factorized rule for independent Bernoulli(alpha) node states.
    Independent { alpha: f64 },
    /// Rule for a known fixed number of Byzantine nodes.
    FixedK { k: usize },
}

/// The outcome of exact fusion: the maximizing sequence, its log-domain
/// score, and how many sequences tied for the maximum within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionDecision {
    /// The argmax sequence after deterministic tie-breaking (lexicographic
    /// smallest, slot 0 most significant).
    pub sequence: StateSequence,
    /// Log-domain value of the maximized objective (constant factors that do
    /// not depend on the sequence are dropped; scores are comparable only
    /// within one rule).
    pub score: f64,
    /// Number of sequences within 1e-9 of the maximum score.
    pub tie_count: u64,
}
