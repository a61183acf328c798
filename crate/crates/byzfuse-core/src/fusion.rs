//! Optimum Bayesian fusion rules for report matrices with Byzantine rows.
//!
//! Honest nodes relay their local decision, so their reports follow a binary
//! symmetric channel with crossover epsilon; Byzantine nodes flip the local
//! decision with probability P_mal, giving an effective crossover delta.
//! Given a candidate state sequence, the likelihood of node i's row depends
//! only on the number of slots where it matches the candidate, so every rule
//! here reduces to table lookups over the per-node match count.
//!
//! Scores are log-domain and drop all factors constant in the candidate
//! sequence (the uniform sequence prior, the 1/C(n,k) subset prior), so they
//! are comparable only within one rule.

use rand::Rng;

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::numeric::{ln_pow, log_sum_exp};
use crate::types::{
    ChannelParams, ExplicitPrior, FusionDecision, FusionRule, ReportMatrix, StateSequence,
};

/// Exhaustive enumeration over 2^T candidate sequences caps the window here.
pub const MAX_FUSE_T: usize = 30;

/// Absolute log-score tolerance within which candidate sequences tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Probability that a Byzantine node's report differs from the true state:
/// delta = epsilon(1 - P_mal) + (1 - epsilon)P_mal.
pub fn derive_delta(epsilon: f64, p_mal: f64) -> Result<f64> {
    if !epsilon.is_finite() || !(0.0..0.5).contains(&epsilon) {
        return Err(Error::Domain {
            name: "epsilon",
            value: epsilon,
            range: "[0, 0.5)",
        });
    }
    if !p_mal.is_finite() || !(0.0..=1.0).contains(&p_mal) {
        return Err(Error::Domain {
            name: "p_mal",
            value: p_mal,
            range: "[0, 1]",
        });
    }
    Ok(epsilon * (1.0 - p_mal) + (1.0 - epsilon) * p_mal)
}

/// Number of slots where a report row agrees with a candidate sequence,
/// i.e. T minus the popcount of their XOR.
pub fn count_matches(row: &BitVec, s: &StateSequence) -> Result<u32> {
    let d = row.hamming(s.bits())?;
    Ok(row.len() as u32 - d)
}

/// Log-likelihood of a single node's row under a BSC with crossover `p`,
/// given `n_eq` matching slots out of `t`:
/// n_eq*ln(1-p) + (t-n_eq)*ln(p), with 0*ln(0) = 0.
///
/// Panics if `n_eq > t` or `p` is outside [0, 1].
pub fn node_log_likelihood(n_eq: u32, t: u32, p: f64) -> f64 {
    assert!(n_eq <= t, "n_eq = {n_eq} exceeds t = {t}");
    assert!(
        p.is_finite() && (0.0..=1.0).contains(&p),
        "p = {p} outside [0, 1]"
    );
    ln_pow(1.0 - p, n_eq) + ln_pow(p, t - n_eq)
}

/// Per-match-count log-likelihood tables for one window length and channel.
#[derive(Debug, Clone)]
pub(crate) struct NodeTables {
    /// log_honest[m] for m matching slots out of t.
    log_honest: Vec<f64>,
    /// log_byz[m] for m matching slots out of t.
    log_byz: Vec<f64>,
}

impl NodeTables {
    fn new(t: usize, ch: &ChannelParams) -> Self {
        let t32 = t as u32;
        let log_honest = (0..=t32)
            .map(|m| node_log_likelihood(m, t32, ch.epsilon()))
            .collect();
        let log_byz = (0..=t32)
            .map(|m| node_log_likelihood(m, t32, ch.delta()))
            .collect();
        NodeTables {
            log_honest,
            log_byz,
        }
    }
}

/// A fusion rule lowered to lookup tables for a fixed (T, channel) pair.
#[derive(Debug, Clone)]
pub(crate) enum Scorer {
    /// w[m] = log[(1-a) (1-eps)^m eps^(T-m) + a (1-delta)^m delta^(T-m)].
    Independent { w: Vec<f64> },
    /// Factors for the k-subset sum, max-normalized per match count so the
    /// symmetric-polynomial DP can run in linear space with an exponent
    /// carried separately.
    FixedK {
        k: usize,
        honest: Vec<f64>,
        byz: Vec<f64>,
        log_norm: Vec<f64>,
        /// max_m |lh[m] - lb[m]| over finite pairs: bounds the worst-case
        /// per-node magnitude drop of the DP state.
        max_log_ratio: f64,
    },
    /// Explicit prior: per-entry log-probability plus both channel tables.
    General {
        log_prior: Vec<f64>,
        assignments: Vec<BitVec>,
        tables: NodeTables,
    },
}

impl Scorer {
    pub(crate) fn new(rule: &FusionRule, t: usize, ch: &ChannelParams) -> Result<Self> {
        let tables = NodeTables::new(t, ch);
        match rule {
            FusionRule::Independent { alpha } => {
                if !alpha.is_finite() || !(0.0..=1.0).contains(alpha) {
                    return Err(Error::Domain {
                        name: "alpha",
                        value: *alpha,
                        range: "[0, 1]",
                    });
                }
                let la = ln_pow(*alpha, 1);
                let l1a = ln_pow(1.0 - *alpha, 1);
                let w = (0..=t)
                    .map(|m| log_sum_exp(l1a + tables.log_honest[m], la + tables.log_byz[m]))
                    .collect();
                Ok(Scorer::Independent { w })
            }
            FusionRule::FixedK { k } => {
                let mut honest = Vec::with_capacity(t + 1);
                let mut byz = Vec::with_capacity(t + 1);
                let mut log_norm = Vec::with_capacity(t + 1);
                let mut max_log_ratio = 0.0f64;
                for m in 0..=t {
                    let lh = tables.log_honest[m];
                    let lb = tables.log_byz[m];
                    let norm = lh.max(lb);
                    if norm == f64::NEG_INFINITY {
                        // Both channels assign this match count probability
                        // zero; the node annihilates every subset product.
                        honest.push(0.0);
                        byz.push(0.0);
                        log_norm.push(0.0);
                    } else {
                        honest.push((lh - norm).exp());
                        byz.push((lb - norm).exp());
                        log_norm.push(norm);
                        if lh.is_finite() && lb.is_finite() {
                            max_log_ratio = max_log_ratio.max((lh - lb).abs());
                        }
                    }
                }
                Ok(Scorer::FixedK {
                    k: *k,
                    honest,
                    byz,
                    log_norm,
                    max_log_ratio,
                })
            }
            FusionRule::General(prior) => {
                let log_prior = prior.entries().iter().map(|(_, p)| ln_pow(*p, 1)).collect();
                let assignments = prior
                    .entries()
                    .iter()
                    .map(|(a, _)| a.bits().clone())
                    .collect();
                Ok(Scorer::General {
                    log_prior,
                    assignments,
                    tables,
                })
            }
        }
    }

    /// Nodes this scorer requires (General priors pin n; others accept any).
    fn check_n(&self, n: usize) -> Result<()> {
        match self {
            Scorer::FixedK { k, .. } => {
                if *k > n {
                    return Err(Error::KOutOfRange { k: *k, n });
                }
            }
            Scorer::General { assignments, .. } => {
                if let Some(a) = assignments.first() {
                    if a.len() != n {
                        return Err(Error::DimensionMismatch {
                            what: "prior node-state vector length",
                            expected: n,
                            actual: a.len(),
                        });
                    }
                }
            }
            Scorer::Independent { .. } => {}
        }
        Ok(())
    }

    /// Score from the histogram of per-node match counts (counts[m] = number
    /// of nodes matching the candidate in exactly m slots). Processing nodes
    /// grouped by ascending match count makes the result exactly invariant
    /// under row permutations.
    pub(crate) fn score_counts(&self, counts: &[u32], g: &mut [f64]) -> f64 {
        match self {
            Scorer::Independent { w } => {
                let mut sum = 0.0;
                for (m, &c) in counts.iter().enumerate() {
                    if c != 0 {
                        sum += f64::from(c) * w[m];
                    }
                }
                sum
            }
            Scorer::FixedK {
                k,
                honest,
                byz,
                log_norm,
                ..
            } => subset_sum_scaled(*k, honest, byz, log_norm, counts, g),
            Scorer::General { .. } => {
                unreachable!("general rule scores from per-node match counts")
            }
        }
    }

    /// Score from the per-node match count vector (required by the general
    /// rule, whose prior is not exchangeable).
    fn score_match_vec(
        &self,
        match_counts: &[u32],
        counts_scratch: &mut [u32],
        g: &mut [f64],
    ) -> f64 {
        match self {
            Scorer::General {
                log_prior,
                assignments,
                tables,
            } => {
                let mut acc = f64::NEG_INFINITY;
                for (lp, a) in log_prior.iter().zip(assignments) {
                    let mut term = *lp;
                    for (i, &m) in match_counts.iter().enumerate() {
                        term += if a.get(i) {
                            tables.log_byz[m as usize]
                        } else {
                            tables.log_honest[m as usize]
                        };
                    }
                    acc = log_sum_exp(acc, term);
                }
                acc
            }
            _ => {
                counts_scratch.fill(0);
                for &m in match_counts {
                    counts_scratch[m as usize] += 1;
                }
                self.score_counts(counts_scratch, g)
            }
        }
    }

    fn k(&self) -> usize {
        match self {
            Scorer::FixedK { k, .. } => *k,
            _ => 0,
        }
    }
}

/// k-th elementary-symmetric-style subset sum over per-node (honest, byz)
/// factor pairs, O(n*k) instead of O(n choose k):
///
///   g_j <- g_j * H_i + g_{j-1} * B_i
///
/// accumulates, over all j-subsets I of the processed nodes, the sum of
/// prod_{i in I} B_i * prod_{i not in I} H_i. Factors arrive max-normalized
/// per match count with their log-normalizers summed into `log_scale`, and
/// the vector is renormalized whenever it drifts toward the underflow floor,
/// so the result is exact in log magnitude for any window length. Exact
/// zero factors absorb naturally (no NaN from degenerate probabilities).
fn subset_sum_scaled(
    k: usize,
    honest: &[f64],
    byz: &[f64],
    log_norm: &[f64],
    counts: &[u32],
    g: &mut [f64],
) -> f64 {
    debug_assert!(g.len() > k);
    g[..=k].fill(0.0);
    g[0] = 1.0;
    let mut log_scale = 0.0f64;
    let mut processed = 0usize;
    for (m, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let h = honest[m];
        let b = byz[m];
        let ln = log_norm[m];
        for _ in 0..c {
            processed += 1;
            let hi = processed.min(k);
            for j in (1..=hi).rev() {
                g[j] = g[j] * h + g[j - 1] * b;
            }
            g[0] *= h;
            log_scale += ln;
            let mut gmax = 0.0f64;
            for &x in g[..=hi].iter() {
                if x > gmax {
                    gmax = x;
                }
            }
            if gmax == 0.0 {
                return f64::NEG_INFINITY;
            }
            if gmax < 1e-120 {
                log_scale += gmax.ln();
                let inv = 1.0 / gmax;
                for x in g[..=hi].iter_mut() {
                    *x *= inv;
                }
            }
        }
    }
    log_scale + g[k].ln()
}

/// Borrowed view of the fixed-k scorer's normalized factor tables.
#[derive(Clone, Copy)]
struct FixedKFactors<'a> {
    honest: &'a [f64],
    byz: &'a [f64],
    log_norm: &'a [f64],
}

/// Same subset-sum DP, processing packed rows in matrix order against a
/// candidate code; the fuse hot path uses this to skip histogram building.
///
/// `bail_below`: the normalized factors are all <= 1, so `log_scale` only
/// decreases and the final score is at most `log_scale + ln C(n,k)`; once
/// `log_scale` sinks below this threshold the sequence cannot tie the
/// current maximum and -inf is returned immediately.
#[inline]
fn subset_sum_rows(
    k: usize,
    f: FixedKFactors<'_>,
    rows: &[u64],
    v: u64,
    t32: u32,
    g: &mut [f64],
    bail_below: f64,
) -> f64 {
    g[..=k].fill(0.0);
    g[0] = 1.0;
    let mut log_scale = 0.0f64;
    let mut processed = 0usize;
    for &row in rows {
        let m = (t32 - (row ^ v).count_ones()) as usize;
        let h = f.honest[m];
        let b = f.byz[m];
        processed += 1;
        let hi = processed.min(k);
        for j in (1..=hi).rev() {
            g[j] = g[j] * h + g[j - 1] * b;
        }
        g[0] *= h;
        log_scale += f.log_norm[m];
        if log_scale < bail_below {
            return f64::NEG_INFINITY;
        }
        let mut gmax = 0.0f64;
        for &x in g[..=hi].iter() {
            if x > gmax {
                gmax = x;
            }
        }
        if gmax == 0.0 {
            return f64::NEG_INFINITY;
        }
        if gmax < 1e-120 {
            log_scale += gmax.ln();
            let inv = 1.0 / gmax;
            for x in g[..=hi].iter_mut() {
                *x *= inv;
            }
        }
    }
    log_scale + g[k].ln()
}

/// Unguarded variant: no underflow checks. Sound whenever the cumulative
/// worst-case magnitude drop (n * max|lh-lb|) stays far above the f64
/// underflow floor; exact zero factors still absorb and end in -inf.
#[inline]
fn subset_sum_rows_unguarded(
    k: usize,
    f: FixedKFactors<'_>,
    rows: &[u64],
    v: u64,
    t32: u32,
    g: &mut [f64],
    bail_below: f64,
) -> f64 {
    g[..=k].fill(0.0);
    g[0] = 1.0;
    let mut log_scale = 0.0f64;
    let mut processed = 0usize;
    for &row in rows {
        let m = (t32 - (row ^ v).count_ones()) as usize;
        let h = f.honest[m];
        let b = f.byz[m];
        processed += 1;
        let hi = processed.min(k);
        for j in (1..=hi).rev() {
            g[j] = g[j] * h + g[j - 1] * b;
        }
        g[0] *= h;
        log_scale += f.log_norm[m];
        if log_scale < bail_below {
            return f64::NEG_INFINITY;
        }
    }
    log_scale + g[k].ln()
}

/// ln C(n, k), summed in log space.
fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| (((n - i) as f64) / ((i + 1) as f64)).ln())
        .sum()
}

fn counts_from_rows(r: &ReportMatrix, s: &StateSequence) -> Result<Vec<u32>> {
    if s.len() != r.t() {
        return Err(Error::DimensionMismatch {
            what: "state sequence length",
            expected: r.t(),
            actual: s.len(),
        });
    }
    let mut counts = vec![0u32; r.t() + 1];
    for row in r.rows() {
        counts[count_matches(row, s)? as usize] += 1;
    }
    Ok(counts)
}

/// Log-likelihood score of a candidate sequence under the general rule for
/// an arbitrary explicit prior over node-state vectors, evaluated with
/// log-sum-exp over the prior entries.
pub fn score_general(
    r: &ReportMatrix,
    s: &StateSequence,
    prior: &ExplicitPrior,
    ch: &ChannelParams,
) -> Result<f64> {
    if prior.n() != r.n() {
        return Err(Error::DimensionMismatch {
            what: "explicit prior vector length",
            expected: r.n(),
            actual: prior.n(),
        });
    }
    if s.len() != r.t() {
        return Err(Error::DimensionMismatch {
            what: "state sequence length",
            expected: r.t(),
            actual: s.len(),
        });
    }
    let scorer = Scorer::new(&FusionRule::General(prior.clone()), r.t(), ch)?;
    let match_counts: Vec<u32> = r
        .rows()
        .iter()
        .map(|row| count_matches(row, s))
        .collect::<Result<_>>()?;
    let mut counts_scratch = vec![0u32; r.t() + 1];
    let mut g = vec![0.0f64; 1];
    Ok(scorer.score_match_vec(&match_counts, &mut counts_scratch, &mut g))
}

/// Log-likelihood score of a candidate sequence when node states are
/// independent Bernoulli(alpha): sum over nodes of the log of the two-term
/// honest/Byzantine mixture.
pub fn score_independent(
    r: &ReportMatrix,
    s: &StateSequence,
    alpha: f64,
    ch: &ChannelParams,
) -> Result<f64> {
    let scorer = Scorer::new(&FusionRule::Independent { alpha }, r.t(), ch)?;
    let counts = counts_from_rows(r, s)?;
    let mut g = vec![0.0f64; 1];
    Ok(scorer.score_counts(&counts, &mut g))
}

/// Log-likelihood score of a candidate sequence when exactly k nodes are
/// Byzantine, via the O(n*k) subset-sum DP. The constant 1/C(n,k) prior
/// factor is omitted (argmax-invariant).
pub fn score_fixed_k(
    r: &ReportMatrix,
    s: &StateSequence,
    k: usize,
    ch: &ChannelParams,
) -> Result<f64> {
    if k > r.n() {
        return Err(Error::KOutOfRange { k, n: r.n() });
    }
    let scorer = Scorer::new(&FusionRule::FixedK { k }, r.t(), ch)?;
    let counts = counts_from_rows(r, s)?;
    let mut g = vec![0.0f64; k + 1];
    Ok(scorer.score_counts(&counts, &mut g))
}

/// Reusable scratch space for the exhaustive argmax.
#[derive(Debug, Default)]
pub(crate) struct FuseWorkspace {
    counts: Vec<u32>,
    match_counts: Vec<u32>,
    g: Vec<f64>,
    near_max: Vec<(u32, f64)>,
}

/// Cap on tracked near-maximum candidates before falling back to a second
/// counting pass (hit only in fully degenerate all-tie instances).
const TRACK_CAP: usize = 1 << 17;

struct ArgmaxTracker<'a> {
    max: f64,
    entries: &'a mut Vec<(u32, f64)>,
    overflowed: bool,
}

impl<'a> ArgmaxTracker<'a> {
    fn new(entries: &'a mut Vec<(u32, f64)>) -> Self {
        entries.clear();
        ArgmaxTracker {
            max: f64::NEG_INFINITY,
            entries,
            overflowed: false,
        }
    }

    #[inline]
    fn offer(&mut self, code: u32, score: f64) {
        if score > self.max {
            self.max = score;
            if !self.overflowed {
                let threshold = self.max - TIE_TOLERANCE;
                self.entries.retain(|&(_, s)| s >= threshold);
            }
        } else if score < self.max - TIE_TOLERANCE {
            return;
        }
        if self.overflowed {
            return;
        }
        if self.entries.len() >= TRACK_CAP {
            self.overflowed = true;
            self.entries.clear();
            return;
        }
        self.entries.push((code, score));
    }
}

/// Lexicographic order on sequences reads slot 0 as the most significant
/// position; with slot j stored at bit j, that is bit-reversed integer order.
#[inline]
fn lex_key(code: u32) -> u32 {
    code.reverse_bits()
}

/// Exhaustive argmax over all 2^t candidate sequences for a prepared scorer.
/// Returns (winning code, max score, tie count); ties within `TIE_TOLERANCE`
/// break to the lexicographically smallest sequence.
pub(crate) fn fuse_words(
    rows: &[u64],
    t: usize,
    scorer: &Scorer,
    ws: &mut FuseWorkspace,
) -> (u32, f64, u64) {
    debug_assert!((1..=MAX_FUSE_T).contains(&t));
    let total: u64 = 1 << t;
    ws.counts.resize(t + 1, 0);
    ws.g.resize(scorer.k() + 1, 0.0);

    let t32 = t as u32;
    match scorer {
        Scorer::Independent { w } => {
            let mut tracker = ArgmaxTracker::new(&mut ws.near_max);
            for v in 0..total {
                // Per-node direct sum; -inf table entries propagate cleanly.
                // Every term is a log-probability (<= 0), so a partial sum
                // below the tie threshold can never recover.
                let bail = tracker.max - TIE_TOLERANCE;
                let mut score = 0.0f64;
                for &row in rows {
                    let m = t32 - (row ^ v).count_ones();
                    score += w[m as usize];
                    if score < bail {
                        score = f64::NEG_INFINITY;
                        break;
                    }
                }
                tracker.offer(v as u32, score);
            }
            let overflowed = tracker.overflowed;
            let max = tracker.max;
            if overflowed {
                recount(t, max, |v| {
                    let mut score = 0.0f64;
                    for &row in rows {
                        let m = t32 - (row ^ v).count_ones();
                        score += w[m as usize];
                    }
                    score
                })
            } else {
                finish(&ws.near_max, max)
            }
        }
        Scorer::FixedK {
            k,
            honest,
            byz,
            log_norm,
            max_log_ratio,
        } => {
            let k = *k;
            let f = FixedKFactors {
                honest,
                byz,
                log_norm,
            };
            let g = &mut ws.g;
            // 600 nats of headroom before the f64 underflow floor.
            let guarded = rows.len() as f64 * max_log_ratio > 600.0;
            let lmax = ln_binomial(rows.len(), k);
            let mut tracker = ArgmaxTracker::new(&mut ws.near_max);
            if guarded {
                for v in 0..total {
                    let bail = tracker.max - TIE_TOLERANCE - lmax;
                    let score = subset_sum_rows(k, f, rows, v, t32, g, bail);
                    tracker.offer(v as u32, score);
                }
            } else {
                for v in 0..total {
                    let bail = tracker.max - TIE_TOLERANCE - lmax;
                    let score = subset_sum_rows_unguarded(k, f, rows, v, t32, g, bail);
                    tracker.offer(v as u32, score);
                }
            }
            let overflowed = tracker.overflowed;
            let max = tracker.max;
            if overflowed {
                recount(t, max, |v| {
                    subset_sum_rows(k, f, rows, v, t32, g, f64::NEG_INFINITY)
                })
            } else {
                finish(&ws.near_max, max)
            }
        }
        Scorer::General { .. } => {
            ws.match_counts.resize(rows.len(), 0);
            let match_counts = &mut ws.match_counts;
            let counts = &mut ws.counts;
            let g = &mut ws.g;
            let mut tracker = ArgmaxTracker::new(&mut ws.near_max);
            for v in 0..total {
                for (i, &row) in rows.iter().enumerate() {
                    match_counts[i] = t32 - (row ^ v).count_ones();
                }
                let score = scorer.score_match_vec(match_counts, counts, g);
                tracker.offer(v as u32, score);
            }
            let overflowed = tracker.overflowed;
            let max = tracker.max;
            if overflowed {
                recount(t, max, |v| {
                    for (i, &row) in rows.iter().enumerate() {
                        match_counts[i] = t32 - (row ^ v).count_ones();
                    }
                    scorer.score_match_vec(match_counts, counts, g)
                })
            } else {
                finish(&ws.near_max, max)
            }
        }
    }
}

fn finish(entries: &[(u32, f64)], max: f64) -> (u32, f64, u64) {
    let winner = entries
        .iter()
        .map(|&(code, _)| code)
        .min_by_key(|&code| lex_key(code))
        .expect("at least one candidate sequence");
    (winner, max, entries.len() as u64)
}

fn recount<F: FnMut(u64) -> f64>(t: usize, max: f64, mut score: F) -> (u32, f64, u64) {
    let total: u64 = 1 << t;
    let threshold = max - TIE_TOLERANCE;
    let mut ties = 0u64;
    let mut winner = u32::MAX;
    let mut winner_key = u32::MAX;
    for v in 0..total {
        if score(v) >= threshold {
            ties += 1;
            let key = lex_key(v as u32);
            if key < winner_key {
                winner_key = key;
                winner = v as u32;
            }
        }
    }
    (winner, max, ties)
}

/// Exact MAP fusion: evaluates the rule's score for every candidate sequence
/// in {0,1}^T and returns the argmax, with ties within `TIE_TOLERANCE`
/// broken to the lexicographically smallest sequence (slot 0 most
/// significant) and reported in `tie_count`.
pub fn fuse(r: &ReportMatrix, rule: &FusionRule, ch: &ChannelParams) -> Result<FusionDecision> {
    let t = r.t();
    if t > MAX_FUSE_T {
        return Err(Error::EnumerationBound { t, max: MAX_FUSE_T });
    }
    let scorer = Scorer::new(rule, t, ch)?;
    scorer.check_n(r.n())?;
    let rows: Vec<u64> = r.rows().iter().map(|row| row.word0()).collect();
    let mut ws = FuseWorkspace::default();
    let (code, score, tie_count) = fuse_words(&rows, t, &scorer, &mut ws);
    Ok(FusionDecision {
        sequence: StateSequence::from_word(t, u64::from(code)),
        score,
        tie_count,
    })
}

/// Per-column majority vote over rows packed as words (t <= 64); exact
/// column ties resolve by a fair coin from `rng`.
pub(crate) fn majority_words<R: Rng + ?Sized>(
    rows: &[u64],
    n: usize,
    t: usize,
    rng: &mut R,
) -> u64 {
    let mut out = 0u64;
    for j in 0..t {
        let ones: usize = rows.iter().map(|&row| ((row >> j) & 1) as usize).sum();
        let bit = match (2 * ones).cmp(&n) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => rng.random::<bool>(),
        };
        out |= u64::from(bit) << j;
    }
    out
}

/// Majority-rule baseline: per time slot, decide 1 when strictly more than
/// half the reports are 1, 0 when strictly fewer, and flip a fair coin from
/// the caller-supplied seeded source on exact ties.
pub fn majority_fuse<R: Rng + ?Sized>(r: &ReportMatrix, rng: &mut R) -> StateSequence {
    let n = r.n();
    let t = r.t();
    if t <= 64 {
        let rows: Vec<u64> = r.rows().iter().map(|row| row.word0()).collect();
        return StateSequence::from_word(t, majority_words(&rows, n, t, rng));
    }
    let mut bits = vec![0u8; t];
    for (j, bit) in bits.iter_mut().enumerate() {
        let ones = (0..n).filter(|&i| r.get(i, j)).count();
        *bit = match (2 * ones).cmp(&n) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => u8::from(rng.random::<bool>()),
        };
    }
    StateSequence::from_bits(&bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ch(eps: f64, p_mal: f64) -> ChannelParams {
        ChannelParams::new(eps, p_mal).unwrap()
    }

    #[test]
    fn derive_delta_examples() {
        assert!((derive_delta(0.1, 1.0).unwrap() - 0.9).abs() < 1e-15);
        assert!((derive_delta(0.1, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((derive_delta(0.1, 0.0).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn derive_delta_rejects_out_of_range() {
        assert!(derive_delta(0.5, 0.5).is_err());
        assert!(derive_delta(-0.1, 0.5).is_err());
        assert!(derive_delta(0.1, 1.5).is_err());
        assert!(derive_delta(0.1, -0.01).is_err());
        assert!(derive_delta(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn count_matches_examples() {
        let row = BitVec::from_str01("0110");
        let s = StateSequence::from_str01("0100");
        assert_eq!(count_matches(&row, &s).unwrap(), 3);

        let same = StateSequence::from_str01("0110");
        assert_eq!(count_matches(&row, &same).unwrap(), 4);
        assert_eq!(count_matches(&row, &same.complement()).unwrap(), 0);
    }

    #[test]
    fn count_matches_length_mismatch() {
        let row = BitVec::from_str01("011");
        let s = StateSequence::from_str01("0100");
        assert!(matches!(
            count_matches(&row, &s),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn node_log_likelihood_examples() {
        // All slots match: T*ln(1-p).
        assert!((node_log_likelihood(4, 4, 0.1) - 4.0 * 0.9f64.ln()).abs() < 1e-12);
        // 2 of 4 match at p = 0.1.
        let expected = 2.0 * 0.9f64.ln() + 2.0 * 0.1f64.ln();
        assert!((node_log_likelihood(2, 4, 0.1) - expected).abs() < 1e-12);
        assert!((expected - (-4.8158912)).abs() < 1e-6);
        // Noiseless channel, perfect match: probability 1.
        assert_eq!(node_log_likelihood(3, 3, 0.0), 0.0);
        // Noiseless channel, any mismatch: probability 0.
        assert_eq!(node_log_likelihood(2, 3, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn score_independent_one_node_one_slot() {
        // n=1, T=1, r=[0], s=[0], alpha=0.5, eps=0.1, P_mal=1 (delta=0.9):
        // 0.5*0.9 + 0.5*0.1 = 0.5.
        let r = ReportMatrix::from_strs(&["0"]).unwrap();
        let s = StateSequence::from_str01("0");
        let got = score_independent(&r, &s, 0.5, &ch(0.1, 1.0)).unwrap();
        assert!((got - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn score_independent_alpha_zero_reduces_to_honest_sum() {
        let r = ReportMatrix::from_strs(&["0110", "1100", "0001"]).unwrap();
        let s = StateSequence::from_str01("0100");
        let c = ch(0.12, 0.7);
        let got = score_independent(&r, &s, 0.0, &c).unwrap();
        let expected: f64 = r
            .rows()
            .iter()
            .map(|row| node_log_likelihood(count_matches(row, &s).unwrap(), 4, c.epsilon()))
            .sum();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn score_general_point_mass_on_honest() {
        let r = ReportMatrix::from_strs(&["0110", "1100"]).unwrap();
        let s = StateSequence::from_str01("0100");
        let c = ch(0.2, 0.8);
        let prior = ExplicitPrior::point_mass(crate::types::NodeStateVector::zeros(2));
        let got = score_general(&r, &s, &prior, &c).unwrap();
        let expected: f64 = r
            .rows()
            .iter()
            .map(|row| node_log_likelihood(count_matches(row, &s).unwrap(), 4, c.epsilon()))
            .sum();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn score_general_uniform_prior_hand_enumeration() {
        // n=2, T=1, r=[0;1], s=[0], eps=0.1, P_mal=1, uniform prior over
        // {00,01,10,11}: log(0.25*(0.9*0.1 + 0.9*0.9 + 0.1*0.1 + 0.1*0.9)).
        let r = ReportMatrix::from_strs(&["0", "1"]).unwrap();
        let s = StateSequence::from_str01("0");
        let entries = (0..4u64)
            .map(|code| (crate::types::NodeStateVector::from_word(2, code), 0.25))
            .collect();
        let prior = ExplicitPrior::new(entries).unwrap();
        let got = score_general(&r, &s, &prior, &ch(0.1, 1.0)).unwrap();
        let expected = (0.25f64 * (0.9 * 0.1 + 0.9 * 0.9 + 0.1 * 0.1 + 0.1 * 0.9)).ln();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn score_general_empty_prior_rejected() {
        assert!(matches!(ExplicitPrior::new(vec![]), Err(Error::EmptyPrior)));
    }

    #[test]
    fn score_fixed_k_zero_equals_honest_only() {
        let r = ReportMatrix::from_strs(&["0110", "1100", "0001"]).unwrap();
        let s = StateSequence::from_str01("0100");
        let c = ch(0.1, 0.8);
        let a = score_fixed_k(&r, &s, 0, &c).unwrap();
        let b = score_independent(&r, &s, 0.0, &c).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn score_fixed_k_two_nodes_expansion() {
        // n=2, k=1: score = log(b1*h2 + b2*h1).
        let r = ReportMatrix::from_strs(&["0110", "1100"]).unwrap();
        let s = StateSequence::from_str01("0100");
        let c = ch(0.1, 0.8);
        let m1 = count_matches(r.row(0), &s).unwrap();
        let m2 = count_matches(r.row(1), &s).unwrap();
        let h = |m: u32| node_log_likelihood(m, 4, c.epsilon()).exp();
        let b = |m: u32| node_log_likelihood(m, 4, c.delta()).exp();
        let expected = (b(m1) * h(m2) + b(m2) * h(m1)).ln();
        let got = score_fixed_k(&r, &s, 1, &c).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn score_fixed_k_matches_subset_enumeration() {
        // n=6, T=4, k=3 against the 20-subset brute force.
        let r = ReportMatrix::from_strs(&["0110", "1010", "0001", "1111", "0100", "1001"]).unwrap();
        let s = StateSequence::from_str01("0110");
        let c = ch(0.1, 0.8);
        let got = score_fixed_k(&r, &s, 3, &c).unwrap();
        let expected = enumerate_fixed_k(&r, &s, 3, &c);
        assert!(
            (got - expected).abs() <= 1e-10 * expected.abs().max(1.0),
            "dp {got} vs enumeration {expected}"
        );
    }

    #[test]
    fn score_fixed_k_k_out_of_range() {
        let r = ReportMatrix::from_strs(&["01", "10"]).unwrap();
        let s = StateSequence::from_str01("01");
        assert!(matches!(
            score_fixed_k(&r, &s, 3, &ch(0.1, 0.5)),
            Err(Error::KOutOfRange { k: 3, n: 2 })
        ));
    }

    #[test]
    fn score_fixed_k_degenerate_epsilon_zero() {
        // eps = 0: honest factor is zero unless the row matches everywhere.
        let r = ReportMatrix::from_strs(&["0110", "0110", "1001"]).unwrap();
        let s = StateSequence::from_str01("0110");
        let c = ch(0.0, 1.0);
        // k=1: the only surviving subset is {node 3 Byzantine} since rows 1
        // and 2 match s perfectly (honest prob 1) and row 3 is its complement
        // (byz prob 1 under delta = 1). Score = log(1) = 0.
        let got = score_fixed_k(&r, &s, 1, &c).unwrap();
        assert!((got - 0.0).abs() < 1e-12);
        // k=0 forces row 3 honest with a mismatch: impossible.
        assert_eq!(score_fixed_k(&r, &s, 0, &c).unwrap(), f64::NEG_INFINITY);
    }

    /// Brute-force k-subset enumeration in log domain (test oracle).
    fn enumerate_fixed_k(r: &ReportMatrix, s: &StateSequence, k: usize, c: &ChannelParams) -> f64 {
        let n = r.n();
        let t = r.t() as u32;
        let ms: Vec<u32> = r
            .rows()
            .iter()
            .map(|row| count_matches(row, s).unwrap())
            .collect();
        let mut acc = f64::NEG_INFINITY;
        for mask in 0u64..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let mut term = 0.0;
            for (i, &m) in ms.iter().enumerate() {
                term += if (mask >> i) & 1 == 1 {
                    node_log_likelihood(m, t, c.delta())
                } else {
                    node_log_likelihood(m, t, c.epsilon())
                };
            }
            acc = log_sum_exp(acc, term);
        }
        acc
    }

    #[test]
    fn fuse_alpha_zero_is_columnwise_majority() {
        // Odd n, no column ties possible.
        let r = ReportMatrix::from_strs(&["0110", "0100", "1101"]).unwrap();
        let d = fuse(&r, &FusionRule::Independent { alpha: 0.0 }, &ch(0.1, 1.0)).unwrap();
        assert_eq!(d.sequence.to_string(), "0100");
        assert_eq!(d.tie_count, 1);
    }

    #[test]
    fn fuse_unanimous_rows_return_the_row() {
        let r = ReportMatrix::from_strs(&["1010", "1010", "1010"]).unwrap();
        let d = fuse(&r, &FusionRule::Independent { alpha: 0.4 }, &ch(0.1, 1.0)).unwrap();
        assert_eq!(d.sequence.to_string(), "1010");
    }

    #[test]
    fn fuse_small_instance_matches_exhaustive_rational_oracle() {
        // n=3, T=2, r=[01;01;10], Independent(alpha=0.4), eps=0.1, P_mal=1.
        // Hand enumeration of eq-(10)-style scores over all 4 sequences with
        // exact per-node mixture factors picks s = 01.
        let r = ReportMatrix::from_strs(&["01", "01", "10"]).unwrap();
        let d = fuse(&r, &FusionRule::Independent { alpha: 0.4 }, &ch(0.1, 1.0)).unwrap();
        assert_eq!(d.sequence.to_string(), "01");
        assert_eq!(d.tie_count, 1);
        // Mixture factors: f(0) = 0.33, f(1) = 0.09, f(2) = 0.49 exactly;
        // winning score = log(f(2)^2 * f(0)).
        let expected = (0.49f64 * 0.49 * 0.33).ln();
        assert!((d.score - expected).abs() < 1e-12);
    }

    #[test]
    fn fuse_rejects_oversized_window() {
        let rows: Vec<u64> = vec![0; 2];
        let r = ReportMatrix::from_words(31, &rows).unwrap();
        assert!(matches!(
            fuse(&r, &FusionRule::Independent { alpha: 0.1 }, &ch(0.1, 0.5)),
            Err(Error::EnumerationBound { t: 31, max: 30 })
        ));
    }

    #[test]
    fn fuse_degenerate_uninformative_channel_ties_everything() {
        // delta = 0.5 with all nodes Byzantine: every sequence scores the
        // same, tie_count = 2^T and the lexicographically smallest wins.
        let r = ReportMatrix::from_strs(&["0110", "1100", "0011"]).unwrap();
        let d = fuse(&r, &FusionRule::Independent { alpha: 1.0 }, &ch(0.1, 0.5)).unwrap();
        assert_eq!(d.tie_count, 16);
        assert_eq!(d.sequence.to_string(), "0000");
        let dk = fuse(&r, &FusionRule::FixedK { k: 3 }, &ch(0.1, 0.5)).unwrap();
        assert_eq!(dk.tie_count, 16);
        assert_eq!(dk.sequence.to_string(), "0000");
    }

    #[test]
    fn fuse_complement_flips_decision_when_unique() {
        let r = ReportMatrix::from_strs(&["0110", "0100", "1101", "0101"]).unwrap();
        let rule = FusionRule::Independent { alpha: 0.3 };
        let c = ch(0.15, 0.9);
        let d = fuse(&r, &rule, &c).unwrap();
        let dc = fuse(&r.complement(), &rule, &c).unwrap();
        if d.tie_count == 1 {
            assert_eq!(dc.sequence, d.sequence.complement());
            assert_eq!(d.score, dc.score);
        }
    }

    #[test]
    fn majority_fuse_strict_majorities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = ReportMatrix::from_strs(&["1", "1", "0"]).unwrap();
        assert_eq!(majority_fuse(&r, &mut rng).to_string(), "1");
        let r = ReportMatrix::from_strs(&["0", "0", "0", "1"]).unwrap();
        assert_eq!(majority_fuse(&r, &mut rng).to_string(), "0");
    }

    #[test]
    fn majority_fuse_tie_coin_is_fair() {
        // n=2 with a tied column: over 1e5 seeded draws the fraction of 1s
        // lands at 0.5 +/- 0.01.
        let r = ReportMatrix::from_strs(&["0", "1"]).unwrap();
        let mut ones = 0u32;
        let trials = 100_000u32;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(u64::from(seed));
            if majority_fuse(&r, &mut rng).get(0) {
                ones += 1;
            }
        }
        let frac = f64::from(ones) / f64::from(trials);
        assert!((frac - 0.5).abs() < 0.01, "tie coin fraction {frac}");
        // Some pair of seeds resolves the tie differently.
        let outcomes: Vec<bool> = (0..16u64)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                majority_fuse(&r, &mut rng).get(0)
            })
            .collect();
        assert!(outcomes.iter().any(|&b| b) && outcomes.iter().any(|&b| !b));
    }

    #[test]
    fn monotonicity_of_honest_evidence() {
        // With 0 < eps < 0.5, more matching slots strictly increase the
        // honest log-likelihood.
        for &eps in &[0.05, 0.2, 0.45] {
            for m in 0..10u32 {
                assert!(node_log_likelihood(m + 1, 10, eps) > node_log_likelihood(m, 10, eps));
            }
        }
    }
}
