//! Exact (non-Monte-Carlo) error probabilities on tiny instances by full
//! enumeration of every (state sequence, report matrix) pair, weighted by
//! the model likelihood. This is the ground-truth oracle for validating the
//! simulator and the fusion rules.
//!
//! Optimum-rule decisions use the core's deterministic lexicographic
//! tie-break, exactly as the simulator applies them; the majority rule's
//! fair-coin column ties are integrated analytically (a tied column
//! contributes error 1/2), so the result carries no randomness at all.

use crate::error::{Error, Result};
use crate::fusion::{fuse_words, FuseWorkspace, Scorer};
use crate::numeric::{ln_pow, log_sum_exp, KahanSum};
use crate::sim::RuleSpec;
use crate::types::{ChannelParams, FusionRule, PriorModel};

/// Exact error probabilities from full enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactResult {
    /// Expected fraction of wrong state decisions per slot.
    pub per_state_error: f64,
    /// Probability that at least one slot is decided wrongly.
    pub sequence_error: f64,
    /// Number of (s^T, r) pairs visited: 2^T * 2^(nT).
    pub enumerated_outcomes: u64,
}

const MAX_NT: usize = 16;
const MAX_T: usize = 8;

enum Decisions {
    /// Optimum-rule decision (lexmin argmax) per report matrix code.
    Deterministic(Vec<u32>),
    /// Majority per-column outcome per report matrix code: 0, 1, or 2 = tie.
    MajorityTri(Vec<[u8; MAX_T]>),
}

fn binomial(n: usize, k: usize) -> u64 {
    let mut acc = 1u64;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Exact per-state and sequence error probability of `rule` on the model
/// (n, T, channel, node prior), by exhaustive enumeration. Requires
/// n*T <= 16 and T <= 8.
pub fn exact_error(
    n: usize,
    t: usize,
    ch: &ChannelParams,
    node_prior: &PriorModel,
    rule: &RuleSpec,
) -> Result<ExactResult> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidConfig {
            field: if n == 0 { "n" } else { "t" },
            reason: "must be at least 1".into(),
        });
    }
    if n * t > MAX_NT || t > MAX_T {
        return Err(Error::ExactBound { nt: n * t, t });
    }
    node_prior.validate_for(n)?;

    let total_r: u64 = 1 << (n * t);
    let total_s: u32 = 1 << t;
    let row_mask: u64 = (1 << t) - 1;
    let t32 = t as u32;

    // Pass 1: the rule's decision for every possible report matrix.
    let decisions = match rule {
        RuleSpec::Majority => {
            let mut tri = vec![[0u8; MAX_T]; total_r as usize];
            for (code, cols) in tri.iter_mut().enumerate() {
                for (j, col) in cols.iter_mut().enumerate().take(t) {
                    let ones: usize = (0..n).filter(|i| (code >> (i * t + j)) & 1 == 1).count();
                    *col = match (2 * ones).cmp(&n) {
                        std::cmp::Ordering::Greater => 1,
                        std::cmp::Ordering::Less => 0,
                        std::cmp::Ordering::Equal => 2,
                    };
                }
            }
            Decisions::MajorityTri(tri)
        }
        other => {
            let fusion_rule = match other {
                RuleSpec::Independent { alpha } => FusionRule::Independent { alpha: *alpha },
                RuleSpec::FixedK { k } => {
                    if *k > n {
                        return Err(Error::KOutOfRange { k: *k, n });
                    }
                    FusionRule::FixedK { k: *k }
                }
                RuleSpec::General(prior) => {
                    if prior.n() != n {
                        return Err(Error::DimensionMismatch {
                            what: "general-rule prior vector length",
                            expected: n,
                            actual: prior.n(),
                        });
                    }
                    FusionRule::General(prior.clone())
                }
                RuleSpec::Majority => unreachable!(),
            };
            let scorer = Scorer::new(&fusion_rule, t, ch)?;
            let mut ws = FuseWorkspace::default();
            let mut rows = vec![0u64; n];
            let mut dec = Vec::with_capacity(total_r as usize);
            for code in 0..total_r {
                for (i, row) in rows.iter_mut().enumerate() {
                    *row = (code >> (i * t)) & row_mask;
                }
                let (winner, _, _) = fuse_words(&rows, t, &scorer, &mut ws);
                dec.push(winner);
            }
            Decisions::Deterministic(dec)
        }
    };

    // Generation-side likelihood tables (prior over node states is separate
    // from the rule's prior).
    let lh: Vec<f64> = (0..=t32)
        .map(|m| crate::fusion::node_log_likelihood(m, t32, ch.epsilon()))
        .collect();
    let lb: Vec<f64> = (0..=t32)
        .map(|m| crate::fusion::node_log_likelihood(m, t32, ch.delta()))
        .collect();

    enum PriorKind<'a> {
        Independent {
            wmix: Vec<f64>,
        },
        FixedCount {
            scorer: Scorer,
            log_binom: f64,
        },
        Explicit(&'a crate::types::ExplicitPrior),
    }
    let prior_kind = match node_prior {
        PriorModel::Independent { alpha } => {
            let la = ln_pow(*alpha, 1);
            let l1a = ln_pow(1.0 - *alpha, 1);
            let wmix = (0..=t)
                .map(|m| log_sum_exp(l1a + lh[m], la + lb[m]))
                .collect();
            PriorKind::Independent { wmix }
        }
        PriorModel::FixedCount { k } => PriorKind::FixedCount {
            scorer: Scorer::new(&FusionRule::FixedK { k: *k }, t, ch)?,
            log_binom: (binomial(n, *k) as f64).ln(),
        },
        PriorModel::Explicit(prior) => PriorKind::Explicit(prior),
    };

    let mut per_state = KahanSum::new();
    let mut seq_wrong = KahanSum::new();
    let mut counts = vec![0u32; t + 1];
    let mut g = vec![0.0f64; n + 1];
    let mut m_of_v = vec![0u32; 1 << t];

    for s_code in 0..total_s {
        for (v, m) in m_of_v.iter_mut().enumerate() {
            *m = t32 - (v as u64 ^ u64::from(s_code)).count_ones();
        }
        for r_code in 0..total_r {
            // log P(r | s) under the generation prior.
            let logp = match &prior_kind {
                PriorKind::Independent { wmix } => {
                    let mut sum = 0.0;
                    for i in 0..n {
                        let v = ((r_code >> (i * t)) & row_mask) as usize;
                        sum += wmix[m_of_v[v] as usize];
                    }
                    sum
                }
                PriorKind::FixedCount { scorer, log_binom } => {
                    counts.fill(0);
                    for i in 0..n {
                        let v = ((r_code >> (i * t)) & row_mask) as usize;
                        counts[m_of_v[v] as usize] += 1;
                    }
                    scorer.score_counts(&counts, &mut g) - log_binom
                }
                PriorKind::Explicit(prior) => {
                    let mut acc = f64::NEG_INFINITY;
                    for (a, p) in prior.entries() {
                        let mut term = ln_pow(*p, 1);
                        for i in 0..n {
                            let v = ((r_code >> (i * t)) & row_mask) as usize;
                            let m = m_of_v[v] as usize;
                            term += if a.is_byzantine(i) { lb[m] } else { lh[m] };
                        }
                        acc = log_sum_exp(acc, term);
                    }
                    acc
                }
            };
            let p = logp.exp();
            if p == 0.0 {
                continue;
            }

            match &decisions {
                Decisions::Deterministic(dec) => {
                    let ham = (dec[r_code as usize] ^ s_code).count_ones();
                    per_state.add(p * f64::from(ham) / t as f64);
                    if ham > 0 {
                        seq_wrong.add(p);
                    }
                }
                Decisions::MajorityTri(tri) => {
                    let cols = &tri[r_code as usize];
                    let mut err_sum = 0.0f64;
                    let mut correct_prob = 1.0f64;
                    for (j, &col) in cols.iter().enumerate().take(t) {
                        let s_j = (s_code >> j) & 1;
                        let e_j = match col {
                            2 => 0.5,
                            bit => {
                                if u32::from(bit) == s_j {
                                    0.0
                                } else {
                                    1.0
                                }
                            }
                        };
                        err_sum += e_j;
                        correct_prob *= 1.0 - e_j;
                    }
                    per_state.add(p * err_sum / t as f64);
                    seq_wrong.add(p * (1.0 - correct_prob));
                }
            }
        }
    }

    let norm = f64::from(total_s);
    Ok(ExactResult {
        per_state_error: per_state.value() / norm,
        sequence_error: seq_wrong.value() / norm,
        enumerated_outcomes: u64::from(total_s) * total_r,
    })
}
