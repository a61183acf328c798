//! Monte Carlo simulation of the report model: synthetic trial generation,
//! error-probability estimation, parameter sweeps and the attacker's best
//! response over the flipping probability.
//!
//! Determinism: every trial derives its own RNG streams from
//! (master_seed, trial_index), accumulators are integers merged in fixed
//! chunk order, so estimates are bit-identical for any degree of
//! parallelism. Sweeps reuse the same per-trial seeds at every grid point
//! (common random numbers), which sharpens best-response comparisons.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fusion::{fuse_words, majority_words, FuseWorkspace, Scorer, MAX_FUSE_T};
use crate::types::{
    ChannelParams, ExplicitPrior, FusionRule, NodeStateVector, PriorModel, ReportMatrix,
    StateSequence,
};

/// A fusion rule to evaluate in simulation, including the majority baseline.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleSpec {
    /// Optimum rule for independent Bernoulli(alpha) node states.
    Independent { alpha: f64 },
    /// Optimum rule for a known number k of Byzantine nodes.
    FixedK { k: usize },
    /// General rule for an explicit prior table.
    General(ExplicitPrior),
    /// Per-slot majority vote with fair-coin tie-breaks.
    Majority,
}

impl RuleSpec {
    /// Stable rule name used in output tables.
    pub fn label(&self) -> &'static str {
        match self {
            RuleSpec::Independent { .. } => "independent",
            RuleSpec::FixedK { .. } => "fixed-k",
            RuleSpec::General(_) => "general",
            RuleSpec::Majority => "majority",
        }
    }

    fn as_fusion_rule(&self) -> Option<FusionRule> {
        match self {
            RuleSpec::Independent { alpha } => Some(FusionRule::Independent { alpha: *alpha }),
            RuleSpec::FixedK { k } => Some(FusionRule::FixedK { k: *k }),
            RuleSpec::General(prior) => Some(FusionRule::General(prior.clone())),
            RuleSpec::Majority => None,
        }
    }
}

/// Full description of one simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub t: usize,
    pub epsilon: f64,
    pub p_mal: f64,
    /// Ground-truth distribution of node states (Independent or FixedCount).
    pub node_prior: PriorModel,
    /// Rules evaluated on every trial.
    pub rules: Vec<RuleSpec>,
    pub trials: u64,
    pub master_seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig {
                field: "n",
                reason: "node count must be at least 1".into(),
            });
        }
        if self.t == 0 || self.t > 64 {
            return Err(Error::InvalidConfig {
                field: "t",
                reason: format!("window length {} outside [1, 64]", self.t),
            });
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig {
                field: "trials",
                reason: "at least one trial required".into(),
            });
        }
        ChannelParams::new(self.epsilon, self.p_mal)?;
        match &self.node_prior {
            PriorModel::Explicit(_) => {
                return Err(Error::InvalidConfig {
                    field: "node_prior",
                    reason: "trial generation supports Independent or FixedCount priors".into(),
                });
            }
            prior => prior.validate_for(self.n)?,
        }
        if self.rules.len() > 8 {
            return Err(Error::InvalidConfig {
                field: "rules",
                reason: "at most 8 rules per scenario".into(),
            });
        }
        for rule in &self.rules {
            match rule {
                RuleSpec::Independent { alpha } => {
                    if !alpha.is_finite() || !(0.0..=1.0).contains(alpha) {
                        return Err(Error::Domain {
                            name: "alpha",
                            value: *alpha,
                            range: "[0, 1]",
                        });
                    }
                }
                RuleSpec::FixedK { k } => {
                    if *k > self.n {
                        return Err(Error::KOutOfRange { k: *k, n: self.n });
                    }
                }
                RuleSpec::General(prior) => {
                    if prior.n() != self.n {
                        return Err(Error::DimensionMismatch {
                            what: "general-rule prior vector length",
                            expected: self.n,
                            actual: prior.n(),
                        });
                    }
                }
                RuleSpec::Majority => {}
            }
        }
        Ok(())
    }

    pub fn channel(&self) -> Result<ChannelParams> {
        ChannelParams::new(self.epsilon, self.p_mal)
    }

    fn needs_exact_fusion(&self) -> bool {
        self.rules.iter().any(|r| !matches!(r, RuleSpec::Majority))
    }
}

/// Monte Carlo error estimate for one rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    /// Fraction of decided state slots that were wrong (Hamming / (T*trials)).
    pub per_state_error: f64,
    /// Fraction of trials with at least one wrong slot.
    pub sequence_error: f64,
    /// Standard error of the per-state estimate, from the sample variance of
    /// per-trial Hamming fractions.
    pub stderr_per_state: f64,
    pub trials: u64,
    /// Trials where the optimum rule's argmax was tied (diagnostic).
    pub tie_trials: u64,
}

// Fixed purpose tags keep the five random streams of a trial independent.
const STREAM_STATE: u64 = 0;
const STREAM_NODE_STATE: u64 = 1;
const STREAM_LOCAL_ERR: u64 = 2;
const STREAM_FLIP: u64 = 3;
const STREAM_TIE: u64 = 4;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-purpose RNG for one trial: a ChaCha8 stream keyed by a stable hash of
/// (master_seed, trial_index), with the purpose as the stream number.
fn trial_rng(master_seed: u64, trial_index: u64, stream: u64) -> ChaCha8Rng {
    let mut state = master_seed ^ trial_index.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

fn low_mask(t: usize) -> u64 {
    if t == 64 {
        u64::MAX
    } else {
        (1u64 << t) - 1
    }
}

/// Scratch buffers reused across the trials of one worker chunk.
struct TrialBuf {
    byz: Vec<bool>,
    rows: Vec<u64>,
    node_idx: Vec<usize>,
}

impl TrialBuf {
    fn new(n: usize) -> Self {
        TrialBuf {
            byz: vec![false; n],
            rows: vec![0; n],
            node_idx: (0..n).collect(),
        }
    }
}

/// Draw one trial: i.i.d. equiprobable states, node states from the prior
/// (held constant over the window), local errors at epsilon, Byzantine flips
/// at P_mal. Flip variables are drawn for every (node, slot) position so the
/// streams stay aligned across grid points under common random numbers.
fn fill_trial(cfg: &ScenarioConfig, trial_index: u64, buf: &mut TrialBuf) -> u64 {
    let n = cfg.n;
    let t = cfg.t;
    let seed = cfg.master_seed;

    let mut state_rng = trial_rng(seed, trial_index, STREAM_STATE);
    let s_word = state_rng.random::<u64>() & low_mask(t);

    let mut node_rng = trial_rng(seed, trial_index, STREAM_NODE_STATE);
    match cfg.node_prior {
        PriorModel::Independent { alpha } => {
            for b in buf.byz.iter_mut() {
                *b = node_rng.random::<f64>() < alpha;
            }
        }
        PriorModel::FixedCount { k } => {
            // Uniform k-subset via partial Fisher-Yates.
            for (i, slot) in buf.node_idx.iter_mut().enumerate() {
                *slot = i;
            }
            for j in 0..k {
                let r = j + node_rng.random_range(0..n - j);
                buf.node_idx.swap(j, r);
            }
            buf.byz.fill(false);
            for &i in &buf.node_idx[..k] {
                buf.byz[i] = true;
            }
        }
        PriorModel::Explicit(_) => unreachable!("rejected by validate()"),
    }

    let mut err_rng = trial_rng(seed, trial_index, STREAM_LOCAL_ERR);
    let mut flip_rng = trial_rng(seed, trial_index, STREAM_FLIP);
    for i in 0..n {
        let byz = buf.byz[i];
        let mut row = 0u64;
        for j in 0..t {
            let local_err = err_rng.random::<f64>() < cfg.epsilon;
            let flip = flip_rng.random::<f64>() < cfg.p_mal;
            let s_j = (s_word >> j) & 1 == 1;
            let bit = s_j ^ local_err ^ (byz && flip);
            row |= u64::from(bit) << j;
        }
        buf.rows[i] = row;
    }
    s_word
}

/// Generate the (true states, node states, report matrix) triple of one
/// trial, exactly as the estimator sees it.
pub fn generate_trial(
    cfg: &ScenarioConfig,
    trial_index: u64,
) -> Result<(StateSequence, NodeStateVector, ReportMatrix)> {
    cfg.validate()?;
    let mut buf = TrialBuf::new(cfg.n);
    let s_word = fill_trial(cfg, trial_index, &mut buf);
    let s = StateSequence::from_word(cfg.t, s_word);
    let mut a = NodeStateVector::zeros(cfg.n);
    for (i, &b) in buf.byz.iter().enumerate() {
        if b {
            a.set(i, true);
        }
    }
    let r = ReportMatrix::from_words(cfg.t, &buf.rows)?;
    Ok((s, a, r))
}

enum PreparedRule {
    Fusion(Scorer),
    Majority,
}

#[derive(Debug, Clone, Copy, Default)]
struct RuleAccum {
    sum_m: u64,
    sum_m2: u64,
    seq_err: u64,
    tie_trials: u64,
}

impl RuleAccum {
    fn merge(&mut self, other: &RuleAccum) {
        self.sum_m += other.sum_m;
        self.sum_m2 += other.sum_m2;
        self.seq_err += other.seq_err;
        self.tie_trials += other.tie_trials;
    }

    fn finish(&self, t: usize, trials: u64) -> ErrorEstimate {
        let tn = t as f64 * trials as f64;
        let per_state = self.sum_m as f64 / tn;
        let sequence = self.seq_err as f64 / trials as f64;
        let stderr = if trials > 1 {
            let nf = trials as f64;
            let mean_m = self.sum_m as f64 / nf;
            let var_m = (self.sum_m2 as f64 - nf * mean_m * mean_m) / (nf - 1.0);
            (var_m.max(0.0) / nf).sqrt() / t as f64
        } else {
            0.0
        };
        ErrorEstimate {
            per_state_error: per_state,
            sequence_error: sequence,
            stderr_per_state: stderr,
            trials,
            tie_trials: self.tie_trials,
        }
    }
}

/// Trials per work unit; fixed so chunk boundaries (and thus merge order)
/// never depend on the thread count.
const CHUNK: u64 = 1024;

struct ChunkOut {
    acc: Vec<RuleAccum>,
    retained: Vec<u8>,
}

fn run_trials(
    cfg: &ScenarioConfig,
    retain_rule: Option<usize>,
) -> Result<(Vec<RuleAccum>, Option<Vec<u8>>)> {
    cfg.validate()?;
    if cfg.needs_exact_fusion() && cfg.t > MAX_FUSE_T {
        return Err(Error::EnumerationBound {
            t: cfg.t,
            max: MAX_FUSE_T,
        });
    }
    let ch = cfg.channel()?;
    let prepared: Vec<PreparedRule> = cfg
        .rules
        .iter()
        .map(|rule| -> Result<PreparedRule> {
            match rule.as_fusion_rule() {
                Some(fr) => Ok(PreparedRule::Fusion(Scorer::new(&fr, cfg.t, &ch)?)),
                None => Ok(PreparedRule::Majority),
            }
        })
        .collect::<Result<_>>()?;

    let n_chunks = cfg.trials.div_ceil(CHUNK);
    let mask = low_mask(cfg.t);
    let chunks: Vec<ChunkOut> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(cfg.trials);
            let mut buf = TrialBuf::new(cfg.n);
            let mut ws = FuseWorkspace::default();
            let mut acc = vec![RuleAccum::default(); prepared.len()];
            let mut retained = Vec::with_capacity(if retain_rule.is_some() {
                (hi - lo) as usize
            } else {
                0
            });
            for trial in lo..hi {
                let s_word = fill_trial(cfg, trial, &mut buf);
                let mut tie_rng: Option<ChaCha8Rng> = None;
                for (ri, prep) in prepared.iter().enumerate() {
                    let (decision, tie_count) = match prep {
                        PreparedRule::Fusion(scorer) => {
                            let (code, _, ties) = fuse_words(&buf.rows, cfg.t, scorer, &mut ws);
                            (u64::from(code), ties)
                        }
                        PreparedRule::Majority => {
                            let rng = tie_rng.get_or_insert_with(|| {
                                trial_rng(cfg.master_seed, trial, STREAM_TIE)
                            });
                            (majority_words(&buf.rows, cfg.n, cfg.t, rng), 1)
                        }
                    };
                    let m = u64::from(((decision ^ s_word) & mask).count_ones());
                    let a = &mut acc[ri];
                    a.sum_m += m;
                    a.sum_m2 += m * m;
                    a.seq_err += u64::from(m > 0);
                    a.tie_trials += u64::from(tie_count > 1);
                    if retain_rule == Some(ri) {
                        retained.push(m as u8);
                    }
                }
            }
            ChunkOut { acc, retained }
        })
        .collect();

    let mut acc = vec![RuleAccum::default(); cfg.rules.len()];
    let mut retained = retain_rule.map(|_| Vec::with_capacity(cfg.trials as usize));
    for chunk in &chunks {
        for (a, b) in acc.iter_mut().zip(&chunk.acc) {
            a.merge(b);
        }
        if let Some(r) = retained.as_mut() {
            r.extend_from_slice(&chunk.retained);
        }
    }
    Ok((acc, retained))
}

/// Estimate per-state and sequence error probabilities for every configured
/// rule over `cfg.trials` independent trials. Deterministic for a fixed
/// master_seed regardless of execution parallelism.
pub fn estimate_error(cfg: &ScenarioConfig) -> Result<Vec<(RuleSpec, ErrorEstimate)>> {
    let (acc, _) = run_trials(cfg, None)?;
    Ok(cfg
        .rules
        .iter()
        .cloned()
        .zip(acc.iter().map(|a| a.finish(cfg.t, cfg.trials)))
        .collect())
}

/// Which scenario parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    PMal,
    Alpha,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::PMal => "p_mal",
            SweepAxis::Alpha => "alpha",
        }
    }
}

/// One (grid value, rule) result of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub rule: RuleSpec,
    pub estimate: ErrorEstimate,
}

fn substituted(cfg: &ScenarioConfig, axis: SweepAxis, value: f64) -> Result<ScenarioConfig> {
    let mut out = cfg.clone();
    match axis {
        SweepAxis::PMal => {
            out.p_mal = value;
        }
        SweepAxis::Alpha => {
            match &mut out.node_prior {
                PriorModel::Independent { alpha } => *alpha = value,
                _ => {
                    return Err(Error::InvalidConfig {
                        field: "node_prior",
                        reason: "alpha sweep requires an Independent node prior".into(),
                    });
                }
            }
            // The fusion center is assumed to know the prior, so matched
            // independent rules track the swept alpha.
            for rule in &mut out.rules {
                if let RuleSpec::Independent { alpha } = rule {
                    *alpha = value;
                }
            }
        }
    }
    Ok(out)
}

/// Run `estimate_error` at each grid value with the swept parameter
/// substituted (delta re-derived when sweeping P_mal). All grid points share
/// per-trial seeds (common random numbers).
pub fn sweep(cfg: &ScenarioConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidConfig {
            field: "grid",
            reason: "sweep grid must be nonempty".into(),
        });
    }
    for &v in values {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain {
                name: "grid value",
                value: v,
                range: "[0, 1]",
            });
        }
    }
    let mut rows = Vec::with_capacity(values.len() * cfg.rules.len());
    for &value in values {
        let point = substituted(cfg, axis, value)?;
        for (rule, estimate) in estimate_error(&point)? {
            rows.push(SweepRow {
                axis,
                value,
                rule,
                estimate,
            });
        }
    }
    Ok(rows)
}

/// Paired comparison between the best-response winner and another grid point
/// under common random numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedComparison {
    /// The runner-up grid value.
    pub p_mal: f64,
    /// Mean per-state error difference (winner minus runner-up).
    pub mean_diff: f64,
    /// Standard error of the paired per-trial difference.
    pub stderr_diff: f64,
}

/// Outcome of the attacker's best-response search over P_mal.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    /// Grid value maximizing the designated rule's per-state error.
    pub p_mal_star: f64,
    /// True when some other grid point lies within 3 paired standard errors
    /// of the winner.
    pub ambiguous: bool,
    /// Full sweep table over the grid (all configured rules).
    pub table: Vec<SweepRow>,
    /// Winner-vs-runner-up separations for the designated rule.
    pub comparisons: Vec<PairedComparison>,
}

/// Sweep P_mal over `grid` and return the value maximizing the per-state
/// error of the designated rule (`cfg.rules[0]`), flagging statistical
/// ambiguity via common-random-numbers paired differences.
pub fn best_response(cfg: &ScenarioConfig, p_mal_grid: &[f64]) -> Result<BestResponse> {
    if p_mal_grid.is_empty() {
        return Err(Error::InvalidConfig {
            field: "p_mal_grid",
            reason: "best-response grid must be nonempty".into(),
        });
    }
    if cfg.rules.is_empty() {
        return Err(Error::InvalidConfig {
            field: "rules",
            reason: "best_response needs at least one rule (the designated rule)".into(),
        });
    }
    for &v in p_mal_grid {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain {
                name: "p_mal",
                value: v,
                range: "[0, 1]",
            });
        }
    }

    let mut table = Vec::with_capacity(p_mal_grid.len() * cfg.rules.len());
    let mut per_point: Vec<(f64, Vec<u8>)> = Vec::with_capacity(p_mal_grid.len());
    for &value in p_mal_grid {
        let point = substituted(cfg, SweepAxis::PMal, value)?;
        let (acc, retained) = run_trials(&point, Some(0))?;
        for (rule, a) in cfg.rules.iter().zip(&acc) {
            table.push(SweepRow {
                axis: SweepAxis::PMal,
                value,
                rule: rule.clone(),
                estimate: a.finish(cfg.t, cfg.trials),
            });
        }
        per_point.push((
            acc[0].finish(cfg.t, cfg.trials).per_state_error,
            retained.expect("retention requested"),
        ));
    }

    let winner = per_point
        .iter()
        .enumerate()
        .max_by(|(_, (a, _)), (_, (b, _))| a.total_cmp(b))
        .map(|(i, _)| i)
        .expect("nonempty grid");

    let t = cfg.t as f64;
    let trials = cfg.trials;
    let mut comparisons = Vec::new();
    let mut ambiguous = false;
    for (i, (_, counts)) in per_point.iter().enumerate() {
        if i == winner {
            continue;
        }
        let win_counts = &per_point[winner].1;
        let mut sum_d = 0i64;
        let mut sum_d2 = 0i64;
        for (&w, &o) in win_counts.iter().zip(counts) {
            let d = i64::from(w) - i64::from(o);
            sum_d += d;
            sum_d2 += d * d;
        }
        let nf = trials as f64;
        let mean_diff = sum_d as f64 / (t * nf);
        let stderr_diff = if trials > 1 {
            let mean_d = sum_d as f64 / nf;
            let var_d = (sum_d2 as f64 - nf * mean_d * mean_d) / (nf - 1.0);
            (var_d.max(0.0) / nf).sqrt() / t
        } else {
            0.0
        };
        if mean_diff <= 3.0 * stderr_diff {
            ambiguous = true;
        }
        comparisons.push(PairedComparison {
            p_mal: p_mal_grid[i],
            mean_diff,
            stderr_diff,
        });
    }

    Ok(BestResponse {
        p_mal_star: p_mal_grid[winner],
        ambiguous,
        table,
        comparisons,
    })
}
