//! Randomized constraint chains and layered-width resolution strategies.
//!
//! A (k, m, s)-chain admits tuples (v_1..v_k) with v_1 in a fixed s-subset of
//! [m] and each later v_l drawn from an s-subset determined by v_{l-1}.
//! Sequential resolution (one position per round) always succeeds; resolving
//! several positions per round forces blind guesses at every link whose
//! predecessor is not yet fixed, and success decays like (s/m)^uninformed.
//!
//! Values are 0-based: [m] is `0..m`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("tuple length {got} does not match chain positions {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("enumeration of {needed} cases exceeds the limit {limit}")]
    TooLarge { needed: u64, limit: u64 },
}

/// Successor-set constraint chain. `rows[l-2][a]` is the sorted s-subset
/// allowed at position `l` (2-based) when position `l-1` took value `a`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintChain {
    pub k: usize,
    pub m: usize,
    pub s: usize,
    pub p1: Vec<usize>,
    pub rows: Vec<Vec<Vec<usize>>>,
}

pub fn generate_chain<R: Rng>(k: usize, m: usize, s: usize, rng: &mut R) -> Result<ConstraintChain, GenError> {
    if k < 1 || s < 1 || s > m {
        return Err(GenError::InvalidParams(format!("need k >= 1 and 1 <= s <= m, got k={k} m={m} s={s}")));
    }
    let draw = |rng: &mut R| {
        let mut v = sample(rng, m, s).into_vec();
        v.sort_unstable();
        v
    };
    let p1 = draw(rng);
    let rows = (1..k).map(|_| (0..m).map(|_| draw(rng)).collect()).collect();
    Ok(ConstraintChain { k, m, s, p1, rows })
}

/// Chains whose rows are all the same residue class mod m/s, independent of
/// the predecessor value. The class index is exactly log2(m/s) bits, so a
/// message that short lets a decoder hit the row with certainty; used to show
/// the communication bound is tight. Requires s | m.
pub fn generate_aligned_chain<R: Rng>(k: usize, m: usize, s: usize, rng: &mut R) -> Result<ConstraintChain, GenError> {
    if k < 1 || s < 1 || s > m || m % s != 0 {
        return Err(GenError::InvalidParams(format!("aligned chains need k >= 1 and s | m, got k={k} m={m} s={s}")));
    }
    let classes = m / s;
    let class_row = |r: usize| -> Vec<usize> { (0..s).map(|t| r + t * classes).collect() };
    let p1 = class_row(rng.gen_range(0..classes));
    let rows = (1..k)
        .map(|_| {
            let r = rng.gen_range(0..classes);
            (0..m).map(|_| class_row(r)).collect()
        })
        .collect();
    Ok(ConstraintChain { k, m, s, p1, rows })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TupleCheck {
    pub valid: bool,
    pub violations: usize,
}

/// Counts the first-position membership and every link constraint that fails.
pub fn check_tuple(chain: &ConstraintChain, tuple: &[usize]) -> Result<TupleCheck, GenError> {
    if tuple.len() != chain.k {
        return Err(GenError::LengthMismatch { expected: chain.k, got: tuple.len() });
    }
    let mut violations = 0;
    if !chain.p1.contains(&tuple[0]) {
        violations += 1;
    }
    for l in 1..chain.k {
        if !chain.rows[l - 1][tuple[l - 1]].contains(&tuple[l]) {
            violations += 1;
        }
    }
    Ok(TupleCheck { valid: violations == 0, violations })
}

/// One position per round, lowest valid value each time. Never fails.
pub fn sequential_resolve(chain: &ConstraintChain) -> Vec<usize> {
    let mut tuple = Vec::with_capacity(chain.k);
    tuple.push(chain.p1[0]);
    for l in 1..chain.k {
        let prev = tuple[l - 1];
        tuple.push(chain.rows[l - 1][prev][0]);
    }
    tuple
}

/// Assignment of the k positions to layers 0..d'-1, every layer nonempty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerAssignment {
    layer_of: Vec<usize>,
    d_prime: usize,
}

impl LayerAssignment {
    pub fn new(layer_of: Vec<usize>) -> Result<Self, GenError> {
        let k = layer_of.len();
        if k == 0 {
            return Err(GenError::InvalidParams("assignment must cover at least one position".into()));
        }
        let d_prime = layer_of.iter().copied().max().unwrap() + 1;
        if d_prime > k {
            return Err(GenError::InvalidParams(format!("{d_prime} layers over {k} positions")));
        }
        for layer in 0..d_prime {
            if !layer_of.contains(&layer) {
                return Err(GenError::InvalidParams(format!("layer {layer} is empty")));
            }
        }
        Ok(LayerAssignment { layer_of, d_prime })
    }

    /// Contiguous blocks of size floor(k/d') or ceil(k/d'), larger blocks
    /// first.
    pub fn contiguous(k: usize, d_prime: usize) -> Result<Self, GenError> {
        if d_prime < 1 || d_prime > k {
            return Err(GenError::InvalidParams(format!("need 1 <= d' <= k, got d'={d_prime} k={k}")));
        }
        let base = k / d_prime;
        let extra = k % d_prime;
        let mut layer_of = Vec::with_capacity(k);
        for layer in 0..d_prime {
            let size = base + usize::from(layer < extra);
            layer_of.extend(std::iter::repeat(layer).take(size));
        }
        Ok(LayerAssignment { layer_of, d_prime })
    }

    pub fn d_prime(&self) -> usize {
        self.d_prime
    }

    pub fn k(&self) -> usize {
        self.layer_of.len()
    }

    pub fn layer_of(&self, position: usize) -> usize {
        self.layer_of[position]
    }

    /// Links whose predecessor is not fixed in a strictly earlier layer.
    pub fn count_uninformed_links(&self) -> usize {
        (1..self.layer_of.len()).filter(|&l| self.layer_of[l - 1] >= self.layer_of[l]).count()
    }

    pub fn uninformed_positions(&self) -> Vec<usize> {
        (1..self.layer_of.len()).filter(|&l| self.layer_of[l - 1] >= self.layer_of[l]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Lowest valid successor at informed links, uniform guess at uninformed
    /// ones.
    UniformGuess,
    /// Like UniformGuess, but when the successor is already fixed the choice
    /// is additionally filtered to values whose own successor row contains
    /// it; falls back to the unfiltered choice when the filter empties.
    ValidGreedy,
}

#[derive(Clone, Debug)]
pub struct StrategyRun {
    pub assignment: LayerAssignment,
    pub width: usize,
    pub policy: Policy,
}

#[derive(Clone, Debug)]
pub struct CandidateOutcome {
    pub values: Vec<usize>,
    pub violations: usize,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub success: bool,
    pub candidates: Vec<CandidateOutcome>,
}

/// Builds `width` candidate tuples layer by layer. Within a layer positions
/// resolve in ascending order, but a same-layer predecessor still counts as
/// unknown: only values fixed in strictly earlier layers are visible, so each
/// candidate's layer-r choices depend on the chain and layers before r alone.
pub fn run_parallel_strategy<R: Rng>(
    chain: &ConstraintChain,
    run: &StrategyRun,
    rng: &mut R,
) -> Result<RunOutcome, GenError> {
    if run.assignment.k() != chain.k {
        return Err(GenError::InvalidParams(format!(
            "assignment covers {} positions, chain has {}",
            run.assignment.k(),
            chain.k
        )));
    }
    if run.width < 1 {
        return Err(GenError::InvalidParams("width must be at least 1".into()));
    }
    let k = chain.k;
    let m = chain.m;
    let assign = &run.assignment;
    let mut candidates = Vec::with_capacity(run.width);
    let mut success = false;
    for _ in 0..run.width {
        let mut values = vec![usize::MAX; k];
        for layer in 0..assign.d_prime() {
            let fixed_before: Vec<bool> = (0..k).map(|p| assign.layer_of(p) < layer).collect();
            for pos in (0..k).filter(|&p| assign.layer_of(p) == layer) {
                let informed_row: Option<&[usize]> = if pos == 0 {
                    Some(&chain.p1)
                } else if fixed_before[pos - 1] {
                    Some(&chain.rows[pos - 1][values[pos - 1]])
                } else {
                    None
                };
                let successor_fixed = pos + 1 < k && fixed_before[pos + 1];
                let choice = match informed_row {
                    Some(row) => {
                        let refined = if run.policy == Policy::ValidGreedy && successor_fixed {
                            row.iter().copied().find(|&v| chain.rows[pos][v].contains(&values[pos + 1]))
                        } else {
                            None
                        };
                        refined.unwrap_or(row[0])
                    }
                    None => {
                        let refined = if run.policy == Policy::ValidGreedy && successor_fixed {
                            (0..m).find(|&v| chain.rows[pos][v].contains(&values[pos + 1]))
                        } else {
                            None
                        };
                        match refined {
                            Some(v) => v,
                            None => rng.gen_range(0..m),
                        }
                    }
                };
                values[pos] = choice;
            }
        }
        let check = check_tuple(chain, &values)?;
        success |= check.valid;
        candidates.push(CandidateOutcome { values, violations: check.violations });
    }
    Ok(RunOutcome { success, candidates })
}

/// Upper bound on the resolution probability of any d'-layer width-w
/// strategy: min(1, w * gamma^(k - d')).
pub fn separation_bound(k: usize, d_prime: usize, width: usize, gamma: f64) -> Result<f64, GenError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(GenError::InvalidParams(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if d_prime >= k || width < 1 {
        return Err(GenError::InvalidParams(format!("need d' < k and width >= 1, got d'={d_prime} k={k} w={width}")));
    }
    Ok((width as f64 * gamma.powi((k - d_prime) as i32)).min(1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub trials: usize,
    /// Fraction of trials where some candidate was fully valid.
    pub strategy_mean: f64,
    pub strategy_stderr: f64,
    /// Fraction of (trial, candidate) pairs that were fully valid.
    pub candidate_mean: f64,
    pub candidate_stderr: f64,
}

fn binomial_stderr(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Monte Carlo estimate over freshly generated chains, one independent RNG
/// stream per trial (counter-mode split of the master seed), so results do
/// not depend on scheduling or thread count.
pub fn estimate_resolution_probability(
    k: usize,
    m: usize,
    s: usize,
    run: &StrategyRun,
    trials: usize,
    seed: u64,
) -> Result<Estimate, GenError> {
    if trials < 1 {
        return Err(GenError::InvalidParams("trials must be at least 1".into()));
    }
    let per_trial = |t: usize| -> Result<(u32, u32), GenError> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let chain = generate_chain(k, m, s, &mut rng)?;
        let outcome = run_parallel_strategy(&chain, run, &mut rng)?;
        let good = outcome.candidates.iter().filter(|c| c.violations == 0).count() as u32;
        Ok((u32::from(outcome.success), good))
    };
    let results: Result<Vec<(u32, u32)>, GenError> = (0..trials).into_par_iter().map(per_trial).collect();
    let results = results?;
    let successes: u64 = results.iter().map(|&(s, _)| s as u64).sum();
    let good_candidates: u64 = results.iter().map(|&(_, g)| g as u64).sum();
    let strategy_mean = successes as f64 / trials as f64;
    let candidate_total = trials * run.width;
    let candidate_mean = good_candidates as f64 / candidate_total as f64;
    Ok(Estimate {
        trials,
        strategy_mean,
        strategy_stderr: binomial_stderr(strategy_mean, trials),
        candidate_mean,
        candidate_stderr: binomial_stderr(candidate_mean, candidate_total),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    Uniform,
    Aligned,
}

#[derive(Clone, Debug)]
pub struct TradeoffConfig {
    pub rounds: usize,
    pub width: usize,
    /// Message budget in bits per position; entry 0 is unused and must be 0.
    pub bits: Vec<u32>,
    pub ensemble: Ensemble,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct LinkStat {
    pub position: usize,
    pub informed: bool,
    pub success_rate: f64,
}

#[derive(Clone, Debug)]
pub struct TradeoffReport {
    pub success_mean: f64,
    pub success_stderr: f64,
    /// log2(width) + sum of uninformed-link budgets.
    pub lhs_bits: f64,
    /// |uninformed links| * log2(m/s).
    pub rhs_bits: f64,
    pub satisfied: bool,
    /// Every trial resolved; the budget inequality is a lower bound for
    /// strategies in this regime.
    pub certain: bool,
    pub per_link: Vec<LinkStat>,
}

/// Communication-bounded layered resolution with a deterministic per-link
/// protocol:
///
/// * position 0 and informed links resolve to the lowest valid value, free of
///   charge (the owning player knows the fixed predecessor and its own row);
/// * an uninformed link's player sends the low b bits of the lowest element
///   of the row indexed by a placeholder predecessor announcement (value 0;
///   nothing better is fixed yet), and candidate j decodes to the j-th lowest
///   value matching those bits.
///
/// On the aligned ensemble with b = log2(m/s) the message pins the shared
/// residue class and decoding succeeds with certainty; on the uniform
/// ensemble with b = 0 the decoder degenerates to a fixed guess that lands in
/// the row with probability s/m.
pub fn simulate_tradeoff(k: usize, m: usize, s: usize, config: &TradeoffConfig) -> Result<TradeoffReport, GenError> {
    if config.trials < 1 || config.width < 1 {
        return Err(GenError::InvalidParams("trials and width must be at least 1".into()));
    }
    if config.bits.len() != k {
        return Err(GenError::InvalidParams(format!("bits vector must have length k={k}")));
    }
    if config.bits[0] != 0 {
        return Err(GenError::InvalidParams("bits[0] is unused and must be 0".into()));
    }
    let assign = LayerAssignment::contiguous(k, config.rounds)?;
    let uninformed = assign.uninformed_positions();

    let per_trial = |t: usize| -> Result<(bool, Vec<u32>), GenError> {
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        rng.set_stream(t as u64);
        let chain = match config.ensemble {
            Ensemble::Uniform => generate_chain(k, m, s, &mut rng)?,
            Ensemble::Aligned => generate_aligned_chain(k, m, s, &mut rng)?,
        };
        let mut any_valid = false;
        let mut link_ok = vec![0u32; k];
        for candidate in 0..config.width {
            let mut values = vec![usize::MAX; k];
            for layer in 0..assign.d_prime() {
                for pos in (0..k).filter(|&p| assign.layer_of(p) == layer) {
                    values[pos] = if pos == 0 {
                        chain.p1[0]
                    } else if assign.layer_of(pos - 1) < layer {
                        chain.rows[pos - 1][values[pos - 1]][0]
                    } else {
                        let b = config.bits[pos];
                        let announced_row = &chain.rows[pos - 1][0];
                        let message = if b >= usize::BITS { announced_row[0] } else { announced_row[0] & ((1usize << b) - 1) };
                        let matching: Vec<usize> = (0..m)
                            .filter(|&v| b >= usize::BITS || v & ((1usize << b) - 1) == message)
                            .collect();
                        matching[candidate % matching.len()]
                    };
                }
            }
            let check = check_tuple(&chain, &values)?;
            any_valid |= check.valid;
            if chain.p1.contains(&values[0]) {
                link_ok[0] += 1;
            }
            for l in 1..k {
                if chain.rows[l - 1][values[l - 1]].contains(&values[l]) {
                    link_ok[l] += 1;
                }
            }
        }
        Ok((any_valid, link_ok))
    };

    let results: Result<Vec<(bool, Vec<u32>)>, GenError> = (0..config.trials).into_par_iter().map(per_trial).collect();
    let results = results?;
    let successes = results.iter().filter(|(v, _)| *v).count();
    let success_mean = successes as f64 / config.trials as f64;
    let observations = (config.trials * config.width) as f64;
    let per_link = (0..k)
        .map(|pos| LinkStat {
            position: pos,
            informed: !uninformed.contains(&pos),
            success_rate: results.iter().map(|(_, ok)| ok[pos] as f64).sum::<f64>() / observations,
        })
        .collect();
    let lhs_bits = (config.width as f64).log2() + uninformed.iter().map(|&l| config.bits[l] as f64).sum::<f64>();
    let rhs_bits = uninformed.len() as f64 * (m as f64 / s as f64).log2();
    Ok(TradeoffReport {
        success_mean,
        success_stderr: binomial_stderr(success_mean, config.trials),
        lhs_bits,
        rhs_bits,
        satisfied: lhs_bits >= rhs_bits - 1e-9,
        certain: successes == config.trials,
        per_link,
    })
}

/// Contiguous blocks with per-block sequential depth |B_i| - 1; the total
/// rounds-plus-depth cost is exactly k for every d.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConservationPlan {
    pub blocks: Vec<std::ops::Range<usize>>,
    pub depths: Vec<usize>,
}

impl ConservationPlan {
    pub fn total(&self) -> usize {
        self.depths.iter().map(|&c| 1 + c).sum()
    }
}

pub fn conservation_plan(k: usize, d: usize) -> Result<ConservationPlan, GenError> {
    if d < 1 || d > k {
        return Err(GenError::InvalidParams(format!("need 1 <= d <= k, got d={d} k={k}")));
    }
    let base = k / d;
    let extra = k % d;
    let mut blocks = Vec::with_capacity(d);
    let mut depths = Vec::with_capacity(d);
    let mut start = 0;
    for i in 0..d {
        let size = base + usize::from(i < extra);
        blocks.push(start..start + size);
        depths.push(size - 1);
        start += size;
    }
    Ok(ConservationPlan { blocks, depths })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConservationReport {
    pub k: usize,
    pub partitions_checked: u64,
    pub min_total: usize,
    pub all_satisfy: bool,
}

/// Exhaustively enumerates the orderly layerings of the k-chain (layer labels
/// nondecreasing along the chain, i.e. contiguous blocks; a position cannot
/// resolve before its predecessor's layer) and checks that rounds plus
/// in-layer chain depth never undercuts k.
pub fn verify_conservation_lower_bound(k: usize, max_partitions: u64) -> Result<ConservationReport, GenError> {
    if k < 1 || k > 12 {
        return Err(GenError::InvalidParams(format!("need 1 <= k <= 12, got {k}")));
    }
    let needed = 1u64 << (k - 1);
    if needed > max_partitions {
        return Err(GenError::TooLarge { needed, limit: max_partitions });
    }
    let mut min_total = usize::MAX;
    let mut all_satisfy = true;
    // Bit i of the mask cuts the chain between positions i and i+1.
    for cuts in 0..needed {
        let mut total = 0;
        let mut block_size = 1;
        for i in 0..k - 1 {
            if cuts >> i & 1 == 1 {
                total += block_size;
                block_size = 1;
            } else {
                block_size += 1;
            }
        }
        total += block_size;
        min_total = min_total.min(total);
        all_satisfy &= total >= k;
    }
    Ok(ConservationReport { k, partitions_checked: needed, min_total, all_satisfy })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn full_sparsity_row_is_everything() {
        let chain = generate_chain(1, 3, 3, &mut rng(1)).unwrap();
        assert_eq!(chain.p1, vec![0, 1, 2]);
    }

    #[test]
    fn unit_sparsity_rows_are_singletons() {
        let chain = generate_chain(2, 2, 1, &mut rng(2)).unwrap();
        assert_eq!(chain.p1.len(), 1);
        for row in &chain.rows[0] {
            assert_eq!(row.len(), 1);
        }
    }

    #[test]
    fn row_membership_marginal_matches_sparsity_ratio() {
        let mut r = rng(3);
        let trials = 100_000;
        let mut hits = 0;
        for _ in 0..trials {
            let chain = generate_chain(2, 8, 2, &mut r).unwrap();
            if chain.rows[0][0].contains(&3) {
                hits += 1;
            }
        }
        let p = hits as f64 / trials as f64;
        let sigma = (0.25 * 0.75 / trials as f64).sqrt();
        assert!((p - 0.25).abs() <= 3.0 * sigma, "marginal {p} too far from 0.25");
    }

    #[test]
    fn generation_is_reproducible_per_seed() {
        let a = generate_chain(5, 8, 2, &mut rng(7)).unwrap();
        let b = generate_chain(5, 8, 2, &mut rng(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sequential_output_is_valid() {
        for seed in 0..50 {
            let chain = generate_chain(6, 8, 2, &mut rng(seed)).unwrap();
            let tuple = sequential_resolve(&chain);
            let check = check_tuple(&chain, &tuple).unwrap();
            assert!(check.valid);
            assert_eq!(check.violations, 0);
        }
    }

    #[test]
    fn unit_sparsity_tuple_is_unique() {
        let chain = generate_chain(4, 5, 1, &mut rng(9)).unwrap();
        let tuple = sequential_resolve(&chain);
        let mut expected = vec![chain.p1[0]];
        for l in 1..4 {
            expected.push(chain.rows[l - 1][expected[l - 1]][0]);
        }
        assert_eq!(tuple, expected);
        assert!(check_tuple(&chain, &tuple).unwrap().valid);
    }

    #[test]
    fn first_position_violation_counts_once() {
        let chain = generate_chain(3, 6, 2, &mut rng(11)).unwrap();
        let mut tuple = sequential_resolve(&chain);
        let bad = (0..6).find(|v| !chain.p1.contains(v)).unwrap();
        // Keep the links valid by rebuilding them from the corrupted start.
        tuple[0] = bad;
        tuple[1] = chain.rows[0][bad][0];
        tuple[2] = chain.rows[1][tuple[1]][0];
        let check = check_tuple(&chain, &tuple).unwrap();
        assert_eq!(check.violations, 1);
        assert!(!check.valid);
    }

    #[test]
    fn all_same_value_violations_match_direct_scan() {
        let chain = generate_chain(6, 8, 2, &mut rng(13)).unwrap();
        let tuple = vec![4; 6];
        let check = check_tuple(&chain, &tuple).unwrap();
        let mut expected = usize::from(!chain.p1.contains(&4));
        for l in 1..6 {
            expected += usize::from(!chain.rows[l - 1][4].contains(&4));
        }
        assert_eq!(check.violations, expected);
    }

    #[test]
    fn tuple_length_checked() {
        let chain = generate_chain(3, 4, 2, &mut rng(15)).unwrap();
        assert!(matches!(
            check_tuple(&chain, &[0, 1]),
            Err(GenError::LengthMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn uninformed_link_counts() {
        let a = LayerAssignment::new(vec![0, 0, 0, 1, 1]).unwrap();
        assert_eq!(a.count_uninformed_links(), 3);
        assert_eq!(a.count_uninformed_links(), a.k() - a.d_prime());
        let one = LayerAssignment::contiguous(6, 1).unwrap();
        assert_eq!(one.count_uninformed_links(), 5);
        let seq = LayerAssignment::contiguous(6, 6).unwrap();
        assert_eq!(seq.count_uninformed_links(), 0);
        let alternating = LayerAssignment::new(vec![0, 1, 0, 1, 0]).unwrap();
        assert_eq!(alternating.count_uninformed_links(), 2);
    }

    #[test]
    fn empty_layer_rejected() {
        assert!(LayerAssignment::new(vec![0, 2]).is_err());
    }

    #[test]
    fn contiguous_blocks_put_remainder_first() {
        let a = LayerAssignment::contiguous(6, 5).unwrap();
        assert_eq!((0..6).map(|p| a.layer_of(p)).collect::<Vec<_>>(), vec![0, 0, 1, 2, 3, 4]);
        assert_eq!(a.count_uninformed_links(), 1);
    }

    #[test]
    fn sequential_assignment_always_succeeds() {
        let run = StrategyRun { assignment: LayerAssignment::contiguous(6, 6).unwrap(), width: 1, policy: Policy::UniformGuess };
        for seed in 0..20 {
            let chain = generate_chain(6, 8, 2, &mut rng(seed)).unwrap();
            assert!(run_parallel_strategy(&chain, &run, &mut rng(seed + 1)).unwrap().success);
        }
    }

    #[test]
    fn dense_chain_always_succeeds() {
        let run = StrategyRun { assignment: LayerAssignment::contiguous(5, 2).unwrap(), width: 1, policy: Policy::UniformGuess };
        let chain = generate_chain(5, 4, 4, &mut rng(21)).unwrap();
        for seed in 0..20 {
            assert!(run_parallel_strategy(&chain, &run, &mut rng(seed)).unwrap().success);
        }
    }

    #[test]
    fn three_block_success_rate_matches_cube_of_ratio() {
        let run = StrategyRun { assignment: LayerAssignment::contiguous(6, 3).unwrap(), width: 1, policy: Policy::UniformGuess };
        let est = estimate_resolution_probability(6, 8, 2, &run, 20_000, 23).unwrap();
        let expected = 0.25f64.powi(3);
        assert!(
            (est.strategy_mean - expected).abs() <= 4.0 * est.strategy_stderr.max(1e-4),
            "mean {} vs expected {expected}",
            est.strategy_mean
        );
    }

    #[test]
    fn estimate_is_deterministic_per_seed() {
        let run = StrategyRun { assignment: LayerAssignment::contiguous(4, 2).unwrap(), width: 2, policy: Policy::UniformGuess };
        let a = estimate_resolution_probability(4, 8, 2, &run, 5_000, 31).unwrap();
        let b = estimate_resolution_probability(4, 8, 2, &run, 5_000, 31).unwrap();
        assert_eq!(a.strategy_mean, b.strategy_mean);
        assert_eq!(a.candidate_mean, b.candidate_mean);
    }

    #[test]
    fn sequential_estimate_is_exactly_one() {
        let run = StrategyRun { assignment: LayerAssignment::contiguous(6, 6).unwrap(), width: 1, policy: Policy::UniformGuess };
        let est = estimate_resolution_probability(6, 8, 2, &run, 2_000, 37).unwrap();
        assert_eq!(est.strategy_mean, 1.0);
    }

    #[test]
    fn valid_greedy_no_worse_than_uniform_on_informed_successor() {
        // Alternating layers put fixed successors next to uninformed slots,
        // where the greedy preimage filter can only help.
        let assignment = LayerAssignment::new(vec![0, 1, 0, 1]).unwrap();
        let uniform = StrategyRun { assignment: assignment.clone(), width: 1, policy: Policy::UniformGuess };
        let greedy = StrategyRun { assignment, width: 1, policy: Policy::ValidGreedy };
        let eu = estimate_resolution_probability(4, 8, 2, &uniform, 20_000, 41).unwrap();
        let eg = estimate_resolution_probability(4, 8, 2, &greedy, 20_000, 41).unwrap();
        assert!(eg.strategy_mean >= eu.strategy_mean - 3.0 * eu.strategy_stderr);
    }

    #[test]
    fn separation_bound_values() {
        assert_eq!(separation_bound(6, 3, 1, 0.25).unwrap(), 1.0 / 64.0);
        assert_eq!(separation_bound(6, 3, 64, 0.25).unwrap(), 1.0);
        assert_eq!(separation_bound(5, 2, 1, 1.0).unwrap(), 1.0);
        assert!(separation_bound(5, 5, 1, 0.25).is_err());
        assert!(separation_bound(5, 2, 1, 0.0).is_err());
    }

    #[test]
    fn tradeoff_blind_decoder_matches_ratio() {
        let config = TradeoffConfig {
            rounds: 1,
            width: 1,
            bits: vec![0, 0],
            ensemble: Ensemble::Uniform,
            trials: 50_000,
            seed: 43,
        };
        let report = simulate_tradeoff(2, 8, 2, &config).unwrap();
        let sigma = (0.25 * 0.75 / 50_000.0f64).sqrt();
        assert!((report.success_mean - 0.25).abs() <= 3.0 * sigma, "mean {}", report.success_mean);
        assert!(!report.satisfied);
        assert!(!report.certain);
        assert_eq!(report.rhs_bits, 2.0);
    }

    #[test]
    fn tradeoff_full_budget_on_aligned_rows_is_certain() {
        let config = TradeoffConfig {
            rounds: 5,
            width: 1,
            bits: vec![0, 2, 0, 0, 0, 0],
            ensemble: Ensemble::Aligned,
            trials: 2_000,
            seed: 47,
        };
        // Contiguous 5-layer split of 6 positions leaves link 1 uninformed.
        let report = simulate_tradeoff(6, 8, 2, &config).unwrap();
        assert_eq!(report.success_mean, 1.0);
        assert!(report.certain);
        assert!(report.satisfied);
        assert_eq!(report.lhs_bits, 2.0);
        assert_eq!(report.rhs_bits, 2.0);
        for link in &report.per_link {
            assert_eq!(link.success_rate, 1.0, "link {} not certain", link.position);
        }
    }

    #[test]
    fn tradeoff_informed_links_always_succeed() {
        let config = TradeoffConfig {
            rounds: 3,
            width: 1,
            bits: vec![0; 6],
            ensemble: Ensemble::Uniform,
            trials: 5_000,
            seed: 53,
        };
        let report = simulate_tradeoff(6, 8, 2, &config).unwrap();
        for link in report.per_link.iter().filter(|l| l.informed) {
            assert_eq!(link.success_rate, 1.0, "informed link {}", link.position);
        }
        for link in report.per_link.iter().filter(|l| !l.informed && l.position > 0) {
            assert!((link.success_rate - 0.25).abs() < 0.03, "uninformed link {} rate {}", link.position, link.success_rate);
        }
    }

    #[test]
    fn conservation_plan_examples() {
        let p = conservation_plan(6, 2).unwrap();
        assert_eq!(p.blocks, vec![0..3, 3..6]);
        assert_eq!(p.depths, vec![2, 2]);
        assert_eq!(p.total(), 6);
        let seq = conservation_plan(5, 5).unwrap();
        assert!(seq.depths.iter().all(|&c| c == 0));
        assert_eq!(seq.total(), 5);
        let bundle = conservation_plan(5, 1).unwrap();
        assert_eq!(bundle.depths, vec![4]);
        assert_eq!(bundle.total(), 5);
    }

    #[test]
    fn conservation_lower_bound_holds() {
        for k in 1..=8 {
            let report = verify_conservation_lower_bound(k, 1 << 12).unwrap();
            assert_eq!(report.min_total, k);
            assert!(report.all_satisfy);
        }
        let three = verify_conservation_lower_bound(3, 16).unwrap();
        assert_eq!(three.partitions_checked, 4);
        let one = verify_conservation_lower_bound(1, 16).unwrap();
        assert_eq!(one.min_total, 1);
    }

    #[test]
    fn conservation_enumeration_guard() {
        assert!(matches!(
            verify_conservation_lower_bound(12, 16),
            Err(GenError::TooLarge { .. })
        ));
        assert!(verify_conservation_lower_bound(13, 1 << 20).is_err());
    }
}
