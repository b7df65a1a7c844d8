//! Determination depth, offline and online.
//!
//! Offline depth reorganizes a fixed commitment word into the fewest groups
//! whose members can land in any order without changing the result. Two
//! estimators:
//!
//! * `offline_depth` builds a pairwise dependency DAG and takes its longest
//!   chain. Each pair (i, j) is probed at the context where every other word
//!   commitment before j has already landed; probing at the plain word prefix
//!   misses dependencies that only surface once a later prerequisite is in.
//! * `brute_force_min_layers` searches all ordered partitions (mask DP over
//!   the applied subset plus evaluation state) and is the reference answer for
//!   words of up to 12 commitments.
//!
//! Online depth is the value of a rendezvous game against the environment:
//! the strategy spends one round per commuting layer, the environment may
//! interleave a move before any layer lands, and waiting hands the turn to the
//! environment outright. Unresolvable positions (no line of play pins a single
//! outcome before the horizon) get the top value.

use std::collections::HashMap;

use crate::spec::{CommitmentId, CompiledSpec, CoreError, EventLabel, History, OutcomeSet};

/// Minimax rounds-to-resolution. `Unresolvable` orders above every finite
/// value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum DepthValue {
    Finite(u64),
    Unresolvable,
}

impl DepthValue {
    pub fn plus_one(self) -> DepthValue {
        match self {
            DepthValue::Finite(d) => DepthValue::Finite(d + 1),
            DepthValue::Unresolvable => DepthValue::Unresolvable,
        }
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            DepthValue::Finite(d) => Some(d),
            DepthValue::Unresolvable => None,
        }
    }
}

impl std::fmt::Display for DepthValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DepthValue::Finite(d) => write!(f, "{d}"),
            DepthValue::Unresolvable => write!(f, "unresolvable"),
        }
    }
}

/// A run of commitments applied after a base history.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Determination {
    pub history: History,
    pub commitments: Vec<CommitmentId>,
}

impl Determination {
    pub fn from_root(commitments: Vec<CommitmentId>) -> Self {
        Determination { history: History::new(), commitments }
    }
}

/// Pairwise dependency graph over word positions; an edge (i, j) means the
/// two applications do not interchange at the probed context, so i must stay
/// strictly earlier.
#[derive(Clone, Debug)]
pub struct DependencyDag {
    pub word: Vec<CommitmentId>,
    pub edges: Vec<(usize, usize)>,
}

impl DependencyDag {
    /// Longest chain measured in nodes; empty graph gives 0.
    pub fn longest_chain(&self) -> Result<usize, CoreError> {
        let n = self.word.len();
        let mut adj = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for &(i, j) in &self.edges {
            if i >= n || j >= n {
                return Err(CoreError::SpecInvalid("dependency edge out of range".into()));
            }
            adj[i].push(j);
            indeg[j] += 1;
        }
        let mut order: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut head = 0;
        let mut chain = vec![1usize; n];
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &w in &adj[v] {
                chain[w] = chain[w].max(chain[v] + 1);
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    order.push(w);
                }
            }
        }
        if order.len() < n {
            return Err(CoreError::CyclicDependency);
        }
        Ok(chain.iter().copied().max().unwrap_or(0))
    }
}

const MAX_DAG_WORD: usize = 32;
const MAX_BRUTE_WORD: usize = 12;
const MAX_ONLINE_BASIS: usize = 16;

fn check_offline(spec: &CompiledSpec, det: &Determination, max: usize) -> Result<(), CoreError> {
    if !spec.env_moves.is_empty() {
        return Err(CoreError::SpecInvalid("offline analysis requires a spec with no environment moves".into()));
    }
    if det.commitments.len() > max {
        return Err(CoreError::TooManyCommitments { n: det.commitments.len(), max });
    }
    let mut seen = vec![false; spec.basis.len()];
    for &c in &det.commitments {
        if c >= spec.basis.len() {
            return Err(CoreError::CommitmentNotInBasis(c));
        }
        if seen[c] {
            return Err(CoreError::SpecInvalid(format!("commitment `{}` repeats in the word", spec.basis[c].name)));
        }
        seen[c] = true;
    }
    Ok(())
}

/// Builds the pairwise dependency DAG for an offline determination.
///
/// Pair (i, j), i < j in word order, is probed at the context consisting of
/// the base history plus every word commitment before j except i. The edge is
/// recorded when the two orders of (i, j) leave different evaluation states.
pub fn dependency_dag(spec: &CompiledSpec, det: &Determination) -> Result<DependencyDag, CoreError> {
    check_offline(spec, det, MAX_DAG_WORD)?;
    let word = det.commitments.clone();
    let base = spec.state_at(&det.history)?;
    let mut edges = Vec::new();
    for j in 1..word.len() {
        for i in 0..j {
            let mut ctx = base.clone();
            for (pos, &c) in word.iter().enumerate().take(j) {
                if pos != i {
                    spec.step(&mut ctx, EventLabel::Commit(c))?;
                }
            }
            let mut ij = ctx.clone();
            spec.step(&mut ij, EventLabel::Commit(word[i]))?;
            spec.step(&mut ij, EventLabel::Commit(word[j]))?;
            let mut ji = ctx;
            spec.step(&mut ji, EventLabel::Commit(word[j]))?;
            spec.step(&mut ji, EventLabel::Commit(word[i]))?;
            if ij.cur != ji.cur || ij.excl != ji.excl {
                edges.push((i, j));
            }
        }
    }
    Ok(DependencyDag { word, edges })
}

/// Longest forced chain of the determination's dependency DAG.
pub fn offline_depth(spec: &CompiledSpec, det: &Determination) -> Result<usize, CoreError> {
    dependency_dag(spec, det)?.longest_chain()
}

/// Reference offline depth: minimum number of layers over all ordered
/// partitions of the word such that each layer is order-independent at its
/// induced prefix and the partitioned application reproduces the word's final
/// state. Exponential; capped at 12 commitments.
pub fn brute_force_min_layers(spec: &CompiledSpec, det: &Determination) -> Result<usize, CoreError> {
    check_offline(spec, det, MAX_BRUTE_WORD)?;
    let word = &det.commitments;
    let m = word.len();
    if m == 0 {
        return Ok(0);
    }
    let base = spec.state_at(&det.history)?;
    let mut word_final = base.clone();
    for &c in word {
        spec.step(&mut word_final, EventLabel::Commit(c))?;
    }
    let full: u16 = if m == 16 { u16::MAX } else { (1u16 << m) - 1 };

    struct Search<'a> {
        spec: &'a CompiledSpec,
        word: &'a [CommitmentId],
        target_cur: OutcomeSet,
        target_excl: OutcomeSet,
        full: u16,
        memo: HashMap<(u16, OutcomeSet, OutcomeSet), Option<usize>>,
    }

    impl Search<'_> {
        fn rec(&mut self, mask: u16, state: &crate::spec::EvalState) -> Result<Option<usize>, CoreError> {
            if mask == self.full {
                let hit = state.cur == self.target_cur && state.excl == self.target_excl;
                return Ok(if hit { Some(0) } else { None });
            }
            let key = (mask, state.cur.clone(), state.excl.clone());
            if let Some(&cached) = self.memo.get(&key) {
                return Ok(cached);
            }
            let remaining = self.full & !mask;
            let mut best: Option<usize> = None;
            let mut sub = remaining;
            while sub != 0 {
                let layer: Vec<CommitmentId> =
                    (0..self.word.len()).filter(|&i| sub >> i & 1 == 1).map(|i| self.word[i]).collect();
                if let Some(next) = self.spec.layer_end_state(state, &layer)? {
                    if let Some(rest) = self.rec(mask | sub, &next)? {
                        let total = rest + 1;
                        if best.map_or(true, |b| total < b) {
                            best = Some(total);
                        }
                    }
                }
                sub = (sub - 1) & remaining;
            }
            self.memo.insert(key, best);
            Ok(best)
        }
    }

    let mut search = Search {
        spec,
        word,
        target_cur: word_final.cur,
        target_excl: word_final.excl,
        full,
        memo: HashMap::new(),
    };
    // Singleton layers in word order always reproduce the word, so a result
    // exists for every valid input.
    search
        .rec(0, &base)?
        .ok_or_else(|| CoreError::SpecInvalid("no layered reorganization reproduces the word".into()))
}

/// Minimax rounds-to-resolution for the whole spec, from the empty history.
///
/// Per round the strategy either plays a commuting layer of unused basis
/// commitments or waits. A layer is usable only if it stays order-independent
/// and keeps the admissible set nonempty both as played and under every
/// single interleaved environment move; after it lands the environment's
/// interleaved move still counts into the position. Waiting forces the
/// environment to play one available move; with no available move, waiting is
/// not an option. Resolution means a singleton admissible set. Histories are
/// cut at the spec horizon and unresolved positions there count as failures.
pub fn online_minmax_depth(spec: &CompiledSpec) -> Result<DepthValue, CoreError> {
    if spec.basis.len() > MAX_ONLINE_BASIS {
        return Err(CoreError::TooManyCommitments { n: spec.basis.len(), max: MAX_ONLINE_BASIS });
    }
    let mut memo: HashMap<History, DepthValue> = HashMap::new();
    value(spec, &History::new(), &mut memo)
}

fn value(spec: &CompiledSpec, h: &History, memo: &mut HashMap<History, DepthValue>) -> Result<DepthValue, CoreError> {
    if let Some(&v) = memo.get(h) {
        return Ok(v);
    }
    let cur = spec.admissible(h)?;
    let v = if cur.is_singleton() {
        DepthValue::Finite(0)
    } else if cur.is_empty() || h.len() >= spec.horizon {
        DepthValue::Unresolvable
    } else {
        let avail = spec.available_env_moves(h)?;
        let mut best = DepthValue::Unresolvable;

        if !avail.is_empty() {
            let mut worst = DepthValue::Finite(0);
            for &m in &avail {
                let child = h.child(EventLabel::Env(m));
                worst = worst.max(value(spec, &child, memo)?);
            }
            best = best.min(worst);
        }

        let unused: Vec<CommitmentId> = (0..spec.basis.len()).filter(|&c| !h.contains_commit(c)).collect();
        let k = unused.len();
        for mask in 1u32..(1u32 << k) {
            let layer: Vec<CommitmentId> = (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| unused[i]).collect();
            if let Some(val) = layer_value(spec, h, &avail, &layer, memo)? {
                best = best.min(val);
            }
        }
        best
    };
    memo.insert(h.clone(), v);
    Ok(v)
}

/// Value of playing `layer` at `h`, or None when the layer is unusable there.
fn layer_value(
    spec: &CompiledSpec,
    h: &History,
    avail: &[usize],
    layer: &[CommitmentId],
    memo: &mut HashMap<History, DepthValue>,
) -> Result<Option<DepthValue>, CoreError> {
    let mut contexts = vec![h.clone()];
    for &m in avail {
        contexts.push(h.child(EventLabel::Env(m)));
    }
    let layer_events: Vec<EventLabel> = layer.iter().map(|&c| EventLabel::Commit(c)).collect();
    let mut landed = Vec::new();
    for ctx in &contexts {
        if ctx.len() + layer.len() > spec.horizon {
            return Ok(None);
        }
        let state = spec.state_at(ctx)?;
        if spec.layer_end_state(&state, layer)?.is_none() {
            return Ok(None);
        }
        let after = ctx.extended(&layer_events);
        if !spec.nonempty_under_environment(&after)? {
            return Ok(None);
        }
        landed.push(after);
    }
    let mut worst = DepthValue::Finite(0);
    for after in &landed {
        worst = worst.max(value(spec, after, memo)?);
    }
    Ok(Some(worst.plus_one()))
}
