//! Explicit commitment specifications over finite outcome spaces.
//!
//! A specification maps histories (finite sequences of environment moves and
//! commitment applications) to admissible outcome sets. Environment moves may
//! enlarge or shrink the admissible set; commitments only narrow it, and an
//! outcome excluded by a commitment stays excluded at every later history even
//! if the environment re-enlarges the base set. All effects are data-driven so
//! specs round-trip through a structured text document.
//!
//! Commitment effects are functions of the environment subhistory, the set of
//! previously applied commitments, and the current admissible set. They never
//! inspect the order of prior commitment events; this keeps pointwise filters
//! order-independent and makes (applied-set, state) a sound memo key for the
//! layer searches in `depth`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type OutcomeId = usize;
pub type EnvMoveId = usize;
pub type CommitmentId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("commitment index {0} is not in the basis")]
    CommitmentNotInBasis(usize),
    #[error("environment move index {0} is out of range")]
    EnvMoveOutOfRange(usize),
    #[error("history length {len} exceeds horizon {horizon}")]
    HorizonExceeded { len: usize, horizon: usize },
    #[error("too many commitments: {n} (limit {max})")]
    TooManyCommitments { n: usize, max: usize },
    #[error("dependency graph contains a cycle")]
    CyclicDependency,
    #[error("unknown outcome name `{0}`")]
    UnknownOutcome(String),
    #[error("unknown environment move name `{0}`")]
    UnknownEnvMove(String),
    #[error("unknown commitment name `{0}`")]
    UnknownCommitment(String),
    #[error("specification is invalid: {0}")]
    SpecInvalid(String),
}

/// Dense bit set over outcome indices `0..universe`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeSet {
    universe: usize,
    words: Vec<u64>,
}

impl OutcomeSet {
    pub fn empty(universe: usize) -> Self {
        OutcomeSet { universe, words: vec![0; universe.div_ceil(64)] }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::empty(universe);
        for o in 0..universe {
            s.insert(o);
        }
        s
    }

    pub fn from_iter<I: IntoIterator<Item = OutcomeId>>(universe: usize, iter: I) -> Self {
        let mut s = Self::empty(universe);
        for o in iter {
            s.insert(o);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn insert(&mut self, o: OutcomeId) {
        debug_assert!(o < self.universe);
        self.words[o / 64] |= 1 << (o % 64);
    }

    pub fn remove(&mut self, o: OutcomeId) {
        if o < self.universe {
            self.words[o / 64] &= !(1 << (o % 64));
        }
    }

    pub fn contains(&self, o: OutcomeId) -> bool {
        o < self.universe && self.words[o / 64] >> (o % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_singleton(&self) -> bool {
        self.count() == 1
    }

    pub fn intersect(&self, other: &OutcomeSet) -> OutcomeSet {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        OutcomeSet { universe: self.universe, words }
    }

    pub fn union(&self, other: &OutcomeSet) -> OutcomeSet {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        OutcomeSet { universe: self.universe, words }
    }

    pub fn subtract(&self, other: &OutcomeSet) -> OutcomeSet {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect();
        OutcomeSet { universe: self.universe, words }
    }

    pub fn is_subset_of(&self, other: &OutcomeSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn min_element(&self) -> Option<OutcomeId> {
        self.iter().next()
    }

    pub fn iter(&self) -> impl Iterator<Item = OutcomeId> + '_ {
        (0..self.universe).filter(move |&o| self.contains(o))
    }
}

impl fmt::Debug for OutcomeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, o) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum EventLabel {
    Env(EnvMoveId),
    Commit(CommitmentId),
}

/// Finite event sequence. Histories are bounded by the owning spec's horizon.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug, PartialOrd, Ord)]
pub struct History(pub Vec<EventLabel>);

impl History {
    pub fn new() -> Self {
        History(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, ev: EventLabel) -> History {
        let mut v = self.0.clone();
        v.push(ev);
        History(v)
    }

    pub fn extended(&self, evs: &[EventLabel]) -> History {
        let mut v = self.0.clone();
        v.extend_from_slice(evs);
        History(v)
    }

    pub fn env_subsequence(&self) -> Vec<EnvMoveId> {
        self.0
            .iter()
            .filter_map(|e| match e {
                EventLabel::Env(m) => Some(*m),
                _ => None,
            })
            .collect()
    }

    pub fn commitments(&self) -> Vec<CommitmentId> {
        self.0
            .iter()
            .filter_map(|e| match e {
                EventLabel::Commit(c) => Some(*c),
                _ => None,
            })
            .collect()
    }

    pub fn contains_commit(&self, c: CommitmentId) -> bool {
        self.0.contains(&EventLabel::Commit(c))
    }

    pub fn contains_env(&self, m: EnvMoveId) -> bool {
        self.0.contains(&EventLabel::Env(m))
    }
}

/// Effect of an environment move on the base admissible set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvEffect {
    None,
    Remove(Vec<String>),
    Add(Vec<String>),
    Retain(Vec<String>),
}

/// Availability constraint for an environment move, conjoined per move.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvailabilityRule {
    AtMostOnce,
    ClassAtMostOnce,
    BeforeAnyCommitment,
    AfterEnvMove(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvMoveDef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    pub effect: EnvEffect,
    #[serde(default)]
    pub availability: Vec<AvailabilityRule>,
}

/// Retain predicate over (environment subhistory, outcome).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointwiseRule {
    Retain(Vec<String>),
    Exclude(Vec<String>),
    /// Retain exactly the outcomes proposed by environment moves that have
    /// occurred; everything else is permanently excluded at application time.
    RetainProposed(Vec<(String, Vec<String>)>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    CommitmentApplied(String),
    EnvMoveOccurred(String),
    SetWithin(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformAction {
    Identity,
    RetainSet(Vec<String>),
    KeepMinimum,
    /// Replaces the current set outright. The only action that can enlarge;
    /// exists so non-conforming specs are expressible and detectable.
    ReplaceWith(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformRule {
    #[serde(default)]
    pub when: Vec<Condition>,
    pub then: TransformAction,
    #[serde(default = "default_identity")]
    pub otherwise: TransformAction,
}

fn default_identity() -> TransformAction {
    TransformAction::Identity
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitmentKind {
    Pointwise(PointwiseRule),
    Transform(TransformRule),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentDef {
    pub name: String,
    #[serde(flatten)]
    pub kind: CommitmentKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub env_history: Vec<String>,
    pub admissible: Vec<String>,
}

/// Fully enumerable specification. The admissible table must contain an entry
/// for the empty history; entries for longer environment subsequences override
/// the compositional per-move effects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitSpec {
    pub outcomes: Vec<String>,
    pub horizon: usize,
    #[serde(default)]
    pub env_moves: Vec<EnvMoveDef>,
    pub basis: Vec<CommitmentDef>,
    pub admissible_table: Vec<TableEntry>,
}

/// Index-resolved form used by every algorithm.
#[derive(Clone, Debug)]
pub struct CompiledSpec {
    pub outcomes: Vec<String>,
    pub horizon: usize,
    pub env_moves: Vec<CompiledEnvMove>,
    pub basis: Vec<CompiledCommitment>,
    base_overrides: HashMap<Vec<EnvMoveId>, OutcomeSet>,
}

#[derive(Clone, Debug)]
pub struct CompiledEnvMove {
    pub name: String,
    pub class: Option<String>,
    pub effect: CompiledEnvEffect,
    pub availability: Vec<CompiledAvailability>,
}

#[derive(Clone, Debug)]
pub enum CompiledEnvEffect {
    None,
    Remove(OutcomeSet),
    Add(OutcomeSet),
    Retain(OutcomeSet),
}

#[derive(Clone, Debug)]
pub enum CompiledAvailability {
    AtMostOnce,
    ClassAtMostOnce,
    BeforeAnyCommitment,
    AfterEnvMove(EnvMoveId),
}

#[derive(Clone, Debug)]
pub struct CompiledCommitment {
    pub name: String,
    pub kind: CompiledCommitmentKind,
}

#[derive(Clone, Debug)]
pub enum CompiledCommitmentKind {
    Pointwise(CompiledPointwise),
    Transform(CompiledTransform),
}

#[derive(Clone, Debug)]
pub enum CompiledPointwise {
    Retain(OutcomeSet),
    Exclude(OutcomeSet),
    RetainProposed(Vec<(EnvMoveId, OutcomeSet)>),
}

#[derive(Clone, Debug)]
pub struct CompiledTransform {
    pub when: Vec<CompiledCondition>,
    pub then: CompiledAction,
    pub otherwise: CompiledAction,
}

#[derive(Clone, Debug)]
pub enum CompiledCondition {
    CommitmentApplied(CommitmentId),
    EnvMoveOccurred(EnvMoveId),
    SetWithin(OutcomeSet),
}

#[derive(Clone, Debug)]
pub enum CompiledAction {
    Identity,
    RetainSet(OutcomeSet),
    KeepMinimum,
    ReplaceWith(OutcomeSet),
}

/// Evaluation state after walking a history prefix.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) struct EvalState {
    pub env_seq: Vec<EnvMoveId>,
    pub applied: Vec<bool>,
    pub cur: OutcomeSet,
    /// Outcomes permanently excluded by commitments so far.
    pub excl: OutcomeSet,
}

impl ExplicitSpec {
    pub fn compile(&self) -> Result<CompiledSpec, CoreError> {
        let n = self.outcomes.len();
        if n == 0 {
            return Err(CoreError::SpecInvalid("outcome list is empty".into()));
        }
        let mut outcome_idx = HashMap::new();
        for (i, name) in self.outcomes.iter().enumerate() {
            if outcome_idx.insert(name.clone(), i).is_some() {
                return Err(CoreError::SpecInvalid(format!("duplicate outcome `{name}`")));
            }
        }
        let mut move_idx = HashMap::new();
        for (i, m) in self.env_moves.iter().enumerate() {
            if move_idx.insert(m.name.clone(), i).is_some() {
                return Err(CoreError::SpecInvalid(format!("duplicate env move `{}`", m.name)));
            }
        }
        let mut commit_idx = HashMap::new();
        for (i, c) in self.basis.iter().enumerate() {
            if commit_idx.insert(c.name.clone(), i).is_some() {
                return Err(CoreError::SpecInvalid(format!("duplicate commitment `{}`", c.name)));
            }
        }
        let resolve_outcomes = |names: &[String]| -> Result<OutcomeSet, CoreError> {
            let mut s = OutcomeSet::empty(n);
            for name in names {
                let &i = outcome_idx.get(name).ok_or_else(|| CoreError::UnknownOutcome(name.clone()))?;
                s.insert(i);
            }
            Ok(s)
        };
        let resolve_move = |name: &String| -> Result<EnvMoveId, CoreError> {
            move_idx.get(name).copied().ok_or_else(|| CoreError::UnknownEnvMove(name.clone()))
        };

        let mut env_moves = Vec::new();
        for m in &self.env_moves {
            let effect = match &m.effect {
                EnvEffect::None => CompiledEnvEffect::None,
                EnvEffect::Remove(v) => CompiledEnvEffect::Remove(resolve_outcomes(v)?),
                EnvEffect::Add(v) => CompiledEnvEffect::Add(resolve_outcomes(v)?),
                EnvEffect::Retain(v) => CompiledEnvEffect::Retain(resolve_outcomes(v)?),
            };
            let mut availability = Vec::new();
            for r in &m.availability {
                availability.push(match r {
                    AvailabilityRule::AtMostOnce => CompiledAvailability::AtMostOnce,
                    AvailabilityRule::ClassAtMostOnce => CompiledAvailability::ClassAtMostOnce,
                    AvailabilityRule::BeforeAnyCommitment => CompiledAvailability::BeforeAnyCommitment,
                    AvailabilityRule::AfterEnvMove(name) => CompiledAvailability::AfterEnvMove(resolve_move(name)?),
                });
            }
            env_moves.push(CompiledEnvMove { name: m.name.clone(), class: m.class.clone(), effect, availability });
        }

        let mut basis = Vec::new();
        for c in &self.basis {
            let kind = match &c.kind {
                CommitmentKind::Pointwise(p) => CompiledCommitmentKind::Pointwise(match p {
                    PointwiseRule::Retain(v) => CompiledPointwise::Retain(resolve_outcomes(v)?),
                    PointwiseRule::Exclude(v) => CompiledPointwise::Exclude(resolve_outcomes(v)?),
                    PointwiseRule::RetainProposed(entries) => {
                        let mut out = Vec::new();
                        for (mv, outs) in entries {
                            out.push((resolve_move(mv)?, resolve_outcomes(outs)?));
                        }
                        CompiledPointwise::RetainProposed(out)
                    }
                }),
                CommitmentKind::Transform(t) => {
                    let mut when = Vec::new();
                    for cond in &t.when {
                        when.push(match cond {
                            Condition::CommitmentApplied(name) => CompiledCondition::CommitmentApplied(
                                commit_idx.get(name).copied().ok_or_else(|| CoreError::UnknownCommitment(name.clone()))?,
                            ),
                            Condition::EnvMoveOccurred(name) => CompiledCondition::EnvMoveOccurred(resolve_move(name)?),
                            Condition::SetWithin(v) => CompiledCondition::SetWithin(resolve_outcomes(v)?),
                        });
                    }
                    let compile_action = |a: &TransformAction| -> Result<CompiledAction, CoreError> {
                        Ok(match a {
                            TransformAction::Identity => CompiledAction::Identity,
                            TransformAction::RetainSet(v) => CompiledAction::RetainSet(resolve_outcomes(v)?),
                            TransformAction::KeepMinimum => CompiledAction::KeepMinimum,
                            TransformAction::ReplaceWith(v) => CompiledAction::ReplaceWith(resolve_outcomes(v)?),
                        })
                    };
                    CompiledCommitmentKind::Transform(CompiledTransform {
                        when,
                        then: compile_action(&t.then)?,
                        otherwise: compile_action(&t.otherwise)?,
                    })
                }
            };
            basis.push(CompiledCommitment { name: c.name.clone(), kind });
        }

        let mut base_overrides = HashMap::new();
        for entry in &self.admissible_table {
            let mut seq = Vec::new();
            for mv in &entry.env_history {
                seq.push(resolve_move(mv)?);
            }
            base_overrides.insert(seq, resolve_outcomes(&entry.admissible)?);
        }
        if !base_overrides.contains_key(&Vec::new()) {
            return Err(CoreError::SpecInvalid("admissible_table lacks the empty-history entry".into()));
        }
        if base_overrides[&Vec::new()].is_empty() {
            return Err(CoreError::SpecInvalid("admissible set at the empty history is empty".into()));
        }

        Ok(CompiledSpec { outcomes: self.outcomes.clone(), horizon: self.horizon, env_moves, basis, base_overrides })
    }
}

impl CompiledSpec {
    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn commitment_named(&self, name: &str) -> Result<CommitmentId, CoreError> {
        self.basis
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| CoreError::UnknownCommitment(name.to_string()))
    }

    pub fn env_move_named(&self, name: &str) -> Result<EnvMoveId, CoreError> {
        self.env_moves
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| CoreError::UnknownEnvMove(name.to_string()))
    }

    fn base_for(&self, env_seq: &[EnvMoveId]) -> Result<OutcomeSet, CoreError> {
        if let Some(s) = self.base_overrides.get(env_seq) {
            return Ok(s.clone());
        }
        let (prefix, last) = match env_seq.split_last() {
            Some((last, prefix)) => (prefix, *last),
            None => return Err(CoreError::SpecInvalid("admissible_table lacks the empty-history entry".into())),
        };
        let prev = self.base_for(prefix)?;
        let mv = self.env_moves.get(last).ok_or(CoreError::EnvMoveOutOfRange(last))?;
        Ok(match &mv.effect {
            CompiledEnvEffect::None => prev,
            CompiledEnvEffect::Remove(s) => prev.subtract(s),
            CompiledEnvEffect::Add(s) => prev.union(s),
            CompiledEnvEffect::Retain(s) => prev.intersect(s),
        })
    }

    pub(crate) fn initial_state(&self) -> Result<EvalState, CoreError> {
        let base = self.base_for(&[])?;
        Ok(EvalState {
            env_seq: Vec::new(),
            applied: vec![false; self.basis.len()],
            cur: base,
            excl: OutcomeSet::empty(self.outcome_count()),
        })
    }

    /// Effect of one commitment on the current set, given the context. Returns
    /// (new current set, newly excluded outcomes).
    pub(crate) fn commitment_effect(
        &self,
        state: &EvalState,
        c: CommitmentId,
    ) -> Result<(OutcomeSet, OutcomeSet), CoreError> {
        let def = self.basis.get(c).ok_or(CoreError::CommitmentNotInBasis(c))?;
        let n = self.outcome_count();
        Ok(match &def.kind {
            CompiledCommitmentKind::Pointwise(p) => {
                let retained = match p {
                    CompiledPointwise::Retain(s) => s.clone(),
                    CompiledPointwise::Exclude(s) => OutcomeSet::full(n).subtract(s),
                    CompiledPointwise::RetainProposed(entries) => {
                        let mut s = OutcomeSet::empty(n);
                        for (mv, outs) in entries {
                            if state.env_seq.contains(mv) {
                                s = s.union(outs);
                            }
                        }
                        s
                    }
                };
                let newly = OutcomeSet::full(n).subtract(&retained);
                (state.cur.intersect(&retained), newly)
            }
            CompiledCommitmentKind::Transform(t) => {
                let holds = t.when.iter().all(|cond| match cond {
                    CompiledCondition::CommitmentApplied(id) => state.applied.get(*id).copied().unwrap_or(false),
                    CompiledCondition::EnvMoveOccurred(mv) => state.env_seq.contains(mv),
                    CompiledCondition::SetWithin(s) => state.cur.is_subset_of(s),
                });
                let action = if holds { &t.then } else { &t.otherwise };
                let next = match action {
                    CompiledAction::Identity => state.cur.clone(),
                    CompiledAction::RetainSet(s) => state.cur.intersect(s),
                    CompiledAction::KeepMinimum => match state.cur.min_element() {
                        Some(o) => OutcomeSet::from_iter(n, [o]),
                        None => OutcomeSet::empty(n),
                    },
                    CompiledAction::ReplaceWith(s) => s.clone(),
                };
                let newly = state.cur.subtract(&next);
                (next, newly)
            }
        })
    }

    pub(crate) fn step(&self, state: &mut EvalState, ev: EventLabel) -> Result<(), CoreError> {
        match ev {
            EventLabel::Env(m) => {
                if m >= self.env_moves.len() {
                    return Err(CoreError::EnvMoveOutOfRange(m));
                }
                state.env_seq.push(m);
                let base = self.base_for(&state.env_seq)?;
                state.cur = base.subtract(&state.excl);
            }
            EventLabel::Commit(c) => {
                let (next, newly) = self.commitment_effect(state, c)?;
                state.excl = state.excl.union(&newly);
                state.applied[c] = true;
                state.cur = next;
            }
        }
        Ok(())
    }

    pub(crate) fn state_at(&self, h: &History) -> Result<EvalState, CoreError> {
        if h.len() > self.horizon {
            return Err(CoreError::HorizonExceeded { len: h.len(), horizon: self.horizon });
        }
        let mut state = self.initial_state()?;
        for &ev in &h.0 {
            self.step(&mut state, ev)?;
        }
        Ok(state)
    }

    /// Admissible outcome set at a history.
    pub fn admissible(&self, h: &History) -> Result<OutcomeSet, CoreError> {
        Ok(self.state_at(h)?.cur)
    }

    /// Admissible set after appending one commitment to `h`.
    pub fn apply(&self, h: &History, c: CommitmentId) -> Result<OutcomeSet, CoreError> {
        if c >= self.basis.len() {
            return Err(CoreError::CommitmentNotInBasis(c));
        }
        self.admissible(&h.child(EventLabel::Commit(c)))
    }

    pub fn env_available(&self, h: &History, m: EnvMoveId) -> Result<bool, CoreError> {
        let def = self.env_moves.get(m).ok_or(CoreError::EnvMoveOutOfRange(m))?;
        for rule in &def.availability {
            let ok = match rule {
                CompiledAvailability::AtMostOnce => !h.contains_env(m),
                CompiledAvailability::ClassAtMostOnce => match &def.class {
                    Some(cls) => !h.env_subsequence().iter().any(|&x| self.env_moves[x].class.as_deref() == Some(cls)),
                    None => !h.contains_env(m),
                },
                CompiledAvailability::BeforeAnyCommitment => h.commitments().is_empty(),
                CompiledAvailability::AfterEnvMove(req) => h.contains_env(*req),
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn available_env_moves(&self, h: &History) -> Result<Vec<EnvMoveId>, CoreError> {
        (0..self.env_moves.len())
            .filter_map(|m| match self.env_available(h, m) {
                Ok(true) => Some(Ok(m)),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            })
            .collect()
    }

    /// All histories reachable from `h` by available environment moves alone,
    /// within the horizon. Includes `h` itself.
    pub fn env_reachable(&self, h: &History) -> Result<Vec<History>, CoreError> {
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        queue.push_back(h.clone());
        while let Some(cur) = queue.pop_front() {
            if cur.len() < self.horizon {
                for m in self.available_env_moves(&cur)? {
                    queue.push_back(cur.child(EventLabel::Env(m)));
                }
            }
            out.push(cur);
        }
        Ok(out)
    }

    /// True when the admissible set is nonempty at `h` and at every history
    /// the environment can reach from `h` within the horizon.
    pub fn nonempty_under_environment(&self, h: &History) -> Result<bool, CoreError> {
        for ext in self.env_reachable(h)? {
            if self.admissible(&ext)?.is_empty() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Do the two application orders agree at `h` and at every environment
    /// extension within the horizon?
    pub fn commutes_at(&self, h: &History, c1: CommitmentId, c2: CommitmentId) -> Result<bool, CoreError> {
        let r = self.commutation_report(h, c1, c2)?;
        Ok(r.at_history && r.at_env_extensions)
    }

    pub fn commutation_report(
        &self,
        h: &History,
        c1: CommitmentId,
        c2: CommitmentId,
    ) -> Result<CommutationReport, CoreError> {
        for c in [c1, c2] {
            if c >= self.basis.len() {
                return Err(CoreError::CommitmentNotInBasis(c));
            }
        }
        if h.len() + 2 > self.horizon {
            return Err(CoreError::HorizonExceeded { len: h.len() + 2, horizon: self.horizon });
        }
        let a = h.extended(&[EventLabel::Commit(c1), EventLabel::Commit(c2)]);
        let b = h.extended(&[EventLabel::Commit(c2), EventLabel::Commit(c1)]);
        let at_history = self.admissible(&a)? == self.admissible(&b)?;
        let mut at_env_extensions = true;
        for ext in self.env_reachable(&a)? {
            let tail: Vec<EventLabel> = ext.0[a.len()..].to_vec();
            let other = b.extended(&tail);
            if self.admissible(&ext)? != self.admissible(&other)? {
                at_env_extensions = false;
                break;
            }
        }
        Ok(CommutationReport { at_history, at_env_extensions })
    }

    /// End state of applying `layer` at the state `start`, provided every
    /// application order yields the same state. Checked by subset induction:
    /// for each subset of the layer, all one-step ways of reaching it must
    /// agree. Pairwise checks are not enough; a commitment can be inert under
    /// each single companion yet activated by two of them together.
    pub(crate) fn layer_end_state(&self, start: &EvalState, layer: &[CommitmentId]) -> Result<Option<EvalState>, CoreError> {
        let k = layer.len();
        debug_assert!(k <= 16);
        let mut states: Vec<Option<EvalState>> = vec![None; 1 << k];
        states[0] = Some(start.clone());
        for mask in 1u32..(1 << k) {
            let mut agreed: Option<EvalState> = None;
            for i in 0..k {
                if mask >> i & 1 == 0 {
                    continue;
                }
                let prev = match &states[(mask ^ (1 << i)) as usize] {
                    Some(s) => s.clone(),
                    None => return Ok(None),
                };
                let mut next = prev;
                self.step(&mut next, EventLabel::Commit(layer[i]))?;
                match &agreed {
                    None => agreed = Some(next),
                    Some(s) => {
                        if *s != next {
                            return Ok(None);
                        }
                    }
                }
            }
            states[mask as usize] = agreed;
        }
        Ok(states[(1 << k) - 1].take())
    }

    /// Enumerates every (history, commitment, extension) triple within the
    /// horizon and reports the ones where the admissible set at the extension
    /// escapes the admissible set at the history preceding the commitment.
    /// Each basis commitment is applied at most once per history.
    pub fn validate_shrinkage(&self) -> Result<ShrinkageReport, CoreError> {
        let mut violations = Vec::new();
        let mut histories = vec![History::new()];
        let mut seen: HashSet<History> = histories.iter().cloned().collect();
        let mut idx = 0;
        while idx < histories.len() {
            let h = histories[idx].clone();
            idx += 1;
            if h.len() >= self.horizon {
                continue;
            }
            for m in self.available_env_moves(&h)? {
                let child = h.child(EventLabel::Env(m));
                if seen.insert(child.clone()) {
                    histories.push(child);
                }
            }
            for c in 0..self.basis.len() {
                if h.contains_commit(c) {
                    continue;
                }
                let child = h.child(EventLabel::Commit(c));
                if seen.insert(child.clone()) {
                    histories.push(child);
                }
            }
        }
        // For each commitment event in each enumerated history, every
        // enumerated extension must stay inside the pre-commitment set.
        for h in &histories {
            for (pos, ev) in h.0.iter().enumerate() {
                let EventLabel::Commit(c) = *ev else { continue };
                let before = History(h.0[..pos].to_vec());
                let allowed = self.admissible(&before)?;
                let observed = self.admissible(h)?;
                if !observed.is_subset_of(&allowed) {
                    violations.push(ShrinkageViolation {
                        history: before,
                        commitment: c,
                        extension: h.clone(),
                        allowed,
                        observed,
                    });
                }
            }
        }
        Ok(ShrinkageReport { horizon: self.horizon, histories_checked: histories.len(), violations })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutationReport {
    pub at_history: bool,
    pub at_env_extensions: bool,
}

#[derive(Clone, Debug)]
pub struct ShrinkageViolation {
    pub history: History,
    pub commitment: CommitmentId,
    pub extension: History,
    pub allowed: OutcomeSet,
    pub observed: OutcomeSet,
}

#[derive(Clone, Debug)]
pub struct ShrinkageReport {
    pub horizon: usize,
    pub histories_checked: usize,
    pub violations: Vec<ShrinkageViolation>,
}

impl ShrinkageReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn parse_spec_json(text: &str) -> Result<CompiledSpec, CoreError> {
    let file: ExplicitSpec =
        serde_json::from_str(text).map_err(|e| CoreError::SpecInvalid(format!("parse error: {e}")))?;
    file.compile()
}

pub fn spec_to_json(spec: &ExplicitSpec) -> String {
    serde_json::to_string_pretty(spec).expect("spec serialization cannot fail")
}
