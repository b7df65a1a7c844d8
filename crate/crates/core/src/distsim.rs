//! Distributed execution of commitment specs.
//!
//! Commitments live at agents, the scheduler interleaves activations and
//! message deliveries, and agreement points are explicit barrier rounds.
//! Everything here is exhaustive model checking over small scenarios, so
//! the caps are tight and enforced up front.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth::{online_minmax_depth, DepthValue};
use crate::spec::{
    CommitmentDef, CommitmentKind, CompiledSpec, Condition, CoreError, EventLabel, ExplicitSpec,
    History, PointwiseRule, TableEntry, TransformAction, TransformRule,
};

pub type AgentId = usize;

pub const MAX_AGENTS: usize = 2;
pub const MAX_SCHED_HORIZON: usize = 6;
pub const MAX_DIST_COMMITMENTS: usize = 3;
pub const MAX_SYNC_SEARCH: usize = 3;
const MAX_STRATEGIES: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("events at agent {0} are not totally ordered")]
    NotAChain(AgentId),
    #[error("event {0} not in history")]
    EventNotFound(usize),
    #[error("scenario too large: {0}")]
    TooLarge(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("strategy has no entry for agent {agent} at an encountered view")]
    StrategyIncomplete { agent: AgentId },
    #[error(transparent)]
    Core(#[from] CoreError),
}

// ---------------------------------------------------------------------------
// Event posets and projections

/// Label on a single event at one agent. Barrier events carry the commit log
/// snapshot exchanged in that round, so two barrier events agree iff the
/// agents saw the same global picture.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DistLabel {
    Init,
    Commit(usize),
    Send { to: AgentId, commit: usize },
    Receive { from: AgentId, commit: usize },
    Barrier { round: usize, log: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistEvent {
    pub id: usize,
    pub agent: AgentId,
    pub label: DistLabel,
}

/// Finite event poset. Edges are direct causal dependencies; reachability is
/// their transitive closure. Per-agent restrictions must be chains.
#[derive(Clone, Debug, Default)]
pub struct EventHistory {
    pub events: Vec<DistEvent>,
    pub edges: Vec<(usize, usize)>,
}

impl EventHistory {
    pub fn new() -> Self {
        EventHistory::default()
    }

    pub fn add_event(&mut self, agent: AgentId, label: DistLabel) -> usize {
        let id = self.events.len();
        self.events.push(DistEvent { id, agent, label });
        id
    }

    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<(), DistError> {
        if from >= self.events.len() {
            return Err(DistError::EventNotFound(from));
        }
        if to >= self.events.len() {
            return Err(DistError::EventNotFound(to));
        }
        self.edges.push((from, to));
        Ok(())
    }

    /// reach[i][j] = event i is in the causal past of j (reflexive).
    fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.events.len();
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            reach[i][i] = true;
        }
        for &(a, b) in &self.edges {
            reach[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        reach
    }

    /// Restriction to one agent's events, which must form a chain under the
    /// causal order. Returned in chain order.
    pub fn project(&self, agent: AgentId) -> Result<Vec<&DistEvent>, DistError> {
        let reach = self.reachability();
        let mut own: Vec<&DistEvent> = self.events.iter().filter(|e| e.agent == agent).collect();
        for a in &own {
            for b in &own {
                if a.id != b.id && !reach[a.id][b.id] && !reach[b.id][a.id] {
                    return Err(DistError::NotAChain(agent));
                }
                if a.id != b.id && reach[a.id][b.id] && reach[b.id][a.id] {
                    return Err(DistError::NotAChain(agent));
                }
            }
        }
        own.sort_by(|a, b| {
            if reach[a.id][b.id] {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        });
        Ok(own)
    }

    pub fn projection_labels(&self, agent: AgentId) -> Result<Vec<DistLabel>, DistError> {
        Ok(self.project(agent)?.into_iter().map(|e| e.label.clone()).collect())
    }
}

/// Two histories look the same to an agent iff its projected label sequences
/// are equal. This is an equivalence relation on histories for each agent.
pub fn indistinguishable(
    h1: &EventHistory,
    h2: &EventHistory,
    agent: AgentId,
) -> Result<bool, DistError> {
    Ok(h1.projection_labels(agent)? == h2.projection_labels(agent)?)
}

/// A cut is one chosen event per agent. It is a sync point when (i) the union
/// of the per-agent causal pasts is downward closed against every agent's own
/// chain, and (ii) all agents compute the same admissible set from the commits
/// in their cut event's causal past.
pub fn verify_sync_point(
    history: &EventHistory,
    cut: &[usize],
    spec: &CompiledSpec,
    agents: usize,
) -> Result<bool, DistError> {
    if cut.len() != agents {
        return Err(DistError::InvalidScenario(format!(
            "cut has {} events for {} agents",
            cut.len(),
            agents
        )));
    }
    for &e in cut {
        if e >= history.events.len() {
            return Err(DistError::EventNotFound(e));
        }
    }
    if let Some(ev) = history.events.iter().find(|e| e.agent >= agents) {
        return Err(DistError::InvalidScenario(format!(
            "event {} belongs to agent {} outside the scenario",
            ev.id, ev.agent
        )));
    }
    let reach = history.reachability();
    // The cut's frontier: each agent's own chain up to its cut event.
    let in_cut = |ev: &DistEvent| -> bool { reach[ev.id][cut[ev.agent]] };

    // (i) consistent cut: the union of the per-agent prefixes is downward
    // closed, so no event inside depends on one outside (e.g. a receive whose
    // commit lies beyond the sender's frontier).
    for ev in &history.events {
        if in_cut(ev) {
            for &(a, b) in &history.edges {
                if b == ev.id && !in_cut(&history.events[a]) {
                    return Ok(false);
                }
            }
        }
    }

    // (ii) agreement: each agent linearizes the commits in its own cut past;
    // all resulting admissible sets must coincide.
    let mut views = Vec::new();
    for (agent, &c) in cut.iter().enumerate() {
        if history.events[c].agent != agent {
            return Err(DistError::InvalidScenario(format!(
                "cut event {} does not belong to agent {}",
                c, agent
            )));
        }
        let mut commits: Vec<&DistEvent> = history
            .events
            .iter()
            .filter(|e| reach[e.id][c] && matches!(e.label, DistLabel::Commit(_)))
            .collect();
        // Causal order refined by id, which is creation order in generated
        // histories; any linearization of the causal order gives the same
        // admissible set for commuting prefixes, and disagreement here is
        // exactly what the check is for.
        commits.sort_by(|a, b| {
            if a.id == b.id {
                std::cmp::Ordering::Equal
            } else if reach[a.id][b.id] {
                std::cmp::Ordering::Less
            } else if reach[b.id][a.id] {
                std::cmp::Ordering::Greater
            } else {
                a.id.cmp(&b.id)
            }
        });
        let h = History(
            commits
                .iter()
                .map(|e| match e.label {
                    DistLabel::Commit(c) => EventLabel::Commit(c),
                    _ => unreachable!(),
                })
                .collect(),
        );
        views.push(spec.admissible(&h)?);
    }
    Ok(views.windows(2).all(|w| w[0] == w[1]))
}

// ---------------------------------------------------------------------------
// Scenarios

/// A spec split across agents. `placement[c]` owns basis commitment `c`.
/// The scheduler horizon counts scheduler moves, not commitments.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsyncScenario {
    pub agents: usize,
    pub spec: ExplicitSpec,
    pub placement: Vec<AgentId>,
    pub horizon: usize,
    pub sync_budget: usize,
}

impl AsyncScenario {
    pub fn validate(&self) -> Result<CompiledSpec, DistError> {
        if self.agents == 0 {
            return Err(DistError::InvalidScenario("no agents".into()));
        }
        if self.agents > MAX_AGENTS {
            return Err(DistError::TooLarge(format!(
                "{} agents exceeds the cap of {}",
                self.agents, MAX_AGENTS
            )));
        }
        if self.horizon > MAX_SCHED_HORIZON {
            return Err(DistError::TooLarge(format!(
                "horizon {} exceeds the cap of {}",
                self.horizon, MAX_SCHED_HORIZON
            )));
        }
        let compiled = self.spec.compile()?;
        if !compiled.env_moves.is_empty() {
            return Err(DistError::InvalidScenario(
                "distributed scenarios must not declare environment moves".into(),
            ));
        }
        if compiled.basis.len() > MAX_DIST_COMMITMENTS {
            return Err(DistError::TooLarge(format!(
                "{} commitments exceeds the cap of {}",
                compiled.basis.len(),
                MAX_DIST_COMMITMENTS
            )));
        }
        if self.placement.len() != compiled.basis.len() {
            return Err(DistError::InvalidScenario(format!(
                "placement covers {} commitments, basis has {}",
                self.placement.len(),
                compiled.basis.len()
            )));
        }
        if let Some(&bad) = self.placement.iter().find(|&&a| a >= self.agents) {
            return Err(DistError::InvalidScenario(format!(
                "placement names agent {} of {}",
                bad, self.agents
            )));
        }
        if compiled.horizon < compiled.basis.len() {
            return Err(DistError::InvalidScenario(
                "spec horizon cannot accommodate all commitments".into(),
            ));
        }
        Ok(compiled)
    }
}

// ---------------------------------------------------------------------------
// Strategies and runs

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchedMove {
    /// Let this agent take its next action.
    Activate(AgentId),
    /// Deliver the oldest pending notification to this agent.
    Deliver(AgentId),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentAction {
    Wait,
    Apply(usize),
    RequestBarrier,
}

/// Deterministic local strategy: what an agent does as a function of its own
/// view. Views record commits, receives, and barriers; waiting leaves the
/// view unchanged, so strategies are stationary by construction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyTable {
    #[serde(with = "rules_as_pairs")]
    pub rules: BTreeMap<(AgentId, Vec<DistLabel>), AgentAction>,
}

/// JSON object keys must be strings, so the rule map travels as a list of
/// (agent, view, action) entries.
mod rules_as_pairs {
    use super::*;
    use serde::{Deserializer, Serializer};

    type Rules = BTreeMap<(AgentId, Vec<DistLabel>), AgentAction>;

    pub fn serialize<S: Serializer>(m: &Rules, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(&AgentId, &Vec<DistLabel>, &AgentAction)> =
            m.iter().map(|((a, view), act)| (a, view, act)).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rules, D::Error> {
        let v: Vec<(AgentId, Vec<DistLabel>, AgentAction)> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|(a, view, act)| ((a, view), act)).collect())
    }
}

impl StrategyTable {
    pub fn lookup(&self, agent: AgentId, view: &[DistLabel]) -> Option<&AgentAction> {
        self.rules.get(&(agent, view.to_vec()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureKind {
    /// Fair schedule on which no agent can ever act again and the admissible
    /// set is not resolved.
    Stalled,
    /// An activation emptied the admissible set.
    Emptied,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrategyFailure {
    pub strategy: StrategyTable,
    pub schedule: Vec<SchedMove>,
    pub kind: FailureKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsyncVerdict {
    pub resolvable: bool,
    pub winning_strategy: Option<StrategyTable>,
    pub failures: Vec<StrategyFailure>,
    pub strategies_explored: usize,
}

/// When a run counts as resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResolutionMode {
    /// The admissible set computed from the global commit log is a singleton.
    GlobalSingleton,
    /// A singleton admissible set is witnessed at a barrier round, so every
    /// agent knows the outcome and knows the others know it.
    CommonKnowledge,
}

#[derive(Clone)]
struct RunState {
    views: Vec<Vec<DistLabel>>,
    queues: Vec<VecDeque<(AgentId, usize)>>,
    log: Vec<usize>,
    requested: Vec<bool>,
    rounds_used: usize,
    moves: Vec<SchedMove>,
}

impl RunState {
    fn initial(agents: usize) -> Self {
        RunState {
            views: vec![Vec::new(); agents],
            queues: vec![VecDeque::new(); agents],
            log: Vec::new(),
            requested: vec![false; agents],
            rounds_used: 0,
            moves: Vec::new(),
        }
    }
}

struct RunCtx<'a> {
    spec: &'a CompiledSpec,
    placement: &'a [AgentId],
    agents: usize,
    horizon: usize,
    sync_budget: usize,
    mode: ResolutionMode,
}

impl RunCtx<'_> {
    fn admissible(&self, log: &[usize]) -> Result<crate::spec::OutcomeSet, CoreError> {
        let h = History(log.iter().map(|&c| EventLabel::Commit(c)).collect());
        self.spec.admissible(&h)
    }

    /// Actions an agent may choose at a given view. Owners may apply each of
    /// their commitments once; barrier requests are limited by the number of
    /// rounds already visible in the view.
    fn action_space(&self, agent: AgentId, view: &[DistLabel]) -> Vec<AgentAction> {
        let mut acts = Vec::new();
        for (c, &owner) in self.placement.iter().enumerate() {
            if owner == agent && !view.contains(&DistLabel::Commit(c)) {
                acts.push(AgentAction::Apply(c));
            }
        }
        let seen_rounds = view
            .iter()
            .filter(|l| matches!(l, DistLabel::Barrier { .. }))
            .count();
        if seen_rounds < self.sync_budget {
            acts.push(AgentAction::RequestBarrier);
        }
        acts.push(AgentAction::Wait);
        acts
    }
}

enum Probe {
    Win,
    Fail { schedule: Vec<SchedMove>, kind: FailureKind },
    Undefined { agent: AgentId, view: Vec<DistLabel> },
}

/// Fires a barrier round: every view gets the same log snapshot and all
/// pending notifications become redundant.
fn fire_barrier(state: &mut RunState) {
    let round = state.rounds_used;
    for v in state.views.iter_mut() {
        v.push(DistLabel::Barrier { round, log: state.log.clone() });
    }
    for q in state.queues.iter_mut() {
        q.clear();
    }
    for r in state.requested.iter_mut() {
        *r = false;
    }
    state.rounds_used += 1;
}

/// Adversarial DFS over scheduler moves for one (possibly partial) strategy.
/// Every branch must end resolved; the first failing or undefined branch is
/// reported. Fairness: a run may only end unresolved inside the horizon if no
/// agent has an enabled non-wait action, so withholding deliveries is fair but
/// freezing an agent that wants to act is not.
fn explore(state: &RunState, strategy: &StrategyTable, ctx: &RunCtx) -> Result<Probe, DistError> {
    let adm = ctx.admissible(&state.log)?;
    if ctx.mode == ResolutionMode::GlobalSingleton && adm.is_singleton() {
        return Ok(Probe::Win);
    }

    let mut actions = Vec::with_capacity(ctx.agents);
    for p in 0..ctx.agents {
        if state.requested[p] {
            actions.push(None); // blocked at its own barrier request
            continue;
        }
        match strategy.lookup(p, &state.views[p]) {
            Some(a) => actions.push(Some(a.clone())),
            None => {
                return Ok(Probe::Undefined { agent: p, view: state.views[p].clone() });
            }
        }
    }

    let enabled: Vec<AgentId> = (0..ctx.agents)
        .filter(|&p| matches!(actions[p], Some(AgentAction::Apply(_)) | Some(AgentAction::RequestBarrier)))
        .collect();

    if enabled.is_empty() {
        // Nobody will ever move again: views only change through deliveries
        // and barriers, and the adversary may withhold deliveries forever.
        return Ok(Probe::Fail { schedule: state.moves.clone(), kind: FailureKind::Stalled });
    }
    if state.moves.len() >= ctx.horizon {
        // Out of scheduler moves with work still pending: the schedule
        // starved someone, so this branch is vacuously satisfied.
        return Ok(Probe::Win);
    }

    let mut pending_undefined: Option<(AgentId, Vec<DistLabel>)> = None;

    for &p in &enabled {
        let mut next = state.clone();
        next.moves.push(SchedMove::Activate(p));
        let mut resolved_here = false;
        match actions[p].clone().unwrap() {
            AgentAction::Apply(c) => {
                next.log.push(c);
                let adm2 = ctx.admissible(&next.log)?;
                if adm2.is_empty() {
                    return Ok(Probe::Fail { schedule: next.moves, kind: FailureKind::Emptied });
                }
                next.views[p].push(DistLabel::Commit(c));
                for q in 0..ctx.agents {
                    if q != p {
                        next.queues[q].push_back((p, c));
                    }
                }
            }
            AgentAction::RequestBarrier => {
                next.requested[p] = true;
                if next.requested.iter().all(|&r| r) {
                    fire_barrier(&mut next);
                    if ctx.mode == ResolutionMode::CommonKnowledge {
                        let adm2 = ctx.admissible(&next.log)?;
                        if adm2.is_singleton() {
                            resolved_here = true;
                        }
                    }
                }
            }
            AgentAction::Wait => unreachable!("wait actions are never enabled"),
        }
        if resolved_here {
            continue;
        }
        match explore(&next, strategy, ctx)? {
            Probe::Win => {}
            fail @ Probe::Fail { .. } => return Ok(fail),
            Probe::Undefined { agent, view } => {
                if pending_undefined.is_none() {
                    pending_undefined = Some((agent, view));
                }
            }
        }
    }

    for q in 0..ctx.agents {
        if state.queues[q].is_empty() {
            continue;
        }
        let mut next = state.clone();
        next.moves.push(SchedMove::Deliver(q));
        let (from, c) = next.queues[q].pop_front().unwrap();
        next.views[q].push(DistLabel::Receive { from, commit: c });
        match explore(&next, strategy, ctx)? {
            Probe::Win => {}
            fail @ Probe::Fail { .. } => return Ok(fail),
            Probe::Undefined { agent, view } => {
                if pending_undefined.is_none() {
                    pending_undefined = Some((agent, view));
                }
            }
        }
    }

    match pending_undefined {
        Some((agent, view)) => Ok(Probe::Undefined { agent, view }),
        None => Ok(Probe::Win),
    }
}

fn solve(
    strategy: &mut StrategyTable,
    ctx: &RunCtx,
    failures: &mut Vec<StrategyFailure>,
    explored: &mut usize,
) -> Result<Option<StrategyTable>, DistError> {
    match explore(&RunState::initial(ctx.agents), strategy, ctx)? {
        Probe::Win => Ok(Some(strategy.clone())),
        Probe::Fail { schedule, kind } => {
            *explored += 1;
            if *explored > MAX_STRATEGIES {
                return Err(DistError::TooLarge(format!(
                    "strategy search exceeded {} candidates",
                    MAX_STRATEGIES
                )));
            }
            failures.push(StrategyFailure { strategy: strategy.clone(), schedule, kind });
            Ok(None)
        }
        Probe::Undefined { agent, view } => {
            let key = (agent, view.clone());
            for action in ctx.action_space(agent, &view) {
                strategy.rules.insert(key.clone(), action);
                if let Some(win) = solve(strategy, ctx, failures, explored)? {
                    return Ok(Some(win));
                }
                strategy.rules.remove(&key);
            }
            Ok(None)
        }
    }
}

fn run_search(scenario: &AsyncScenario, mode: ResolutionMode) -> Result<AsyncVerdict, DistError> {
    let spec = scenario.validate()?;
    let ctx = RunCtx {
        spec: &spec,
        placement: &scenario.placement,
        agents: scenario.agents,
        horizon: scenario.horizon,
        sync_budget: scenario.sync_budget,
        mode,
    };
    // Already-resolved specs need no coordination at all.
    let initial = ctx.admissible(&[])?;
    if initial.is_singleton() {
        return Ok(AsyncVerdict {
            resolvable: true,
            winning_strategy: Some(StrategyTable::default()),
            failures: Vec::new(),
            strategies_explored: 0,
        });
    }
    let mut strategy = StrategyTable::default();
    let mut failures = Vec::new();
    let mut explored = 0usize;
    let win = solve(&mut strategy, &ctx, &mut failures, &mut explored)?;
    Ok(AsyncVerdict {
        resolvable: win.is_some(),
        winning_strategy: win,
        failures,
        strategies_explored: explored,
    })
}

/// Does any deterministic local strategy profile resolve the spec on every
/// fair schedule within the scenario's sync budget? Resolution means the
/// global admissible set becomes a singleton.
pub fn exhaustive_async_check(scenario: &AsyncScenario) -> Result<AsyncVerdict, DistError> {
    run_search(scenario, ResolutionMode::GlobalSingleton)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinSyncReport {
    /// Smallest barrier budget under which some strategy reaches common
    /// knowledge of a resolved outcome on every fair schedule.
    pub min_sync: Option<usize>,
    pub searched_up_to: usize,
    pub online_depth: Option<u64>,
    pub verdicts: Vec<(usize, bool)>,
}

/// Minimum number of barrier rounds for resolution with agreement: every
/// agent must come to know the final outcome at a barrier. Reported next to
/// the centralized adaptive depth of the same spec for comparison.
pub fn min_sync_points(scenario: &AsyncScenario) -> Result<MinSyncReport, DistError> {
    let spec = scenario.validate()?;
    let online = match online_minmax_depth(&spec)? {
        DepthValue::Finite(d) => Some(d),
        DepthValue::Unresolvable => None,
    };
    let mut verdicts = Vec::new();
    let mut found = None;
    for k in 0..=MAX_SYNC_SEARCH {
        let mut trial = scenario.clone();
        trial.sync_budget = k;
        let verdict = run_search(&trial, ResolutionMode::CommonKnowledge)?;
        verdicts.push((k, verdict.resolvable));
        if verdict.resolvable && found.is_none() {
            found = Some(k);
            break;
        }
    }
    Ok(MinSyncReport { min_sync: found, searched_up_to: MAX_SYNC_SEARCH, online_depth: online, verdicts })
}

// ---------------------------------------------------------------------------
// Replay

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplayReport {
    pub resolved: bool,
    pub emptied: bool,
    pub stalled_fair: bool,
    pub final_log: Vec<usize>,
}

/// Re-executes one schedule against a strategy and reports what happened.
/// Moves that are no-ops in the replayed state (activating a waiting or
/// blocked agent, delivering from an empty queue) are skipped, so witness
/// schedules from the search replay exactly.
pub fn replay(
    scenario: &AsyncScenario,
    strategy: &StrategyTable,
    schedule: &[SchedMove],
    mode: ResolutionMode,
) -> Result<ReplayReport, DistError> {
    let (report, _) = replay_with_history(scenario, strategy, schedule, mode)?;
    Ok(report)
}

/// Replay that also builds the causal event poset of the run: chains per
/// agent, message edges from commits to their receives, and all-to-all edges
/// into barrier rounds.
pub fn replay_with_history(
    scenario: &AsyncScenario,
    strategy: &StrategyTable,
    schedule: &[SchedMove],
    mode: ResolutionMode,
) -> Result<(ReplayReport, EventHistory), DistError> {
    let spec = scenario.validate()?;
    let ctx = RunCtx {
        spec: &spec,
        placement: &scenario.placement,
        agents: scenario.agents,
        horizon: scenario.horizon,
        sync_budget: scenario.sync_budget,
        mode,
    };
    let mut state = RunState::initial(ctx.agents);
    let mut hist = EventHistory::new();
    let mut last_event: Vec<usize> = (0..ctx.agents).map(|p| hist.add_event(p, DistLabel::Init)).collect();
    let mut commit_event: BTreeMap<usize, usize> = BTreeMap::new();
    // Trivially settled specs count as resolved in both modes.
    let mut resolved = ctx.admissible(&[])?.is_singleton();
    let mut emptied = false;

    for mv in schedule {
        // The run ends at resolution or collapse; trailing moves are unused.
        if emptied || resolved {
            break;
        }
        match *mv {
            SchedMove::Activate(p) => {
                if p >= ctx.agents || state.requested[p] {
                    continue;
                }
                let action = strategy
                    .lookup(p, &state.views[p])
                    .ok_or(DistError::StrategyIncomplete { agent: p })?
                    .clone();
                match action {
                    AgentAction::Wait => continue,
                    AgentAction::Apply(c) => {
                        state.log.push(c);
                        state.views[p].push(DistLabel::Commit(c));
                        let ev = hist.add_event(p, DistLabel::Commit(c));
                        hist.add_edge(last_event[p], ev)?;
                        last_event[p] = ev;
                        commit_event.insert(c, ev);
                        for q in 0..ctx.agents {
                            if q != p {
                                state.queues[q].push_back((p, c));
                            }
                        }
                        let adm = ctx.admissible(&state.log)?;
                        if adm.is_empty() {
                            emptied = true;
                        } else if ctx.mode == ResolutionMode::GlobalSingleton && adm.is_singleton() {
                            resolved = true;
                        }
                    }
                    AgentAction::RequestBarrier => {
                        state.requested[p] = true;
                        if state.requested.iter().all(|&r| r) {
                            let round = state.rounds_used;
                            fire_barrier(&mut state);
                            let prev = last_event.clone();
                            for a in 0..ctx.agents {
                                let ev = hist.add_event(
                                    a,
                                    DistLabel::Barrier { round, log: state.log.clone() },
                                );
                                for &src in &prev {
                                    hist.add_edge(src, ev)?;
                                }
                                last_event[a] = ev;
                            }
                            let adm = ctx.admissible(&state.log)?;
                            if adm.is_singleton() {
                                resolved = true;
                            }
                        }
                    }
                }
            }
            SchedMove::Deliver(q) => {
                if q >= ctx.agents {
                    continue;
                }
                if let Some((from, c)) = state.queues[q].pop_front() {
                    state.views[q].push(DistLabel::Receive { from, commit: c });
                    let ev = hist.add_event(q, DistLabel::Receive { from, commit: c });
                    hist.add_edge(last_event[q], ev)?;
                    if let Some(&src) = commit_event.get(&c) {
                        hist.add_edge(src, ev)?;
                    }
                    last_event[q] = ev;
                }
            }
        }
    }

    // Final-state fairness: fair iff nobody has an enabled non-wait action.
    let mut any_enabled = false;
    for p in 0..ctx.agents {
        if state.requested[p] {
            continue;
        }
        if let Some(a) = strategy.lookup(p, &state.views[p]) {
            if !matches!(a, AgentAction::Wait) {
                any_enabled = true;
            }
        }
    }
    Ok((
        ReplayReport { resolved, emptied, stalled_fair: !any_enabled, final_log: state.log.clone() },
        hist,
    ))
}

// ---------------------------------------------------------------------------
// Asynchrony as history classes

/// Checks the defining property of asynchronous execution on all states
/// reachable under a complete strategy: whenever some agent has applied a
/// commitment another agent has not heard about, there is a reachable state
/// that looks identical to the uninformed agent in which the commitment never
/// happened.
pub fn verify_async_class(
    scenario: &AsyncScenario,
    strategy: &StrategyTable,
) -> Result<bool, DistError> {
    let spec = scenario.validate()?;
    let ctx = RunCtx {
        spec: &spec,
        placement: &scenario.placement,
        agents: scenario.agents,
        horizon: scenario.horizon,
        sync_budget: scenario.sync_budget,
        mode: ResolutionMode::GlobalSingleton,
    };
    let mut states = vec![RunState::initial(ctx.agents)];
    let mut frontier = vec![RunState::initial(ctx.agents)];
    while let Some(state) = frontier.pop() {
        if state.moves.len() >= ctx.horizon {
            continue;
        }
        let adm = ctx.admissible(&state.log)?;
        if adm.count() <= 1 {
            continue; // resolved or emptied: run over
        }
        for p in 0..ctx.agents {
            if state.requested[p] {
                continue;
            }
            let action = match strategy.lookup(p, &state.views[p]) {
                Some(a) => a.clone(),
                None => return Err(DistError::StrategyIncomplete { agent: p }),
            };
            let mut next = state.clone();
            next.moves.push(SchedMove::Activate(p));
            match action {
                AgentAction::Wait => continue,
                AgentAction::Apply(c) => {
                    next.log.push(c);
                    next.views[p].push(DistLabel::Commit(c));
                    for q in 0..ctx.agents {
                        if q != p {
                            next.queues[q].push_back((p, c));
                        }
                    }
                }
                AgentAction::RequestBarrier => {
                    next.requested[p] = true;
                    if next.requested.iter().all(|&r| r) {
                        fire_barrier(&mut next);
                    }
                }
            }
            states.push(next.clone());
            frontier.push(next);
        }
        for q in 0..ctx.agents {
            if state.queues[q].is_empty() {
                continue;
            }
            let mut next = state.clone();
            next.moves.push(SchedMove::Deliver(q));
            let (from, c) = next.queues[q].pop_front().unwrap();
            next.views[q].push(DistLabel::Receive { from, commit: c });
            states.push(next.clone());
            frontier.push(next);
        }
    }

    let heard = |view: &[DistLabel], c: usize| {
        view.iter().any(|l| match l {
            DistLabel::Commit(x) | DistLabel::Receive { commit: x, .. } => *x == c,
            DistLabel::Barrier { log, .. } => log.contains(&c),
            _ => false,
        })
    };

    for s in &states {
        for &c in &s.log {
            let owner = ctx.placement[c];
            for q in 0..ctx.agents {
                if q == owner || heard(&s.views[q], c) {
                    continue;
                }
                let twin = states
                    .iter()
                    .any(|t| !t.log.contains(&c) && t.views[q] == s.views[q]);
                if !twin {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Bundled scenarios

fn s(x: &str) -> String {
    x.to_string()
}

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|x| s(x)).collect()
}

/// Two-commitment spec whose second step is forced to follow the first:
/// `finish` is inert until `narrow` has cut the admissible set down.
pub fn chain_pair_file() -> ExplicitSpec {
    ExplicitSpec {
        outcomes: names(&["o0", "o1", "o2"]),
        horizon: 4,
        env_moves: vec![],
        basis: vec![
            CommitmentDef {
                name: s("narrow"),
                kind: CommitmentKind::Pointwise(PointwiseRule::Retain(names(&["o1", "o2"]))),
            },
            CommitmentDef {
                name: s("finish"),
                kind: CommitmentKind::Transform(TransformRule {
                    when: vec![Condition::SetWithin(names(&["o1", "o2"]))],
                    then: TransformAction::RetainSet(names(&["o1"])),
                    otherwise: TransformAction::Identity,
                }),
            },
        ],
        admissible_table: vec![TableEntry {
            env_history: vec![],
            admissible: names(&["o0", "o1", "o2"]),
        }],
    }
}

/// The forced chain split across two agents: the narrowing step at agent 0,
/// the dependent finishing step at agent 1.
pub fn cross_dependency_scenario(sync_budget: usize) -> AsyncScenario {
    AsyncScenario {
        agents: 2,
        spec: chain_pair_file(),
        placement: vec![0, 1],
        horizon: MAX_SCHED_HORIZON,
        sync_budget,
    }
}

/// Two independent narrowing commitments on a product-shaped outcome space,
/// one per agent. Order never matters, so no coordination is needed.
pub fn local_pointwise_scenario() -> AsyncScenario {
    let spec = ExplicitSpec {
        outcomes: names(&["both", "left", "right", "neither"]),
        horizon: 4,
        env_moves: vec![],
        basis: vec![
            CommitmentDef {
                name: s("pick_left"),
                kind: CommitmentKind::Pointwise(PointwiseRule::Retain(names(&["both", "left"]))),
            },
            CommitmentDef {
                name: s("pick_right"),
                kind: CommitmentKind::Pointwise(PointwiseRule::Retain(names(&["both", "right"]))),
            },
        ],
        admissible_table: vec![TableEntry {
            env_history: vec![],
            admissible: names(&["both", "left", "right", "neither"]),
        }],
    };
    AsyncScenario { agents: 2, spec, placement: vec![0, 1], horizon: MAX_SCHED_HORIZON, sync_budget: 0 }
}

/// The forced chain with both steps owned by agent 0; agent 1 only has to
/// learn the result. One agreement round suffices even though the chain has
/// two layers.
pub fn local_chain_scenario() -> AsyncScenario {
    AsyncScenario {
        agents: 2,
        spec: chain_pair_file(),
        placement: vec![0, 0],
        horizon: MAX_SCHED_HORIZON,
        sync_budget: 0,
    }
}

/// Already-resolved spec: a single admissible outcome and one inert
/// commitment. Needs no synchronization at all.
pub fn settled_scenario() -> AsyncScenario {
    AsyncScenario {
        agents: 2,
        spec: crate::fixtures::single_valued_file(),
        placement: vec![0],
        horizon: MAX_SCHED_HORIZON,
        sync_budget: 0,
    }
}
