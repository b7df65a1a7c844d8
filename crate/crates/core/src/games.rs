//! Strategic depth of finite perfect-information games.
//!
//! The determiner (player 1) and the environment (player 2) alternate over a
//! finite tree with exact rational payoffs. Depth is measured by the nodes
//! where subgame-perfect play genuinely leaves the determiner a choice, not
//! by raw tree height. Ties are exact; nothing here compares within an
//! epsilon.

use std::collections::BTreeSet;
use std::str::FromStr;

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("profile space {profiles} exceeds the limit {limit}")]
    StateSpaceExceeded { profiles: u128, limit: u64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Payoff = (Rational64, Rational64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    Determiner,
    Environment,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GameNode {
    Leaf { payoff: Payoff },
    Internal { owner: Owner, children: Vec<usize> },
}

/// Node arena; `root` is the entry point and every node is reachable from it
/// exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameTree {
    pub nodes: Vec<GameNode>,
    pub root: usize,
}

impl GameTree {
    pub fn validate(&self) -> Result<(), GameError> {
        if self.root >= self.nodes.len() {
            return Err(GameError::InvalidTree("root out of range".into()));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            if seen[v] {
                return Err(GameError::InvalidTree(format!("node {v} reached twice")));
            }
            seen[v] = true;
            if let GameNode::Internal { children, .. } = &self.nodes[v] {
                if children.is_empty() {
                    return Err(GameError::InvalidTree(format!("internal node {v} has no children")));
                }
                for &c in children {
                    if c >= self.nodes.len() {
                        return Err(GameError::InvalidTree(format!("child {c} out of range")));
                    }
                    stack.push(c);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(GameError::InvalidTree("unreachable nodes present".into()));
        }
        Ok(())
    }

    /// Nodes in an order where children appear before parents.
    fn postorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                order.push(v);
                continue;
            }
            stack.push((v, true));
            if let GameNode::Internal { children, .. } = &self.nodes[v] {
                for &c in children {
                    stack.push((c, false));
                }
            }
        }
        order
    }

    pub fn internal_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&v| matches!(self.nodes[v], GameNode::Internal { .. })).collect()
    }
}

/// Per-node subgame-perfect outcome sets and the children that realize them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpeAnnotation {
    pub outcome_sets: Vec<BTreeSet<Payoff>>,
    /// Aligned with each internal node's children list; empty for leaves.
    pub consistent_children: Vec<Vec<bool>>,
}

impl SpeAnnotation {
    /// A node leaves real choice when two or more children stay consistent.
    pub fn is_nontrivial(&self, node: usize) -> bool {
        self.consistent_children[node].iter().filter(|&&b| b).count() >= 2
    }
}

const MAX_PROFILE_PRODUCT: u64 = 1_000_000;

fn payoff_for(owner: Owner, o: &Payoff) -> Rational64 {
    match owner {
        Owner::Determiner => o.0,
        Owner::Environment => o.1,
    }
}

/// Bottom-up outcome sets: at a node the owner picks, for every combination
/// of subgame outcomes drawn from the children's sets, any child whose drawn
/// outcome maximizes the owner's payoff. The guard bounds the per-node
/// combination count.
pub fn spe_annotate(tree: &GameTree) -> Result<SpeAnnotation, GameError> {
    tree.validate()?;
    let n = tree.nodes.len();
    let mut outcome_sets: Vec<BTreeSet<Payoff>> = vec![BTreeSet::new(); n];
    let mut consistent: Vec<Vec<bool>> = vec![Vec::new(); n];
    for v in tree.postorder() {
        match &tree.nodes[v] {
            GameNode::Leaf { payoff } => {
                outcome_sets[v].insert(*payoff);
            }
            GameNode::Internal { owner, children } => {
                let child_sets: Vec<Vec<Payoff>> =
                    children.iter().map(|&c| outcome_sets[c].iter().copied().collect()).collect();
                let mut product: u128 = 1;
                for s in &child_sets {
                    product = product.saturating_mul(s.len() as u128);
                }
                if product > MAX_PROFILE_PRODUCT as u128 {
                    return Err(GameError::StateSpaceExceeded { profiles: product, limit: MAX_PROFILE_PRODUCT });
                }
                let r = children.len();
                let mut marks = vec![false; r];
                let mut set = BTreeSet::new();
                let mut idx = vec![0usize; r];
                loop {
                    let drawn: Vec<Payoff> = (0..r).map(|l| child_sets[l][idx[l]]).collect();
                    let best = drawn.iter().map(|o| payoff_for(*owner, o)).max().unwrap();
                    for (j, o) in drawn.iter().enumerate() {
                        if payoff_for(*owner, o) == best {
                            marks[j] = true;
                            set.insert(*o);
                        }
                    }
                    // Mixed-radix increment over the drawn combination.
                    let mut l = 0;
                    loop {
                        if l == r {
                            break;
                        }
                        idx[l] += 1;
                        if idx[l] < child_sets[l].len() {
                            break;
                        }
                        idx[l] = 0;
                        l += 1;
                    }
                    if l == r {
                        break;
                    }
                }
                outcome_sets[v] = set;
                consistent[v] = marks;
            }
        }
    }
    Ok(SpeAnnotation { outcome_sets, consistent_children: consistent })
}

const MAX_BRUTE_PROFILES: u64 = 10_000_000;

/// Reference annotation: enumerate every pure strategy profile, keep the
/// subgame-perfect ones, and collect the outcome each induces at every node
/// and the child it picks there.
pub fn spe_annotate_brute(tree: &GameTree) -> Result<SpeAnnotation, GameError> {
    tree.validate()?;
    let n = tree.nodes.len();
    let internal = tree.internal_nodes();
    let mut profiles: u128 = 1;
    for &v in &internal {
        if let GameNode::Internal { children, .. } = &tree.nodes[v] {
            profiles = profiles.saturating_mul(children.len() as u128);
        }
    }
    if profiles > MAX_BRUTE_PROFILES as u128 {
        return Err(GameError::StateSpaceExceeded { profiles, limit: MAX_BRUTE_PROFILES });
    }
    let order = tree.postorder();
    let mut outcome_sets: Vec<BTreeSet<Payoff>> = vec![BTreeSet::new(); n];
    let mut consistent: Vec<Vec<bool>> = (0..n)
        .map(|v| match &tree.nodes[v] {
            GameNode::Internal { children, .. } => vec![false; children.len()],
            GameNode::Leaf { .. } => Vec::new(),
        })
        .collect();
    let mut choice = vec![0usize; n];
    loop {
        // Outcome induced at every node under the current profile.
        let mut induced: Vec<Option<Payoff>> = vec![None; n];
        for &v in &order {
            induced[v] = Some(match &tree.nodes[v] {
                GameNode::Leaf { payoff } => *payoff,
                GameNode::Internal { children, .. } => induced[children[choice[v]]].unwrap(),
            });
        }
        let perfect = internal.iter().all(|&v| {
            let GameNode::Internal { owner, children } = &tree.nodes[v] else { unreachable!() };
            let own = payoff_for(*owner, &induced[v].unwrap());
            children.iter().all(|&c| payoff_for(*owner, &induced[c].unwrap()) <= own)
        });
        if perfect {
            for &v in &order {
                outcome_sets[v].insert(induced[v].unwrap());
                if matches!(tree.nodes[v], GameNode::Internal { .. }) {
                    consistent[v][choice[v]] = true;
                }
            }
        }
        // Next profile.
        let mut i = 0;
        loop {
            if i == internal.len() {
                return Ok(SpeAnnotation { outcome_sets, consistent_children: consistent });
            }
            let v = internal[i];
            let GameNode::Internal { children, .. } = &tree.nodes[v] else { unreachable!() };
            choice[v] += 1;
            if choice[v] < children.len() {
                break;
            }
            choice[v] = 0;
            i += 1;
        }
    }
}

/// Maximum over root-to-leaf paths of the determiner nodes that stay
/// non-trivial under subgame-perfect play.
pub fn strategic_depth(tree: &GameTree, ann: &SpeAnnotation) -> usize {
    fn rec(tree: &GameTree, ann: &SpeAnnotation, v: usize) -> usize {
        match &tree.nodes[v] {
            GameNode::Leaf { .. } => 0,
            GameNode::Internal { owner, children } => {
                let below = children.iter().map(|&c| rec(tree, ann, c)).max().unwrap();
                let here = usize::from(*owner == Owner::Determiner && ann.is_nontrivial(v));
                below + here
            }
        }
    }
    rec(tree, ann, tree.root)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub strategic_depth: usize,
    /// Determiner nodes on the deepest such path, trivial or not.
    pub max_p1_path_nodes: usize,
    /// True when some path realizing the strategic depth has a non-trivial
    /// environment node strictly between each consecutive pair of counted
    /// determiner nodes. Reported, never assumed.
    pub interleaving_witnessed: bool,
}

/// Splits raw determiner path length into its forced and strategic parts.
pub fn forced_vs_strategic_decomposition(tree: &GameTree, ann: &SpeAnnotation) -> Decomposition {
    fn p1_nodes(tree: &GameTree, v: usize) -> usize {
        match &tree.nodes[v] {
            GameNode::Leaf { .. } => 0,
            GameNode::Internal { owner, children } => {
                let below = children.iter().map(|&c| p1_nodes(tree, c)).max().unwrap();
                below + usize::from(*owner == Owner::Determiner)
            }
        }
    }
    // Longest count of non-trivial determiner nodes on a path where each
    // counted node after the first is preceded by a non-trivial environment
    // node since the previous counted one. `armed` is that separation state.
    fn interleaved(tree: &GameTree, ann: &SpeAnnotation, v: usize, armed: bool) -> usize {
        match &tree.nodes[v] {
            GameNode::Leaf { .. } => 0,
            GameNode::Internal { owner, children } => {
                let rearmed = armed || (*owner == Owner::Environment && ann.is_nontrivial(v));
                let skip = children.iter().map(|&c| interleaved(tree, ann, c, rearmed)).max().unwrap();
                let take = if *owner == Owner::Determiner && ann.is_nontrivial(v) && armed {
                    1 + children.iter().map(|&c| interleaved(tree, ann, c, false)).max().unwrap()
                } else {
                    0
                };
                skip.max(take)
            }
        }
    }
    let depth = strategic_depth(tree, ann);
    Decomposition {
        strategic_depth: depth,
        max_p1_path_nodes: p1_nodes(tree, tree.root),
        interleaving_witnessed: interleaved(tree, ann, tree.root, true) == depth,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrembleReport {
    pub trials: u64,
    pub frequency: f64,
    pub stderr: f64,
    /// Non-trivial determiner nodes on the tremble-free path.
    pub path_nontrivial: usize,
}

fn first_consistent(ann: &SpeAnnotation, v: usize) -> usize {
    ann.consistent_children[v].iter().position(|&b| b).expect("internal node has a consistent child")
}

/// Tremble-free walk: both players take the lowest-index consistent child.
fn intended_path_nontrivial(tree: &GameTree, ann: &SpeAnnotation) -> usize {
    let mut v = tree.root;
    let mut count = 0;
    loop {
        match &tree.nodes[v] {
            GameNode::Leaf { .. } => return count,
            GameNode::Internal { owner, children } => {
                if *owner == Owner::Determiner && ann.is_nontrivial(v) {
                    count += 1;
                }
                v = children[first_consistent(ann, v)];
            }
        }
    }
}

/// Trembling-hand walk repeated over independent trials. The environment
/// follows the fixed lowest-index consistent selector. The determiner plays
/// the forced move at trivial nodes; at non-trivial nodes it trembles with
/// probability `p`, picking uniformly among non-consistent children when any
/// exist and among the remaining consistent ones otherwise. Reported is the
/// share of walks whose every move stayed consistent.
pub fn simulate_trembling(
    tree: &GameTree,
    ann: &SpeAnnotation,
    p: f64,
    trials: u64,
    seed: u64,
) -> Result<TrembleReport, GameError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(GameError::InvalidParams(format!("tremble probability {p} outside [0, 1]")));
    }
    if trials == 0 {
        return Err(GameError::InvalidParams("trials must be positive".into()));
    }
    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(t);
            let mut v = tree.root;
            let mut consistent_walk = true;
            loop {
                match &tree.nodes[v] {
                    GameNode::Leaf { .. } => return u64::from(consistent_walk),
                    GameNode::Internal { owner, children } => {
                        let intended = first_consistent(ann, v);
                        let pick = if *owner == Owner::Determiner
                            && ann.is_nontrivial(v)
                            && rng.gen_bool(p)
                        {
                            let bad: Vec<usize> = (0..children.len())
                                .filter(|&j| !ann.consistent_children[v][j])
                                .collect();
                            let pool: Vec<usize> = if bad.is_empty() {
                                (0..children.len()).filter(|&j| j != intended).collect()
                            } else {
                                bad
                            };
                            pool[rng.gen_range(0..pool.len())]
                        } else {
                            intended
                        };
                        if !ann.consistent_children[v][pick] {
                            consistent_walk = false;
                        }
                        v = children[pick];
                    }
                }
            }
        })
        .sum();
    let frequency = successes as f64 / trials as f64;
    let stderr = (frequency * (1.0 - frequency) / trials as f64).sqrt();
    Ok(TrembleReport { trials, frequency, stderr, path_nontrivial: intended_path_nontrivial(tree, ann) })
}

// File model: nested nodes with string rationals like "3/4" or "-2".

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNodeFile {
    Leaf { p1_payoff: String, p2_payoff: String },
    Node { owner: Owner, children: Vec<TreeNodeFile> },
}

fn parse_rational(text: &str) -> Result<Rational64, GameError> {
    Rational64::from_str(text.trim()).map_err(|e| GameError::InvalidTree(format!("payoff {text:?}: {e}")))
}

pub fn tree_from_file(node: &TreeNodeFile) -> Result<GameTree, GameError> {
    fn build(node: &TreeNodeFile, nodes: &mut Vec<GameNode>) -> Result<usize, GameError> {
        match node {
            TreeNodeFile::Leaf { p1_payoff, p2_payoff } => {
                nodes.push(GameNode::Leaf { payoff: (parse_rational(p1_payoff)?, parse_rational(p2_payoff)?) });
                Ok(nodes.len() - 1)
            }
            TreeNodeFile::Node { owner, children } => {
                let ids = children.iter().map(|c| build(c, nodes)).collect::<Result<Vec<_>, _>>()?;
                nodes.push(GameNode::Internal { owner: *owner, children: ids });
                Ok(nodes.len() - 1)
            }
        }
    }
    let mut nodes = Vec::new();
    let root = build(node, &mut nodes)?;
    let tree = GameTree { nodes, root };
    tree.validate()?;
    Ok(tree)
}

pub fn tree_to_file(tree: &GameTree) -> TreeNodeFile {
    fn emit(tree: &GameTree, v: usize) -> TreeNodeFile {
        match &tree.nodes[v] {
            GameNode::Leaf { payoff } => {
                TreeNodeFile::Leaf { p1_payoff: payoff.0.to_string(), p2_payoff: payoff.1.to_string() }
            }
            GameNode::Internal { owner, children } => {
                TreeNodeFile::Node { owner: *owner, children: children.iter().map(|&c| emit(tree, c)).collect() }
            }
        }
    }
    emit(tree, tree.root)
}

pub fn parse_tree_json(text: &str) -> Result<GameTree, GameError> {
    let file: TreeNodeFile =
        serde_json::from_str(text).map_err(|e| GameError::InvalidTree(format!("parse error: {e}")))?;
    tree_from_file(&file)
}

/// Chain with `t` non-trivial determiner nodes; each offers the chain
/// continuation, a tied leaf, and a strictly worse leaf, so every tremble
/// exits consistency and the consistent walk probability is (1-p)^t.
pub fn breakable_chain(t: usize) -> GameTree {
    let one = Rational64::from_integer(1);
    let zero = Rational64::from_integer(0);
    let mut nodes = vec![GameNode::Leaf { payoff: (one, zero) }];
    let mut top = 0;
    for _ in 0..t {
        nodes.push(GameNode::Leaf { payoff: (one, zero) });
        nodes.push(GameNode::Leaf { payoff: (zero, zero) });
        nodes.push(GameNode::Internal {
            owner: Owner::Determiner,
            children: vec![top, nodes.len() - 2, nodes.len() - 1],
        });
        top = nodes.len() - 1;
    }
    GameTree { nodes, root: top }
}

/// Same chain but with a tied environment node between consecutive
/// determiner nodes.
pub fn interleaved_chain(t: usize) -> GameTree {
    let one = Rational64::from_integer(1);
    let zero = Rational64::from_integer(0);
    let mut nodes = vec![GameNode::Leaf { payoff: (one, zero) }];
    let mut top = 0;
    for i in 0..t {
        if i > 0 {
            // Environment tie: both subgame outcomes give it payoff 0.
            nodes.push(GameNode::Leaf { payoff: (zero, zero) });
            nodes.push(GameNode::Internal { owner: Owner::Environment, children: vec![top, nodes.len() - 1] });
            top = nodes.len() - 1;
        }
        nodes.push(GameNode::Leaf { payoff: (one, zero) });
        nodes.push(GameNode::Leaf { payoff: (zero, zero) });
        nodes.push(GameNode::Internal {
            owner: Owner::Determiner,
            children: vec![top, nodes.len() - 2, nodes.len() - 1],
        });
        top = nodes.len() - 1;
    }
    GameTree { nodes, root: top }
}

/// Random tree with at most `max_internal` internal nodes, branching 2 or 3,
/// random owners, and small integer payoffs so ties are common.
pub fn random_tree<R: rand::Rng>(max_internal: usize, payoff_span: i64, rng: &mut R) -> GameTree {
    let mut nodes = Vec::new();
    let mut budget = max_internal.max(1);
    fn build<R: rand::Rng>(
        nodes: &mut Vec<GameNode>,
        budget: &mut usize,
        payoff_span: i64,
        depth: usize,
        rng: &mut R,
    ) -> usize {
        let make_leaf = *budget == 0 || depth >= 6 || (depth > 0 && rng.gen_bool(0.3));
        if make_leaf {
            let payoff = (
                Rational64::from_integer(rng.gen_range(0..=payoff_span)),
                Rational64::from_integer(rng.gen_range(0..=payoff_span)),
            );
            nodes.push(GameNode::Leaf { payoff });
            return nodes.len() - 1;
        }
        *budget -= 1;
        let owner = if rng.gen_bool(0.5) { Owner::Determiner } else { Owner::Environment };
        let arity = rng.gen_range(2..=3);
        let children = (0..arity).map(|_| build(nodes, budget, payoff_span, depth + 1, rng)).collect();
        nodes.push(GameNode::Internal { owner, children });
        nodes.len() - 1
    }
    let root = build(&mut nodes, &mut budget, payoff_span, 0, rng);
    GameTree { nodes, root }
}

/// Copy of the tree with every leaf payoff replaced by a globally distinct
/// value; order between previously distinct payoffs is preserved, ties are
/// broken by leaf index.
pub fn break_all_ties(tree: &GameTree) -> GameTree {
    let mut out = tree.clone();
    let mut leaf_seq = 0i64;
    let n = out.nodes.len() as i64;
    for node in &mut out.nodes {
        if let GameNode::Leaf { payoff } = node {
            // Nudge both coordinates by a distinct sub-unit amount.
            let eps = Rational64::new(leaf_seq + 1, 8 * n);
            payoff.0 += eps;
            payoff.1 += eps * Rational64::new(1, 2);
            leaf_seq += 1;
        }
    }
    out
}
