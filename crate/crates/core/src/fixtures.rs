//! Bundled example specifications and synthetic families.
//!
//! Everything here is plain data: the constructors build `ExplicitSpec`
//! documents (the serializable form) and the `*_compiled` convenience wrappers
//! hand back ready-to-use `CompiledSpec`s. The CLI ships the same documents as
//! files under `data/`; a test keeps the two in sync.

use rand::Rng;

use crate::spec::{
    AvailabilityRule, CommitmentDef, CommitmentKind, CompiledSpec, Condition, EnvEffect, EnvMoveDef, ExplicitSpec,
    PointwiseRule, TableEntry, TransformAction, TransformRule,
};

fn s(v: &str) -> String {
    v.to_string()
}

fn names(vs: &[&str]) -> Vec<String> {
    vs.iter().map(|v| v.to_string()).collect()
}

/// Three outcomes, three atomic exclusions, and one-shot retraction moves the
/// environment may fire only before the first commitment. One exclusion is
/// always safe; two at once can be emptied by an interfering retraction, so
/// resolution takes two rounds.
pub fn three_valued_consensus_file() -> ExplicitSpec {
    let retract = |v: &str| EnvMoveDef {
        name: format!("retract_{v}"),
        class: Some(s("retract")),
        effect: EnvEffect::Remove(vec![v.to_string()]),
        availability: vec![AvailabilityRule::ClassAtMostOnce, AvailabilityRule::BeforeAnyCommitment],
    };
    let drop = |v: &str, keep: [&str; 2]| CommitmentDef {
        name: format!("drop_{v}"),
        kind: CommitmentKind::Pointwise(PointwiseRule::Retain(names(&keep))),
    };
    ExplicitSpec {
        outcomes: names(&["a", "b", "c"]),
        horizon: 6,
        env_moves: vec![
            retract("a"),
            retract("b"),
            retract("c"),
            EnvMoveDef { name: s("tick"), class: None, effect: EnvEffect::None, availability: vec![] },
        ],
        basis: vec![drop("a", ["b", "c"]), drop("b", ["a", "c"]), drop("c", ["a", "b"])],
        admissible_table: vec![TableEntry { env_history: vec![], admissible: names(&["a", "b", "c"]) }],
    }
}

pub fn three_valued_consensus() -> CompiledSpec {
    three_valued_consensus_file().compile().expect("bundled spec compiles")
}

/// Two proposable values. `close` keeps exactly what has been proposed so far
/// (permanently), `draw` breaks a tie only once the set is closed.
pub fn consensus_server_file() -> ExplicitSpec {
    let propose = |v: &str| EnvMoveDef {
        name: format!("propose_{v}"),
        class: None,
        effect: EnvEffect::None,
        availability: vec![AvailabilityRule::AtMostOnce],
    };
    ExplicitSpec {
        outcomes: names(&["a", "b"]),
        horizon: 4,
        env_moves: vec![propose("a"), propose("b")],
        basis: vec![
            CommitmentDef {
                name: s("close"),
                kind: CommitmentKind::Pointwise(PointwiseRule::RetainProposed(vec![
                    (s("propose_a"), names(&["a"])),
                    (s("propose_b"), names(&["b"])),
                ])),
            },
            CommitmentDef {
                name: s("draw"),
                kind: CommitmentKind::Transform(TransformRule {
                    when: vec![Condition::CommitmentApplied(s("close"))],
                    then: TransformAction::KeepMinimum,
                    otherwise: TransformAction::Identity,
                }),
            },
        ],
        admissible_table: vec![TableEntry { env_history: vec![], admissible: names(&["a", "b"]) }],
    }
}

pub fn consensus_server() -> CompiledSpec {
    consensus_server_file().compile().expect("bundled spec compiles")
}

/// Deliberately non-conforming: `readd` replaces the set with the full space
/// once `narrow` has been applied, re-admitting an excluded outcome. The
/// conformance scan reports exactly one escape at horizon 2.
pub fn corrupted_readd() -> ExplicitSpec {
    ExplicitSpec {
        outcomes: names(&["a", "b"]),
        horizon: 2,
        env_moves: vec![],
        basis: vec![
            CommitmentDef { name: s("narrow"), kind: CommitmentKind::Pointwise(PointwiseRule::Retain(names(&["b"]))) },
            CommitmentDef {
                name: s("readd"),
                kind: CommitmentKind::Transform(TransformRule {
                    when: vec![Condition::CommitmentApplied(s("narrow"))],
                    then: TransformAction::ReplaceWith(names(&["a", "b"])),
                    otherwise: TransformAction::Identity,
                }),
            },
        ],
        admissible_table: vec![TableEntry { env_history: vec![], admissible: names(&["a", "b"]) }],
    }
}

/// Single admissible outcome from the start; nothing to decide.
pub fn single_valued_file() -> ExplicitSpec {
    ExplicitSpec {
        outcomes: names(&["only"]),
        horizon: 2,
        env_moves: vec![],
        basis: vec![CommitmentDef {
            name: s("noop"),
            kind: CommitmentKind::Transform(TransformRule {
                when: vec![],
                then: TransformAction::Identity,
                otherwise: TransformAction::Identity,
            }),
        }],
        admissible_table: vec![TableEntry { env_history: vec![], admissible: names(&["only"]) }],
    }
}

pub fn single_valued() -> CompiledSpec {
    single_valued_file().compile().expect("bundled spec compiles")
}

/// Two mutually exclusive narrowings with a passive environment: either one
/// resolves alone, so the minimax value is a single round.
pub fn flat_ambiguous_file() -> ExplicitSpec {
    ExplicitSpec {
        outcomes: names(&["a", "b"]),
        horizon: 3,
        env_moves: vec![EnvMoveDef { name: s("tick"), class: None, effect: EnvEffect::None, availability: vec![] }],
        basis: vec![
            CommitmentDef { name: s("keep_a"), kind: CommitmentKind::Pointwise(PointwiseRule::Retain(names(&["a"]))) },
            CommitmentDef { name: s("keep_b"), kind: CommitmentKind::Pointwise(PointwiseRule::Retain(names(&["b"]))) },
        ],
        admissible_table: vec![TableEntry { env_history: vec![], admissible: names(&["a", "b"]) }],
    }
}

pub fn flat_ambiguous() -> CompiledSpec {
    flat_ambiguous_file().compile().expect("bundled spec compiles")
}

/// One agent's local view of a two-agent exchange: the finishing step only
/// acts once the set is already narrowed, but the narrowing commitment belongs
/// to the peer and is absent from this basis. No resolving strategy exists.
pub fn cross_dependency_file() -> ExplicitSpec {
    ExplicitSpec {
        outcomes: names(&["o0", "o1", "o2"]),
        horizon: 4,
        env_moves: vec![],
        basis: vec![CommitmentDef {
            name: s("finish"),
            kind: CommitmentKind::Transform(TransformRule {
                when: vec![Condition::SetWithin(names(&["o1", "o2"]))],
                then: TransformAction::RetainSet(names(&["o1"])),
                otherwise: TransformAction::Identity,
            }),
        }],
        admissible_table: vec![TableEntry { env_history: vec![], admissible: names(&["o0", "o1", "o2"]) }],
    }
}

pub fn cross_dependency() -> CompiledSpec {
    cross_dependency_file().compile().expect("bundled spec compiles")
}

/// Staged information: the opening move is invalid until the environment
/// delivers its signal, and the closing move is inert until the opening move
/// has landed. Resolution therefore takes exactly two rounds after one forced
/// wait.
pub fn staged_information_file() -> ExplicitSpec {
    ExplicitSpec {
        outcomes: names(&["o0", "o1", "o2"]),
        horizon: 6,
        env_moves: vec![EnvMoveDef {
            name: s("signal"),
            class: None,
            effect: EnvEffect::None,
            availability: vec![AvailabilityRule::AtMostOnce],
        }],
        basis: vec![
            CommitmentDef {
                name: s("open"),
                kind: CommitmentKind::Transform(TransformRule {
                    when: vec![Condition::EnvMoveOccurred(s("signal"))],
                    then: TransformAction::RetainSet(names(&["o1", "o2"])),
                    otherwise: TransformAction::ReplaceWith(vec![]),
                }),
            },
            CommitmentDef {
                name: s("settle"),
                kind: CommitmentKind::Transform(TransformRule {
                    when: vec![Condition::SetWithin(names(&["o1", "o2"]))],
                    then: TransformAction::RetainSet(names(&["o1"])),
                    otherwise: TransformAction::Identity,
                }),
            },
        ],
        admissible_table: vec![TableEntry { env_history: vec![], admissible: names(&["o0", "o1", "o2"]) }],
    }
}

pub fn staged_information() -> CompiledSpec {
    staged_information_file().compile().expect("bundled spec compiles")
}

/// Closed-environment spec whose outcomes are the down-closed subsets of a
/// partial order and whose commitments mimic ordered elimination: element `v`
/// acts only when every remaining outcome already contains all of `v`'s
/// predecessors, and then keeps the outcomes containing `v`.
///
/// `edges` are predecessor pairs `(u, v)` with `u < v`; elements are `0..n`.
pub fn poset_spec_file(n: usize, edges: &[(usize, usize)]) -> ExplicitSpec {
    assert!(n <= 12, "poset builder caps at 12 elements");
    for &(u, v) in edges {
        assert!(u < v && v < n, "edges must be forward pairs inside 0..n");
    }
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in edges {
        preds[v].push(u);
    }
    // Down-closed subsets, each named by its element bitmask.
    let mut downsets: Vec<u32> = Vec::new();
    'mask: for mask in 0u32..(1 << n) {
        for v in 0..n {
            if mask >> v & 1 == 1 {
                for &u in &preds[v] {
                    if mask >> u & 1 == 0 {
                        continue 'mask;
                    }
                }
            }
        }
        downsets.push(mask);
    }
    let outcome_name = |mask: u32| format!("d{mask:03x}");
    let outcomes: Vec<String> = downsets.iter().map(|&m| outcome_name(m)).collect();
    let mut basis = Vec::new();
    for v in 0..n {
        let pred_mask: u32 = preds[v].iter().map(|&u| 1u32 << u).sum();
        let ready: Vec<String> =
            downsets.iter().filter(|&&m| m & pred_mask == pred_mask).map(|&m| outcome_name(m)).collect();
        let keeps: Vec<String> = downsets.iter().filter(|&&m| m >> v & 1 == 1).map(|&m| outcome_name(m)).collect();
        basis.push(CommitmentDef {
            name: format!("elim{v}"),
            kind: CommitmentKind::Transform(TransformRule {
                when: vec![Condition::SetWithin(ready)],
                then: TransformAction::RetainSet(keeps),
                otherwise: TransformAction::Identity,
            }),
        });
    }
    ExplicitSpec {
        outcomes: outcomes.clone(),
        horizon: n.max(2),
        env_moves: vec![],
        basis,
        admissible_table: vec![TableEntry { env_history: vec![], admissible: outcomes }],
    }
}

/// Longest chain of the partial order, in elements.
pub fn poset_height(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in edges {
        preds[v].push(u);
    }
    let mut depth = vec![0usize; n];
    for v in 0..n {
        depth[v] = 1 + preds[v].iter().map(|&u| depth[u]).max().unwrap_or(0);
    }
    depth.iter().copied().max().unwrap_or(0)
}

/// Random forward-edge partial order on `n` elements.
pub fn random_poset_edges<R: Rng>(n: usize, density: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for v in 1..n {
        for u in 0..v {
            if rng.gen_bool(density) {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Mutually commuting narrowings: every filter keeps a shared anchor outcome,
/// so any application order and any grouping agree.
pub fn pointwise_flat_file(m: usize) -> ExplicitSpec {
    let outcomes: Vec<String> = (0..=m).map(|i| format!("o{i}")).collect();
    let basis = (0..m)
        .map(|i| CommitmentDef {
            name: format!("f{i}"),
            kind: CommitmentKind::Pointwise(PointwiseRule::Retain(vec![s("o0"), format!("o{}", i + 1)])),
        })
        .collect();
    ExplicitSpec {
        outcomes: outcomes.clone(),
        horizon: m.max(2),
        env_moves: vec![],
        basis,
        admissible_table: vec![TableEntry { env_history: vec![], admissible: outcomes }],
    }
}

/// Random pointwise spec: `m` filters over `n` outcomes, each retaining a
/// random superset of outcome 0.
pub fn random_pointwise_file<R: Rng>(n: usize, m: usize, rng: &mut R) -> ExplicitSpec {
    let outcomes: Vec<String> = (0..n).map(|i| format!("o{i}")).collect();
    let basis = (0..m)
        .map(|i| {
            let mut keep = vec![s("o0")];
            for o in 1..n {
                if rng.gen_bool(0.6) {
                    keep.push(format!("o{o}"));
                }
            }
            CommitmentDef { name: format!("f{i}"), kind: CommitmentKind::Pointwise(PointwiseRule::Retain(keep)) }
        })
        .collect();
    ExplicitSpec {
        outcomes: outcomes.clone(),
        horizon: m.max(2),
        env_moves: vec![],
        basis,
        admissible_table: vec![TableEntry { env_history: vec![], admissible: outcomes }],
    }
}

/// Three-man market whose aligned preferences admit exactly one stable
/// matching: everyone gets their top choice, so the rotation poset is empty.
pub fn unique_stable_instance() -> crate::matching::MatchingInstance {
    crate::matching::MatchingInstance {
        n: 3,
        men_prefs: vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]],
        women_prefs: vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]],
    }
}

/// The two-block formula where grabbing the universal variable first would
/// flip the verdict: the statement is true, but only under the declared
/// quantifier order.
pub fn bundled_qbf_file() -> crate::metacomplexity::QbfFile {
    crate::metacomplexity::QbfFile {
        prefix: vec![
            crate::metacomplexity::QbfBlockFile {
                quantifier: crate::metacomplexity::Quantifier::Exists,
                variables: vec![1],
            },
            crate::metacomplexity::QbfBlockFile {
                quantifier: crate::metacomplexity::Quantifier::Forall,
                variables: vec![2],
            },
        ],
        matrix: s("(or x1 x2)"),
    }
}

#[cfg(test)]
mod bundled_data {
    use super::*;
    use std::path::PathBuf;

    fn data_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
    }

    fn files() -> Vec<(&'static str, String)> {
        vec![
            ("three_valued_consensus.json", pretty_json(&three_valued_consensus_file())),
            ("consensus_server.json", pretty_json(&consensus_server_file())),
            ("corrupted_readd.json", pretty_json(&corrupted_readd())),
            ("single_valued.json", pretty_json(&single_valued_file())),
            ("flat_ambiguous.json", pretty_json(&flat_ambiguous_file())),
            ("cross_dependency.json", pretty_json(&cross_dependency_file())),
            ("staged_information.json", pretty_json(&staged_information_file())),
            ("unique_stable_matching.json", pretty_json(&unique_stable_instance())),
            ("qbf_exists_forall_or.json", pretty_json(&bundled_qbf_file())),
            (
                "breakable_chain_3.json",
                pretty_json(&crate::games::tree_to_file(&crate::games::breakable_chain(3))),
            ),
            (
                "cross_dependency_scenario.json",
                pretty_json(&crate::distsim::cross_dependency_scenario(0)),
            ),
        ]
    }

    fn pretty_json<T: serde::Serialize>(value: &T) -> String {
        let mut text = serde_json::to_string_pretty(value).expect("fixtures serialize");
        text.push('\n');
        text
    }

    /// Dev utility: rewrites the bundled data directory from the fixture
    /// constructors. Run with --ignored when fixtures change.
    #[test]
    #[ignore]
    fn regenerate_bundled_data() {
        let dir = data_dir();
        std::fs::create_dir_all(&dir).unwrap();
        for (name, text) in files() {
            std::fs::write(dir.join(name), text).unwrap();
        }
    }

    #[test]
    fn bundled_data_matches_fixture_constructors() {
        for (name, expected) in files() {
            let path = data_dir().join(name);
            let on_disk = std::fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(on_disk, expected, "{name} is stale; regenerate the data directory");
        }
    }
}
