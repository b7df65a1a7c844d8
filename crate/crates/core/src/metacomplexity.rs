//! Exact solvers at brute-force scale for two depth questions: minimum
//! decision-tree depth of an explicit truth table, and the round-control
//! game where a determiner with a fixed budget of rounds tries to force a
//! formula true against an adversarial environment.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetaError {
    #[error("table has {n} variables, limit {max}")]
    TooManyVariables { n: usize, max: usize },
    #[error("instance has {n} variables, limit {max}")]
    TooLarge { n: usize, max: usize },
    #[error("malformed quantifier prefix: {0}")]
    MalformedPrefix(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

// Truth tables

/// Explicit boolean function; `bits[a]` is f at the assignment whose bit j
/// gives variable j. Hex form reads the table as a little-endian integer:
/// f(0) is the least significant bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    pub n: usize,
    pub bits: Vec<bool>,
}

const MAX_TABLE_VARS: usize = 5;

impl TruthTable {
    pub fn new(n: usize, bits: Vec<bool>) -> Result<TruthTable, MetaError> {
        if n == 0 || n > 8 {
            return Err(MetaError::InvalidInput(format!("table variable count {n} outside 1..=8")));
        }
        if bits.len() != 1 << n {
            return Err(MetaError::InvalidInput(format!("table has {} bits, expected {}", bits.len(), 1 << n)));
        }
        Ok(TruthTable { n, bits })
    }

    pub fn from_hex(n: usize, text: &str) -> Result<TruthTable, MetaError> {
        let digits = text.trim().trim_start_matches("0x").trim_start_matches("0X");
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(MetaError::InvalidInput(format!("bad hex table {text:?}")));
        }
        let mut bits = vec![false; digits.len() * 4];
        for (j, c) in digits.chars().rev().enumerate() {
            let v = c.to_digit(16).unwrap();
            for b in 0..4 {
                bits[4 * j + b] = v >> b & 1 == 1;
            }
        }
        if n == 0 || n > 8 {
            return Err(MetaError::InvalidInput(format!("table variable count {n} outside 1..=8")));
        }
        let size = 1usize << n;
        if bits.len() < size || bits[size..].iter().any(|&b| b) {
            return Err(MetaError::InvalidInput(format!("hex table {text:?} does not fit {n} variables")));
        }
        bits.truncate(size);
        TruthTable::new(n, bits)
    }

    pub fn to_hex(&self) -> String {
        let mut out = String::new();
        let mut j = 0;
        while j < self.bits.len() {
            let mut v = 0u32;
            for b in 0..4 {
                if j + b < self.bits.len() && self.bits[j + b] {
                    v |= 1 << b;
                }
            }
            out.push(char::from_digit(v, 16).unwrap());
            j += 4;
        }
        out.chars().rev().collect()
    }

    /// Table with the variable roles permuted: the new variable j acts as
    /// the old variable perm[j].
    pub fn permute_variables(&self, perm: &[usize]) -> Result<TruthTable, MetaError> {
        if perm.len() != self.n {
            return Err(MetaError::InvalidInput("permutation length mismatch".into()));
        }
        let mut bits = vec![false; self.bits.len()];
        for (a, slot) in bits.iter_mut().enumerate() {
            let mut old = 0usize;
            for j in 0..self.n {
                if a >> j & 1 == 1 {
                    old |= 1 << perm[j];
                }
            }
            *slot = self.bits[old];
        }
        TruthTable::new(self.n, bits)
    }
}

pub fn parity_table(n: usize) -> TruthTable {
    let bits = (0..1usize << n).map(|a| a.count_ones() % 2 == 1).collect();
    TruthTable::new(n, bits).expect("parity table dimensions are valid")
}

/// Exact minimum depth of a decision tree computing the table: 0 when the
/// function is constant, otherwise the best variable to query first. Memoized
/// over restrictions.
pub fn min_decision_tree_depth(table: &TruthTable) -> Result<usize, MetaError> {
    if table.n > MAX_TABLE_VARS {
        return Err(MetaError::TooManyVariables { n: table.n, max: MAX_TABLE_VARS });
    }
    let mut memo: HashMap<(u32, u32), usize> = HashMap::new();
    Ok(restriction_depth(table, 0, 0, &mut memo))
}

fn restriction_depth(table: &TruthTable, fixed: u32, vals: u32, memo: &mut HashMap<(u32, u32), usize>) -> usize {
    if let Some(&d) = memo.get(&(fixed, vals)) {
        return d;
    }
    let mut first: Option<bool> = None;
    let mut constant = true;
    for a in 0..table.bits.len() as u32 {
        if a & fixed != vals {
            continue;
        }
        let v = table.bits[a as usize];
        match first {
            None => first = Some(v),
            Some(f) if f != v => {
                constant = false;
                break;
            }
            _ => {}
        }
    }
    let d = if constant {
        0
    } else {
        (0..table.n as u32)
            .filter(|&j| fixed >> j & 1 == 0)
            .map(|j| {
                let zero = restriction_depth(table, fixed | 1 << j, vals, memo);
                let one = restriction_depth(table, fixed | 1 << j, vals | 1 << j, memo);
                1 + zero.max(one)
            })
            .min()
            .expect("non-constant restriction has a free variable")
    };
    memo.insert((fixed, vals), d);
    d
}

// Formulas

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Var(usize),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Formula::Var(v) => Some(*v),
            Formula::Not(f) => f.max_var(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().filter_map(|f| f.max_var()).max(),
        }
    }

    pub fn eval(&self, vals: u32) -> bool {
        match self {
            Formula::Var(v) => vals >> v & 1 == 1,
            Formula::Not(f) => !f.eval(vals),
            Formula::And(fs) => fs.iter().all(|f| f.eval(vals)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(vals)),
        }
    }

    /// Three-valued evaluation under a partial assignment; None when the
    /// unset variables still matter.
    fn eval_partial(&self, assigned: u32, vals: u32) -> Option<bool> {
        match self {
            Formula::Var(v) => {
                if assigned >> v & 1 == 1 {
                    Some(vals >> v & 1 == 1)
                } else {
                    None
                }
            }
            Formula::Not(f) => f.eval_partial(assigned, vals).map(|b| !b),
            Formula::And(fs) => {
                let mut all_true = true;
                for f in fs {
                    match f.eval_partial(assigned, vals) {
                        Some(false) => return Some(false),
                        Some(true) => {}
                        None => all_true = false,
                    }
                }
                if all_true {
                    Some(true)
                } else {
                    None
                }
            }
            Formula::Or(fs) => {
                let mut all_false = true;
                for f in fs {
                    match f.eval_partial(assigned, vals) {
                        Some(true) => return Some(true),
                        Some(false) => {}
                        None => all_false = false,
                    }
                }
                if all_false {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Var(v) => write!(f, "x{}", v + 1),
            Formula::Not(inner) => write!(f, "(not {inner})"),
            Formula::And(fs) => {
                write!(f, "(and")?;
                for x in fs {
                    write!(f, " {x}")?;
                }
                write!(f, ")")
            }
            Formula::Or(fs) => {
                write!(f, "(or")?;
                for x in fs {
                    write!(f, " {x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Prefix-notation parser: `(and (or x1 (not x2)) x3)`. Variables are
/// 1-based in text, 0-based internally.
pub fn parse_formula(text: &str) -> Result<Formula, MetaError> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    let mut pos = 0;
    let formula = parse_expr(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(MetaError::InvalidInput(format!("trailing tokens after formula: {:?}", &tokens[pos..])));
    }
    Ok(formula)
}

fn parse_expr(tokens: &[String], pos: &mut usize) -> Result<Formula, MetaError> {
    let tok = tokens.get(*pos).ok_or_else(|| MetaError::InvalidInput("unexpected end of formula".into()))?;
    *pos += 1;
    if tok != "(" {
        return parse_var(tok);
    }
    let head = tokens.get(*pos).ok_or_else(|| MetaError::InvalidInput("empty expression".into()))?.clone();
    *pos += 1;
    let mut args = Vec::new();
    while tokens.get(*pos).map(|t| t != ")").unwrap_or(false) {
        args.push(parse_expr(tokens, pos)?);
    }
    if tokens.get(*pos).is_none() {
        return Err(MetaError::InvalidInput("unbalanced parentheses".into()));
    }
    *pos += 1;
    match head.as_str() {
        "not" => {
            if args.len() != 1 {
                return Err(MetaError::InvalidInput("not takes exactly one argument".into()));
            }
            Ok(Formula::Not(Box::new(args.pop().unwrap())))
        }
        "and" => {
            if args.is_empty() {
                return Err(MetaError::InvalidInput("and needs at least one argument".into()));
            }
            Ok(Formula::And(args))
        }
        "or" => {
            if args.is_empty() {
                return Err(MetaError::InvalidInput("or needs at least one argument".into()));
            }
            Ok(Formula::Or(args))
        }
        other => Err(MetaError::InvalidInput(format!("unknown operator {other:?}"))),
    }
}

fn parse_var(tok: &str) -> Result<Formula, MetaError> {
    let Some(num) = tok.strip_prefix('x') else {
        return Err(MetaError::InvalidInput(format!("expected variable, got {tok:?}")));
    };
    let idx: usize = num.parse().map_err(|_| MetaError::InvalidInput(format!("bad variable {tok:?}")))?;
    if idx == 0 {
        return Err(MetaError::InvalidInput("variables are numbered from x1".into()));
    }
    Ok(Formula::Var(idx - 1))
}

// The round-control game

const MAX_GAME_VARS: usize = 12;

/// Fixed per-round protocol: round i sets variable `order[i]`, owned by the
/// determiner exactly where `determiner_round[i]` holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PinnedProtocol {
    pub order: Vec<usize>,
    pub determiner_round: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthGameInstance {
    pub formula: Formula,
    pub n: usize,
    pub k: usize,
    /// When present the schedule is not searched; rounds follow the
    /// protocol. Produced by the quantified-formula reduction.
    pub pinned: Option<PinnedProtocol>,
}

/// How the determiner's k controlled rounds are chosen in the free game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleMode {
    /// Decide at each round whether to spend budget.
    Adaptive,
    /// Commit to the k controlled round positions before play.
    Upfront,
}

/// True when the determiner can force the formula true controlling exactly
/// k of the n rounds. The environment picks both variable and value at its
/// rounds, the stronger reading. Pinned instances ignore `mode`.
pub fn depth_game_decide(inst: &DepthGameInstance, mode: ScheduleMode) -> Result<bool, MetaError> {
    if inst.n > MAX_GAME_VARS {
        return Err(MetaError::TooLarge { n: inst.n, max: MAX_GAME_VARS });
    }
    if inst.n == 0 {
        return Err(MetaError::InvalidInput("game needs at least one variable".into()));
    }
    if let Some(v) = inst.formula.max_var() {
        if v >= inst.n {
            return Err(MetaError::InvalidInput(format!("formula references x{} but n = {}", v + 1, inst.n)));
        }
    }
    if let Some(pinned) = &inst.pinned {
        let mut sorted = pinned.order.clone();
        sorted.sort_unstable();
        if sorted != (0..inst.n).collect::<Vec<_>>() || pinned.determiner_round.len() != inst.n {
            return Err(MetaError::InvalidInput("pinned protocol must cover each variable once".into()));
        }
        if pinned.determiner_round.iter().filter(|&&d| d).count() != inst.k {
            return Err(MetaError::InvalidInput("pinned determiner rounds disagree with the budget".into()));
        }
        return Ok(win_pinned(&inst.formula, pinned, 0, 0, 0));
    }
    if inst.k > inst.n {
        return Err(MetaError::InvalidInput(format!("budget {} exceeds {} rounds", inst.k, inst.n)));
    }
    match mode {
        ScheduleMode::Adaptive => {
            let mut memo = HashMap::new();
            Ok(win_adaptive(&inst.formula, inst.n, 0, 0, inst.k, &mut memo))
        }
        ScheduleMode::Upfront => {
            let mut found = false;
            let mut schedule = Vec::new();
            enumerate_subsets(inst.n, inst.k, &mut schedule, &mut |rounds: &[bool]| {
                if !found {
                    let mut memo = HashMap::new();
                    found = win_upfront(&inst.formula, inst.n, rounds, 0, 0, &mut memo);
                }
            });
            Ok(found)
        }
    }
}

fn enumerate_subsets(n: usize, k: usize, prefix: &mut Vec<bool>, f: &mut impl FnMut(&[bool])) {
    if prefix.len() == n {
        if prefix.iter().filter(|&&b| b).count() == k {
            f(prefix);
        }
        return;
    }
    let chosen = prefix.iter().filter(|&&b| b).count();
    let left = n - prefix.len();
    if chosen < k && chosen + left > k {
        // Both branches only when the count can still land on k.
    }
    if chosen + left > k {
        prefix.push(false);
        enumerate_subsets(n, k, prefix, f);
        prefix.pop();
    }
    if chosen < k {
        prefix.push(true);
        enumerate_subsets(n, k, prefix, f);
        prefix.pop();
    }
}

fn win_adaptive(
    formula: &Formula,
    n: usize,
    assigned: u32,
    vals: u32,
    budget: usize,
    memo: &mut HashMap<(u32, u32, usize), bool>,
) -> bool {
    if let Some(v) = formula.eval_partial(assigned, vals) {
        return v;
    }
    if let Some(&r) = memo.get(&(assigned, vals, budget)) {
        return r;
    }
    let rounds_left = n - assigned.count_ones() as usize;
    let mut result = false;
    if budget > 0 {
        'spend: for j in 0..n as u32 {
            if assigned >> j & 1 == 1 {
                continue;
            }
            for val in [0u32, 1] {
                if win_adaptive(formula, n, assigned | 1 << j, vals | val << j, budget - 1, memo) {
                    result = true;
                    break 'spend;
                }
            }
        }
    }
    if !result && rounds_left > budget {
        // Ceding keeps the budget spendable in the remaining rounds.
        result = (0..n as u32).filter(|&j| assigned >> j & 1 == 0).all(|j| {
            [0u32, 1]
                .iter()
                .all(|&val| win_adaptive(formula, n, assigned | 1 << j, vals | val << j, budget, memo))
        });
    }
    memo.insert((assigned, vals, budget), result);
    result
}

fn win_upfront(
    formula: &Formula,
    n: usize,
    rounds: &[bool],
    assigned: u32,
    vals: u32,
    memo: &mut HashMap<(u32, u32), bool>,
) -> bool {
    if let Some(v) = formula.eval_partial(assigned, vals) {
        return v;
    }
    if let Some(&r) = memo.get(&(assigned, vals)) {
        return r;
    }
    let round = assigned.count_ones() as usize;
    let free = (0..n as u32).filter(|&j| assigned >> j & 1 == 0);
    let result = if rounds[round] {
        free.clone().any(|j| {
            [0u32, 1].iter().any(|&val| win_upfront(formula, n, rounds, assigned | 1 << j, vals | val << j, memo))
        })
    } else {
        free.clone().all(|j| {
            [0u32, 1].iter().all(|&val| win_upfront(formula, n, rounds, assigned | 1 << j, vals | val << j, memo))
        })
    };
    memo.insert((assigned, vals), result);
    result
}

fn win_pinned(formula: &Formula, pinned: &PinnedProtocol, round: usize, assigned: u32, vals: u32) -> bool {
    if let Some(v) = formula.eval_partial(assigned, vals) {
        return v;
    }
    // A full assignment always evaluates, so round stays in range here.
    let j = pinned.order[round] as u32;
    let outcomes =
        [0u32, 1].map(|val| win_pinned(formula, pinned, round + 1, assigned | 1 << j, vals | val << j));
    if pinned.determiner_round[round] {
        outcomes[0] || outcomes[1]
    } else {
        outcomes[0] && outcomes[1]
    }
}

// Quantified formulas

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantifier {
    Exists,
    Forall,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantBlock {
    pub quantifier: Quantifier,
    pub variables: Vec<usize>,
}

/// Prenex quantified formula with strictly alternating blocks starting
/// existential; every variable is quantified exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Qbf {
    pub prefix: Vec<QuantBlock>,
    pub matrix: Formula,
}

impl Qbf {
    pub fn var_count(&self) -> usize {
        self.prefix.iter().map(|b| b.variables.len()).sum()
    }

    pub fn validate(&self) -> Result<(), MetaError> {
        if self.prefix.is_empty() {
            return Err(MetaError::MalformedPrefix("empty prefix".into()));
        }
        if self.prefix[0].quantifier != Quantifier::Exists {
            return Err(MetaError::MalformedPrefix("prefix must start existential".into()));
        }
        for pair in self.prefix.windows(2) {
            if pair[0].quantifier == pair[1].quantifier {
                return Err(MetaError::MalformedPrefix("adjacent blocks share a quantifier".into()));
            }
        }
        let n = self.var_count();
        let mut seen = vec![false; n];
        for block in &self.prefix {
            if block.variables.is_empty() {
                return Err(MetaError::MalformedPrefix("empty quantifier block".into()));
            }
            for &v in &block.variables {
                if v >= n || seen[v] {
                    return Err(MetaError::MalformedPrefix(format!("variable x{} not quantified exactly once", v + 1)));
                }
                seen[v] = true;
            }
        }
        if let Some(v) = self.matrix.max_var() {
            if v >= n {
                return Err(MetaError::MalformedPrefix(format!("matrix references unquantified x{}", v + 1)));
            }
        }
        Ok(())
    }
}

/// Reduction to the round-control game: rounds follow the prefix order and
/// ownership follows the quantifiers, pinned. The free game is not
/// equivalent: on exists-y forall-x with matrix x it would let the
/// determiner grab x and win a false formula.
pub fn qbf_to_depth_instance(qbf: &Qbf) -> Result<DepthGameInstance, MetaError> {
    qbf.validate()?;
    let n = qbf.var_count();
    if n > MAX_GAME_VARS {
        return Err(MetaError::TooLarge { n, max: MAX_GAME_VARS });
    }
    let mut order = Vec::with_capacity(n);
    let mut determiner_round = Vec::with_capacity(n);
    for block in &qbf.prefix {
        for &v in &block.variables {
            order.push(v);
            determiner_round.push(block.quantifier == Quantifier::Exists);
        }
    }
    let k = determiner_round.iter().filter(|&&d| d).count();
    Ok(DepthGameInstance { formula: qbf.matrix.clone(), n, k, pinned: Some(PinnedProtocol { order, determiner_round }) })
}

/// Independent truth oracle: direct recursion over quantifier blocks.
pub fn qbf_eval_brute(qbf: &Qbf) -> Result<bool, MetaError> {
    qbf.validate()?;
    let n = qbf.var_count();
    if n > 20 {
        return Err(MetaError::TooLarge { n, max: 20 });
    }
    fn rec(qbf: &Qbf, block: usize, within: usize, vals: u32) -> bool {
        if block == qbf.prefix.len() {
            return qbf.matrix.eval(vals);
        }
        let b = &qbf.prefix[block];
        if within == b.variables.len() {
            return rec(qbf, block + 1, 0, vals);
        }
        let j = b.variables[within] as u32;
        let zero = rec(qbf, block, within + 1, vals);
        let one = rec(qbf, block, within + 1, vals | 1 << j);
        match b.quantifier {
            Quantifier::Exists => zero || one,
            Quantifier::Forall => zero && one,
        }
    }
    Ok(rec(qbf, 0, 0, 0))
}

// File model for quantified formulas.

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QbfFile {
    pub prefix: Vec<QbfBlockFile>,
    /// Matrix in prefix notation, e.g. "(or x1 (not x2))".
    pub matrix: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QbfBlockFile {
    pub quantifier: Quantifier,
    /// 1-based variable numbers matching the x-names in the matrix.
    pub variables: Vec<usize>,
}

pub fn qbf_from_file(file: &QbfFile) -> Result<Qbf, MetaError> {
    let matrix = parse_formula(&file.matrix)?;
    let prefix = file
        .prefix
        .iter()
        .map(|b| {
            let variables = b
                .variables
                .iter()
                .map(|&v| {
                    if v == 0 {
                        Err(MetaError::MalformedPrefix("variables are numbered from x1".into()))
                    } else {
                        Ok(v - 1)
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(QuantBlock { quantifier: b.quantifier, variables })
        })
        .collect::<Result<Vec<_>, MetaError>>()?;
    let qbf = Qbf { prefix, matrix };
    qbf.validate()?;
    Ok(qbf)
}

pub fn parse_qbf_json(text: &str) -> Result<Qbf, MetaError> {
    let file: QbfFile = serde_json::from_str(text).map_err(|e| MetaError::InvalidInput(format!("parse error: {e}")))?;
    qbf_from_file(&file)
}

/// Random expression tree over n variables, depth at most `depth`.
pub fn random_formula<R: rand::Rng>(n: usize, depth: usize, rng: &mut R) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return Formula::Var(rng.gen_range(0..n));
    }
    match rng.gen_range(0..3) {
        0 => Formula::Not(Box::new(random_formula(n, depth - 1, rng))),
        1 => {
            let arity = rng.gen_range(2..=3);
            Formula::And((0..arity).map(|_| random_formula(n, depth - 1, rng)).collect())
        }
        _ => {
            let arity = rng.gen_range(2..=3);
            Formula::Or((0..arity).map(|_| random_formula(n, depth - 1, rng)).collect())
        }
    }
}

/// Random two-block formula: an existential block followed by a universal
/// block over `n` variables, split at a random point.
pub fn random_sigma2_qbf<R: rand::Rng>(n: usize, rng: &mut R) -> Qbf {
    use rand::seq::SliceRandom;
    let mut vars: Vec<usize> = (0..n).collect();
    vars.shuffle(rng);
    let split = rng.gen_range(1..n);
    Qbf {
        prefix: vec![
            QuantBlock { quantifier: Quantifier::Exists, variables: vars[..split].to_vec() },
            QuantBlock { quantifier: Quantifier::Forall, variables: vars[split..].to_vec() },
        ],
        matrix: random_formula(n, 4, rng),
    }
}

/// Random fully alternating formula with singleton blocks over `2k`
/// variables.
pub fn random_alternating_qbf<R: rand::Rng>(k: usize, rng: &mut R) -> Qbf {
    use rand::seq::SliceRandom;
    let n = 2 * k;
    let mut vars: Vec<usize> = (0..n).collect();
    vars.shuffle(rng);
    let prefix = vars
        .iter()
        .enumerate()
        .map(|(i, &v)| QuantBlock {
            quantifier: if i % 2 == 0 { Quantifier::Exists } else { Quantifier::Forall },
            variables: vec![v],
        })
        .collect();
    Qbf { prefix, matrix: random_formula(n, 4, rng) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    // Decision trees small enough to enumerate: a leaf constant or a query
    // node with two subtrees. Used as the independent depth oracle.
    #[derive(Clone)]
    enum Tree {
        Leaf(bool),
        Query(usize, Box<Tree>, Box<Tree>),
    }

    impl Tree {
        fn eval(&self, a: usize) -> bool {
            match self {
                Tree::Leaf(b) => *b,
                Tree::Query(v, zero, one) => {
                    if a >> v & 1 == 1 {
                        one.eval(a)
                    } else {
                        zero.eval(a)
                    }
                }
            }
        }
    }

    fn all_trees(depth: usize, n: usize) -> Vec<Tree> {
        let mut out = vec![Tree::Leaf(false), Tree::Leaf(true)];
        if depth == 0 {
            return out;
        }
        let subs = all_trees(depth - 1, n);
        for v in 0..n {
            for zero in &subs {
                for one in &subs {
                    out.push(Tree::Query(v, Box::new(zero.clone()), Box::new(one.clone())));
                }
            }
        }
        out
    }

    // Forward closure over all 256 three-variable functions: F(0) holds the
    // constants, F(d+1) adds every (query, zero-branch, one-branch)
    // combination. Independent of the top-down minimizing recursion.
    fn depth_by_closure(table: &TruthTable) -> usize {
        assert_eq!(table.n, 3);
        let as_u8 =
            |bits: &[bool]| bits.iter().enumerate().fold(0u8, |acc, (a, &b)| acc | (u8::from(b) << a));
        let target = as_u8(&table.bits);
        let sel: [u8; 3] = std::array::from_fn(|v| as_u8(&(0..8).map(|a| a >> v & 1 == 1).collect::<Vec<_>>()));
        let mut reachable = [false; 256];
        reachable[0x00] = true;
        reachable[0xff] = true;
        for d in 0..=3 {
            if reachable[target as usize] {
                return d;
            }
            let prev: Vec<u8> = (0..=255).filter(|&f| reachable[f as usize]).collect();
            for &s in &sel {
                for &zero in &prev {
                    for &one in &prev {
                        reachable[((one & s) | (zero & !s)) as usize] = true;
                    }
                }
            }
        }
        assert!(reachable[target as usize], "every 3-variable function has depth at most 3");
        3
    }

    #[test]
    fn constant_and_single_variable_tables() {
        let constant = TruthTable::new(3, vec![true; 8]).unwrap();
        assert_eq!(min_decision_tree_depth(&constant).unwrap(), 0);
        // f = x2: bit 1 of the assignment.
        let bits = (0..8).map(|a| a >> 1 & 1 == 1).collect();
        let x2 = TruthTable::new(3, bits).unwrap();
        assert_eq!(min_decision_tree_depth(&x2).unwrap(), 1);
    }

    #[test]
    fn no_shallow_tree_computes_three_bit_parity() {
        let parity = parity_table(3);
        let shallow = all_trees(2, 3);
        for t in &shallow {
            assert!((0..8).any(|a| t.eval(a) != parity.bits[a]));
        }
        assert_eq!(min_decision_tree_depth(&parity).unwrap(), 3);
    }

    #[test]
    fn parity_needs_every_variable() {
        for n in 1..=4 {
            assert_eq!(min_decision_tree_depth(&parity_table(n)).unwrap(), n);
        }
    }

    #[test]
    fn depth_matches_tree_enumeration_on_random_tables() {
        for seed in 0..30 {
            let mut r = rng(seed);
            let bits = (0..8).map(|_| rand::Rng::gen_bool(&mut r, 0.5)).collect();
            let table = TruthTable::new(3, bits).unwrap();
            assert_eq!(
                min_decision_tree_depth(&table).unwrap(),
                depth_by_closure(&table),
                "seed {seed} table {}",
                table.to_hex()
            );
        }
    }

    #[test]
    fn depth_invariant_under_variable_permutation() {
        use rand::seq::SliceRandom;
        for seed in 0..20 {
            let mut r = rng(100 + seed);
            let bits = (0..16).map(|_| rand::Rng::gen_bool(&mut r, 0.5)).collect();
            let table = TruthTable::new(4, bits).unwrap();
            let mut perm: Vec<usize> = (0..4).collect();
            perm.shuffle(&mut r);
            let permuted = table.permute_variables(&perm).unwrap();
            assert_eq!(
                min_decision_tree_depth(&table).unwrap(),
                min_decision_tree_depth(&permuted).unwrap(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn depth_never_exceeds_variable_count() {
        for seed in 0..20 {
            let mut r = rng(200 + seed);
            let bits = (0..32).map(|_| rand::Rng::gen_bool(&mut r, 0.5)).collect();
            let table = TruthTable::new(5, bits).unwrap();
            assert!(min_decision_tree_depth(&table).unwrap() <= 5);
        }
    }

    #[test]
    fn parity_hex_form_is_96() {
        let parity = parity_table(3);
        assert_eq!(parity.to_hex(), "96");
        assert_eq!(TruthTable::from_hex(3, "0x96").unwrap(), parity);
        assert_eq!(TruthTable::from_hex(3, "96").unwrap(), parity);
    }

    #[test]
    fn table_guards() {
        assert!(matches!(
            min_decision_tree_depth(&TruthTable::new(6, vec![false; 64]).unwrap()),
            Err(MetaError::TooManyVariables { .. })
        ));
        assert!(TruthTable::from_hex(3, "1ff").is_err());
        assert!(TruthTable::from_hex(3, "zz").is_err());
        assert!(TruthTable::new(3, vec![true; 7]).is_err());
    }

    fn free_instance(formula: Formula, n: usize, k: usize) -> DepthGameInstance {
        DepthGameInstance { formula, n, k, pinned: None }
    }

    #[test]
    fn single_variable_control() {
        let inst = free_instance(Formula::Var(0), 1, 1);
        assert!(depth_game_decide(&inst, ScheduleMode::Adaptive).unwrap());
        let inst0 = free_instance(Formula::Var(0), 1, 0);
        assert!(!depth_game_decide(&inst0, ScheduleMode::Adaptive).unwrap());
    }

    #[test]
    fn tautology_needs_no_budget() {
        let taut = Formula::Or(vec![Formula::Var(0), Formula::Not(Box::new(Formula::Var(0)))]);
        let inst = free_instance(taut, 1, 0);
        assert!(depth_game_decide(&inst, ScheduleMode::Adaptive).unwrap());
        assert!(depth_game_decide(&inst, ScheduleMode::Upfront).unwrap());
    }

    #[test]
    fn conjunction_beats_half_budget() {
        let conj = Formula::And(vec![Formula::Var(0), Formula::Var(1)]);
        let one = free_instance(conj.clone(), 2, 1);
        assert!(!depth_game_decide(&one, ScheduleMode::Adaptive).unwrap());
        assert!(!depth_game_decide(&one, ScheduleMode::Upfront).unwrap());
        let two = free_instance(conj, 2, 2);
        assert!(depth_game_decide(&two, ScheduleMode::Adaptive).unwrap());
    }

    #[test]
    fn adaptive_and_upfront_agree_on_small_instances() {
        for seed in 0..60 {
            let mut r = rng(300 + seed);
            let n = rand::Rng::gen_range(&mut r, 2..=5);
            let formula = random_formula(n, 3, &mut r);
            for k in 0..=n {
                let inst = free_instance(formula.clone(), n, k);
                assert_eq!(
                    depth_game_decide(&inst, ScheduleMode::Adaptive).unwrap(),
                    depth_game_decide(&inst, ScheduleMode::Upfront).unwrap(),
                    "seed {seed} n {n} k {k} formula {formula}"
                );
            }
        }
    }

    #[test]
    fn budget_monotonicity() {
        for seed in 0..40 {
            let mut r = rng(400 + seed);
            let n = rand::Rng::gen_range(&mut r, 2..=5);
            let formula = random_formula(n, 3, &mut r);
            let mut last = false;
            for k in 0..=n {
                let inst = free_instance(formula.clone(), n, k);
                let now = depth_game_decide(&inst, ScheduleMode::Adaptive).unwrap();
                assert!(!last || now, "seed {seed}: win lost when budget grew to {k}");
                last = now;
            }
        }
    }

    #[test]
    fn game_size_guard() {
        let inst = free_instance(Formula::Var(0), 13, 1);
        assert!(matches!(depth_game_decide(&inst, ScheduleMode::Adaptive), Err(MetaError::TooLarge { .. })));
    }

    fn qbf2(matrix: Formula) -> Qbf {
        Qbf {
            prefix: vec![
                QuantBlock { quantifier: Quantifier::Exists, variables: vec![0] },
                QuantBlock { quantifier: Quantifier::Forall, variables: vec![1] },
            ],
            matrix,
        }
    }

    #[test]
    fn single_existential_variable() {
        let qbf = Qbf {
            prefix: vec![QuantBlock { quantifier: Quantifier::Exists, variables: vec![0] }],
            matrix: Formula::Var(0),
        };
        assert!(qbf_eval_brute(&qbf).unwrap());
        let inst = qbf_to_depth_instance(&qbf).unwrap();
        assert_eq!(inst.k, 1);
        assert!(depth_game_decide(&inst, ScheduleMode::Adaptive).unwrap());
    }

    #[test]
    fn disjunction_true_conjunction_false() {
        let or = qbf2(Formula::Or(vec![Formula::Var(0), Formula::Var(1)]));
        assert!(qbf_eval_brute(&or).unwrap());
        assert!(depth_game_decide(&qbf_to_depth_instance(&or).unwrap(), ScheduleMode::Adaptive).unwrap());

        let and = qbf2(Formula::And(vec![Formula::Var(0), Formula::Var(1)]));
        assert!(!qbf_eval_brute(&and).unwrap());
        assert!(!depth_game_decide(&qbf_to_depth_instance(&and).unwrap(), ScheduleMode::Adaptive).unwrap());
    }

    #[test]
    fn free_schedule_would_misjudge_universal_variables() {
        // exists-y forall-x with matrix x is false, but a free determiner
        // can spend its budget on x. The pinned reduction is what keeps the
        // verdict aligned with the quantifiers.
        let qbf = qbf2(Formula::Var(1));
        assert!(!qbf_eval_brute(&qbf).unwrap());
        let pinned = qbf_to_depth_instance(&qbf).unwrap();
        assert!(!depth_game_decide(&pinned, ScheduleMode::Adaptive).unwrap());
        let free = free_instance(Formula::Var(1), 2, 1);
        assert!(depth_game_decide(&free, ScheduleMode::Adaptive).unwrap());
    }

    #[test]
    fn reduction_matches_oracle_on_random_two_block_formulas() {
        for seed in 0..200 {
            let qbf = random_sigma2_qbf(4, &mut rng(500 + seed));
            let inst = qbf_to_depth_instance(&qbf).unwrap();
            assert_eq!(
                depth_game_decide(&inst, ScheduleMode::Adaptive).unwrap(),
                qbf_eval_brute(&qbf).unwrap(),
                "seed {} matrix {}",
                500 + seed,
                qbf.matrix
            );
        }
    }

    #[test]
    fn reduction_matches_oracle_on_alternating_formulas() {
        for seed in 0..100 {
            let qbf = random_alternating_qbf(2, &mut rng(900 + seed));
            let inst = qbf_to_depth_instance(&qbf).unwrap();
            assert_eq!(
                depth_game_decide(&inst, ScheduleMode::Upfront).unwrap(),
                qbf_eval_brute(&qbf).unwrap(),
                "seed {}",
                900 + seed
            );
        }
    }

    #[test]
    fn malformed_prefixes_rejected() {
        let forall_first = Qbf {
            prefix: vec![QuantBlock { quantifier: Quantifier::Forall, variables: vec![0] }],
            matrix: Formula::Var(0),
        };
        assert!(matches!(forall_first.validate(), Err(MetaError::MalformedPrefix(_))));
        let doubled = Qbf {
            prefix: vec![
                QuantBlock { quantifier: Quantifier::Exists, variables: vec![0] },
                QuantBlock { quantifier: Quantifier::Exists, variables: vec![1] },
            ],
            matrix: Formula::Var(0),
        };
        assert!(matches!(doubled.validate(), Err(MetaError::MalformedPrefix(_))));
        let unquantified = Qbf {
            prefix: vec![QuantBlock { quantifier: Quantifier::Exists, variables: vec![0] }],
            matrix: Formula::Var(3),
        };
        assert!(matches!(unquantified.validate(), Err(MetaError::MalformedPrefix(_))));
    }

    #[test]
    fn formula_text_round_trip() {
        let text = "(and (or x1 (not x2)) x3)";
        let formula = parse_formula(text).unwrap();
        assert_eq!(formula.to_string(), text);
        assert!(parse_formula("(xor x1 x2)").is_err());
        assert!(parse_formula("(and x1").is_err());
        assert!(parse_formula("x0").is_err());
    }

    #[test]
    fn qbf_json_round_trip() {
        let text = r#"{"prefix":[{"quantifier":"exists","variables":[1]},{"quantifier":"forall","variables":[2]}],
                       "matrix":"(or x1 x2)"}"#;
        let qbf = parse_qbf_json(text).unwrap();
        assert!(qbf_eval_brute(&qbf).unwrap());
    }
}
