use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use detdepth::distsim::{
    self, exhaustive_async_check, min_sync_points, replay, AsyncScenario, FailureKind,
    ResolutionMode,
};
use detdepth::fixtures;
use detdepth::games::{
    breakable_chain, forced_vs_strategic_decomposition, parse_tree_json, random_tree,
    simulate_trembling, spe_annotate, spe_annotate_brute, GameError, GameTree,
};
use detdepth::genchain::{
    conservation_plan, estimate_resolution_probability, separation_bound, simulate_tradeoff,
    verify_conservation_lower_bound, Ensemble, LayerAssignment, Policy, StrategyRun,
    TradeoffConfig,
};
use detdepth::matching::{
    count_downsets, enumerate_stable_brute, layered_resolution, matching_depth_oracle,
    parse_instance_json, poset_height, random_instance, build_rotation_poset, woman_optimal,
    MatchError, MatchingInstance,
};
use detdepth::metacomplexity::{
    depth_game_decide, min_decision_tree_depth, parity_table, parse_qbf_json, qbf_eval_brute,
    qbf_from_file, qbf_to_depth_instance, random_sigma2_qbf, Qbf, Quantifier, ScheduleMode,
    TruthTable,
};
use detdepth::report::{write_atomic, Cell, Report, ReportFormat};

type CliError = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(name = "detdepth", version, about = "Determination-depth experiment runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Write the report to this file (atomically) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for trial-level parallelism. Results are aggregated
    /// commutatively, so the count never changes the report.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    JsonLines,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    UniformGuess,
    ValidGreedy,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::UniformGuess => Policy::UniformGuess,
            PolicyArg::ValidGreedy => Policy::ValidGreedy,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnsembleArg {
    Uniform,
    Aligned,
}

impl From<EnsembleArg> for Ensemble {
    fn from(e: EnsembleArg) -> Ensemble {
        match e {
            EnsembleArg::Uniform => Ensemble::Uniform,
            EnsembleArg::Aligned => Ensemble::Aligned,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Parallel-width resolution success on random constraint chains versus
    /// the depth-deficit bound min(1, w * gamma^(k - d')).
    ChainSeparation(ChainSeparationArgs),
    /// Communication-budgeted resolution: message bits against the
    /// width-communication lower bound.
    ChainTradeoff(ChainTradeoffArgs),
    /// Rounds-plus-depth conservation on the k-chain: block plans hit total k
    /// and exhaustive search over contiguous layerings finds nothing smaller.
    Conservation(ConservationArgs),
    /// Rotation-poset depth of stable matching instances.
    MatchingDepth(MatchingDepthArgs),
    /// Exact minimum decision-tree depth of small boolean functions.
    DtreeDepth(DtreeDepthArgs),
    /// Quantified boolean formulas decided through the pinned-order
    /// determination game.
    QbfDepth(QbfDepthArgs),
    /// Strategic depth of extensive-form games and tie-break fragility.
    GameDepth(GameDepthArgs),
    /// Distributed resolution: exhaustive strategy search under an
    /// adversarial scheduler, with barrier-round minimization.
    Distsim(DistsimArgs),
}

#[derive(Args)]
struct ChainSeparationArgs {
    /// Chain length; repeat the flag for a grid.
    #[arg(long = "k", default_values_t = [4usize, 6])]
    k: Vec<usize>,
    /// Alphabet size per position.
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// Successor-row size (s = 1 is a function, s >= 2 a relation).
    #[arg(long, default_value_t = 2)]
    s: usize,
    /// Contiguous layer count d'; repeat for a grid. Default: 1..=k, so the
    /// sequential row is included.
    #[arg(long = "dprime")]
    dprime: Vec<usize>,
    /// Candidate width; repeat for a grid.
    #[arg(long = "width", default_values_t = [1usize, 4, 16])]
    width: Vec<usize>,
    #[arg(long, value_enum, default_value_t = PolicyArg::UniformGuess)]
    policy: PolicyArg,
    /// Monte Carlo trials per grid cell.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// Master seed; per-trial generators are independent streams of it.
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct ChainTradeoffArgs {
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    s: usize,
    /// Contiguous layer count; in-block links are the uninformed ones.
    #[arg(long, default_value_t = 5)]
    rounds: usize,
    #[arg(long, default_value_t = 1)]
    width: usize,
    /// Message bits granted to each uninformed link; repeat for several rows.
    #[arg(long = "b", default_values_t = [0u32, 2])]
    b: Vec<u32>,
    /// Row ensemble. Default: uniform for b = 0, aligned otherwise, matching
    /// the two regimes of the decoding argument.
    #[arg(long, value_enum)]
    ensemble: Option<EnsembleArg>,
    #[arg(long, default_value_t = 50_000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct ConservationArgs {
    /// Check chain lengths 1..=k.
    #[arg(long, default_value_t = 12)]
    k: usize,
    /// Cap on the exhaustive layering enumeration per chain length.
    #[arg(long, default_value_t = 1 << 20)]
    max_partitions: u64,
}

#[derive(Args)]
struct MatchingDepthArgs {
    /// Instance file: JSON with n, men_prefs, women_prefs (0-based ranks).
    /// Default: the bundled unique-stable market.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Analyze this many random instances instead of a file.
    #[arg(long)]
    count: Option<usize>,
    /// Market size for random instances.
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Seed for random instances (required with --count).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DtreeDepthArgs {
    /// Depth of the parity function on this many variables.
    #[arg(long)]
    parity: Option<usize>,
    /// Truth table as little-endian hex (f(0) is the least significant bit).
    #[arg(long)]
    hex: Option<String>,
    /// Variable count for --hex.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct QbfDepthArgs {
    /// QBF file: quantifier blocks plus a prefix-notation matrix.
    /// Default: the bundled two-block formula.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Decide this many random two-block formulas instead.
    #[arg(long)]
    count: Option<usize>,
    /// Variable count for random formulas.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Seed for random formulas (required with --count).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GameDepthArgs {
    /// Game tree file: nested nodes with owner, children, payoffs.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Use the bundled breakable chain with this many decision points.
    #[arg(long)]
    chain: Option<usize>,
    /// Analyze this many random trees instead.
    #[arg(long)]
    count: Option<usize>,
    /// Internal-node budget for random trees.
    #[arg(long, default_value_t = 10)]
    max_internal: usize,
    /// Tremble probability; adds a survival-frequency estimate per row.
    #[arg(long = "tremble")]
    tremble: Option<f64>,
    /// Trials for the tremble estimate.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Seed (required with --tremble or --count).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BundledScenario {
    CrossDependency,
    LocalPointwise,
    LocalChain,
    Settled,
}

#[derive(Args)]
struct DistsimArgs {
    /// Scenario file: agents, spec, placement, horizon, sync_budget.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Bundled scenario, used when no file is given.
    #[arg(long, value_enum, default_value_t = BundledScenario::CrossDependency)]
    bundled: BundledScenario,
    /// Override the scenario's barrier budget.
    #[arg(long = "sync")]
    sync: Option<usize>,
    /// Also search for the minimum number of agreement rounds and report the
    /// centralized adaptive depth next to it.
    #[arg(long = "min-sync", default_value_t = false)]
    min_sync: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        // Ignore failure: the pool may already exist in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let started = Instant::now();
    let result = match &cli.cmd {
        Cmd::ChainSeparation(args) => run_chain_separation(args),
        Cmd::ChainTradeoff(args) => run_chain_tradeoff(args),
        Cmd::Conservation(args) => run_conservation(args),
        Cmd::MatchingDepth(args) => run_matching_depth(args),
        Cmd::DtreeDepth(args) => run_dtree_depth(args),
        Cmd::QbfDepth(args) => run_qbf_depth(args),
        Cmd::GameDepth(args) => run_game_depth(args),
        Cmd::Distsim(args) => run_distsim(args),
    };
    let mut report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    report.wall_ms = started.elapsed().as_millis();
    let format = match cli.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::JsonLines => ReportFormat::JsonLines,
    };
    let rendered = report.render(format);
    if let Some(path) = &cli.out {
        if let Err(e) = write_atomic(path, &rendered) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(1);
        }
    } else {
        print!("{rendered}");
    }
    let passed = report.all_passed();
    eprintln!(
        "{} | {} rows | {} | {} ms",
        report.config,
        report.rows.len(),
        if passed { "all bounds pass" } else { "BOUND VIOLATION" },
        report.wall_ms
    );
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

/// Decorrelates grid cells while keeping the whole grid a pure function of
/// the master seed.
fn cell_seed(master: u64, index: u64) -> u64 {
    master.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn run_chain_separation(args: &ChainSeparationArgs) -> Result<Report, CliError> {
    let mut report = Report::new(
        format!(
            "chain-separation m={} s={} policy={} trials={} seed={}",
            args.m,
            args.s,
            policy_name(args.policy),
            args.trials,
            args.seed
        ),
        &[
            "k", "m", "s", "d_prime", "width", "policy", "trials", "seed", "strategy_mean",
            "strategy_stderr", "candidate_mean", "candidate_stderr", "bound", "pass",
        ],
    );
    let gamma = args.s as f64 / args.m as f64;
    let mut index = 0u64;
    for &k in &args.k {
        let dprimes: Vec<usize> =
            if args.dprime.is_empty() { (1..=k).collect() } else { args.dprime.clone() };
        for &d_prime in &dprimes {
            if d_prime < 1 || d_prime > k {
                return Err(format!("d'={d_prime} outside 1..={k}").into());
            }
            for &width in &args.width {
                let seed = cell_seed(args.seed, index);
                index += 1;
                let run = StrategyRun {
                    assignment: LayerAssignment::contiguous(k, d_prime)?,
                    width,
                    policy: args.policy.into(),
                };
                let est = estimate_resolution_probability(k, args.m, args.s, &run, args.trials, seed)?;
                let (bound, pass) = if d_prime == k {
                    (1.0, est.strategy_mean == 1.0)
                } else {
                    let bound = separation_bound(k, d_prime, width, gamma)?;
                    (bound, est.strategy_mean <= bound + 3.0 * est.strategy_stderr)
                };
                report.push_row(vec![
                    Cell::UInt(k as u64),
                    Cell::UInt(args.m as u64),
                    Cell::UInt(args.s as u64),
                    Cell::UInt(d_prime as u64),
                    Cell::UInt(width as u64),
                    Cell::text(policy_name(args.policy)),
                    Cell::UInt(args.trials as u64),
                    Cell::UInt(seed),
                    Cell::Float(est.strategy_mean),
                    Cell::Float(est.strategy_stderr),
                    Cell::Float(est.candidate_mean),
                    Cell::Float(est.candidate_stderr),
                    Cell::Float(bound),
                    Cell::Bool(pass),
                ]);
            }
        }
    }
    Ok(report)
}

fn policy_name(p: PolicyArg) -> &'static str {
    match p {
        PolicyArg::UniformGuess => "uniform-guess",
        PolicyArg::ValidGreedy => "valid-greedy",
    }
}

fn run_chain_tradeoff(args: &ChainTradeoffArgs) -> Result<Report, CliError> {
    let mut report = Report::new(
        format!(
            "chain-tradeoff k={} m={} s={} rounds={} width={} trials={} seed={}",
            args.k, args.m, args.s, args.rounds, args.width, args.trials, args.seed
        ),
        &[
            "k", "m", "s", "rounds", "width", "b", "ensemble", "trials", "seed", "success_mean",
            "success_stderr", "lhs_bits", "rhs_bits", "satisfied", "certain", "pass",
        ],
    );
    let assignment = LayerAssignment::contiguous(args.k, args.rounds)?;
    let uninformed = assignment.uninformed_positions();
    for (index, &b) in args.b.iter().enumerate() {
        let ensemble: Ensemble = match args.ensemble {
            Some(e) => e.into(),
            None if b == 0 => Ensemble::Uniform,
            None => Ensemble::Aligned,
        };
        let mut bits = vec![0u32; args.k];
        for &pos in &uninformed {
            bits[pos] = b;
        }
        let config = TradeoffConfig {
            rounds: args.rounds,
            width: args.width,
            bits,
            ensemble,
            trials: args.trials,
            seed: cell_seed(args.seed, index as u64),
        };
        let r = simulate_tradeoff(args.k, args.m, args.s, &config)?;
        // The bit bound constrains certain resolution; probabilistic
        // undershoot is allowed.
        let pass = !r.certain || r.satisfied;
        report.push_row(vec![
            Cell::UInt(args.k as u64),
            Cell::UInt(args.m as u64),
            Cell::UInt(args.s as u64),
            Cell::UInt(args.rounds as u64),
            Cell::UInt(args.width as u64),
            Cell::UInt(b as u64),
            Cell::text(match ensemble {
                Ensemble::Uniform => "uniform",
                Ensemble::Aligned => "aligned",
            }),
            Cell::UInt(args.trials as u64),
            Cell::UInt(config.seed),
            Cell::Float(r.success_mean),
            Cell::Float(r.success_stderr),
            Cell::Float(r.lhs_bits),
            Cell::Float(r.rhs_bits),
            Cell::Bool(r.satisfied),
            Cell::Bool(r.certain),
            Cell::Bool(pass),
        ]);
    }
    Ok(report)
}

fn run_conservation(args: &ConservationArgs) -> Result<Report, CliError> {
    let mut report = Report::new(
        format!("conservation k=1..={} max_partitions={}", args.k, args.max_partitions),
        &["k", "d", "plan_total", "min_total", "partitions_checked", "pass"],
    );
    for k in 1..=args.k {
        let lower = verify_conservation_lower_bound(k, args.max_partitions)?;
        for d in 1..=k {
            let plan = conservation_plan(k, d)?;
            let pass = plan.total() == k && lower.min_total == k && lower.all_satisfy;
            report.push_row(vec![
                Cell::UInt(k as u64),
                Cell::UInt(d as u64),
                Cell::UInt(plan.total() as u64),
                Cell::UInt(lower.min_total as u64),
                Cell::UInt(lower.partitions_checked),
                Cell::Bool(pass),
            ]);
        }
    }
    Ok(report)
}

const MATCHING_COLUMNS: [&str; 12] = [
    "source",
    "n",
    "stable_matchings",
    "downsets",
    "rotations",
    "height",
    "oracle_depth",
    "edges",
    "layers",
    "trace",
    "woman_optimal_reached",
    "pass",
];

fn matching_row(source: String, instance: &MatchingInstance) -> Result<Vec<Cell>, CliError> {
    instance.validate()?;
    let stable = enumerate_stable_brute(instance)?.len() as u64;
    let poset = build_rotation_poset(instance)?;
    let downsets = count_downsets(&poset)?;
    let height = poset_height(&poset)?;
    let oracle = match matching_depth_oracle(instance) {
        Ok(d) => Some(d),
        Err(MatchError::TooManyRotations { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let resolution = layered_resolution(instance)?;
    let reached_woman_optimal = resolution.final_matching == woman_optimal(instance);
    let edges = poset
        .edges
        .iter()
        .map(|&(a, b)| format!("{a}->{b}"))
        .collect::<Vec<_>>()
        .join(";");
    let layers = resolution
        .layers
        .iter()
        .map(|layer| layer.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("|");
    let trace = resolution.trace.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";");
    let pass = stable == downsets
        && oracle.map_or(true, |d| d == height)
        && reached_woman_optimal;
    Ok(vec![
        Cell::Text(source),
        Cell::UInt(instance.n as u64),
        Cell::UInt(stable),
        Cell::UInt(downsets),
        Cell::UInt(poset.rotations.len() as u64),
        Cell::UInt(height as u64),
        oracle.map_or(Cell::Empty, |d| Cell::UInt(d as u64)),
        Cell::Text(edges),
        Cell::Text(layers),
        Cell::Text(trace),
        Cell::Bool(reached_woman_optimal),
        Cell::Bool(pass),
    ])
}

fn run_matching_depth(args: &MatchingDepthArgs) -> Result<Report, CliError> {
    let mut report = Report::new("matching-depth", &MATCHING_COLUMNS);
    if let Some(count) = args.count {
        let seed = args.seed.ok_or("--count needs --seed")?;
        report.config = format!("matching-depth count={} n={} seed={}", count, args.n, seed);
        for i in 0..count {
            let mut rng = ChaCha12Rng::seed_from_u64(cell_seed(seed, i as u64));
            let instance = random_instance(args.n, &mut rng);
            report.push_row(matching_row(format!("random/{i}"), &instance)?);
        }
    } else if let Some(path) = &args.file {
        report.config = format!("matching-depth file={}", path.display());
        let text = std::fs::read_to_string(path)?;
        let instance = parse_instance_json(&text)?;
        report.push_row(matching_row(path.display().to_string(), &instance)?);
    } else {
        report.config = "matching-depth bundled=unique-stable".to_string();
        let instance = fixtures::unique_stable_instance();
        report.push_row(matching_row("bundled/unique-stable".to_string(), &instance)?);
    }
    Ok(report)
}

fn run_dtree_depth(args: &DtreeDepthArgs) -> Result<Report, CliError> {
    let mut report = Report::new(
        "dtree-depth",
        &["source", "n", "hex", "depth", "expected", "pass"],
    );
    let mut rows = Vec::new();
    if let Some(n) = args.parity {
        rows.push(("parity".to_string(), parity_table(n), Some(n)));
    }
    if let Some(hex) = &args.hex {
        let n = args.n.ok_or("--hex needs --n")?;
        rows.push((format!("hex/{hex}"), TruthTable::from_hex(n, hex)?, None));
    }
    if rows.is_empty() {
        rows.push(("parity".to_string(), parity_table(3), Some(3)));
    }
    report.config = format!("dtree-depth rows={}", rows.len());
    for (source, table, expected) in rows {
        let depth = min_decision_tree_depth(&table)?;
        let pass = expected.map_or(true, |e| e == depth);
        report.push_row(vec![
            Cell::Text(source),
            Cell::UInt(table.n as u64),
            Cell::text(table.to_hex()),
            Cell::UInt(depth as u64),
            expected.map_or(Cell::Empty, |e| Cell::UInt(e as u64)),
            Cell::Bool(pass),
        ]);
    }
    Ok(report)
}

fn qbf_row(source: String, qbf: &Qbf) -> Result<Vec<Cell>, CliError> {
    let exists_vars: usize = qbf
        .prefix
        .iter()
        .filter(|b| b.quantifier == Quantifier::Exists)
        .map(|b| b.variables.len())
        .sum();
    let instance = qbf_to_depth_instance(qbf)?;
    let verdict = depth_game_decide(&instance, ScheduleMode::Adaptive)?;
    let brute = qbf_eval_brute(qbf)?;
    Ok(vec![
        Cell::Text(source),
        Cell::UInt(qbf.var_count() as u64),
        Cell::UInt(exists_vars as u64),
        Cell::Bool(verdict),
        Cell::Bool(brute),
        Cell::Bool(verdict == brute),
    ])
}

fn run_qbf_depth(args: &QbfDepthArgs) -> Result<Report, CliError> {
    let mut report = Report::new(
        "qbf-depth",
        &["source", "vars", "exists_vars", "verdict", "brute", "pass"],
    );
    if let Some(count) = args.count {
        let seed = args.seed.ok_or("--count needs --seed")?;
        report.config = format!("qbf-depth count={} n={} seed={}", count, args.n, seed);
        for i in 0..count {
            let mut rng = ChaCha12Rng::seed_from_u64(cell_seed(seed, i as u64));
            let qbf = random_sigma2_qbf(args.n, &mut rng);
            report.push_row(qbf_row(format!("random/{i}"), &qbf)?);
        }
    } else if let Some(path) = &args.file {
        report.config = format!("qbf-depth file={}", path.display());
        let text = std::fs::read_to_string(path)?;
        let qbf = parse_qbf_json(&text)?;
        report.push_row(qbf_row(path.display().to_string(), &qbf)?);
    } else {
        report.config = "qbf-depth bundled=exists-forall-or".to_string();
        let qbf = qbf_from_file(&fixtures::bundled_qbf_file())?;
        report.push_row(qbf_row("bundled/exists-forall-or".to_string(), &qbf)?);
    }
    Ok(report)
}

const GAME_COLUMNS: [&str; 12] = [
    "source",
    "internal_nodes",
    "strategic_depth",
    "max_p1_path",
    "interleaving",
    "brute_agrees",
    "tremble_p",
    "trials",
    "frequency",
    "expected",
    "stderr",
    "pass",
];

fn game_row(
    source: String,
    tree: &GameTree,
    tremble: Option<(f64, u64, u64)>,
) -> Result<Vec<Cell>, CliError> {
    let ann = spe_annotate(tree)?;
    let decomp = forced_vs_strategic_decomposition(tree, &ann);
    let brute_agrees = match spe_annotate_brute(tree) {
        Ok(brute) => Some(brute == ann),
        Err(GameError::StateSpaceExceeded { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let internal = tree.internal_nodes().len() as u64;
    let mut pass = brute_agrees.unwrap_or(true);
    let (tremble_cells, tremble_pass) = match tremble {
        Some((p, trials, seed)) => {
            let r = simulate_trembling(tree, &ann, p, trials, seed)?;
            let expected = (1.0 - p).powi(r.path_nontrivial as i32);
            let ok = (r.frequency - expected).abs() <= 3.0 * r.stderr.max(1e-9);
            (
                vec![
                    Cell::Float(p),
                    Cell::UInt(trials),
                    Cell::Float(r.frequency),
                    Cell::Float(expected),
                    Cell::Float(r.stderr),
                ],
                ok,
            )
        }
        None => (
            vec![Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty],
            true,
        ),
    };
    pass = pass && tremble_pass;
    let mut row = vec![
        Cell::Text(source),
        Cell::UInt(internal),
        Cell::UInt(decomp.strategic_depth as u64),
        Cell::UInt(decomp.max_p1_path_nodes as u64),
        Cell::Bool(decomp.interleaving_witnessed),
        brute_agrees.map_or(Cell::Empty, Cell::Bool),
    ];
    row.extend(tremble_cells);
    row.push(Cell::Bool(pass));
    Ok(row)
}

fn run_game_depth(args: &GameDepthArgs) -> Result<Report, CliError> {
    let mut report = Report::new("game-depth", &GAME_COLUMNS);
    let tremble = match args.tremble {
        Some(p) => {
            let seed = args.seed.ok_or("--tremble needs --seed")?;
            Some((p, args.trials, seed))
        }
        None => None,
    };
    if let Some(count) = args.count {
        let seed = args.seed.ok_or("--count needs --seed")?;
        report.config = format!(
            "game-depth count={} max_internal={} seed={}",
            count, args.max_internal, seed
        );
        for i in 0..count {
            let mut rng = ChaCha12Rng::seed_from_u64(cell_seed(seed, i as u64));
            let tree = random_tree(args.max_internal, 6, &mut rng);
            let tremble_i = tremble.map(|(p, t, s)| (p, t, cell_seed(s, i as u64)));
            report.push_row(game_row(format!("random/{i}"), &tree, tremble_i)?);
        }
    } else if let Some(path) = &args.file {
        report.config = format!("game-depth file={}", path.display());
        let text = std::fs::read_to_string(path)?;
        let tree = parse_tree_json(&text)?;
        report.push_row(game_row(path.display().to_string(), &tree, tremble)?);
    } else {
        let t = args.chain.unwrap_or(3);
        report.config = format!("game-depth chain={t}");
        let tree = breakable_chain(t);
        report.push_row(game_row(format!("bundled/breakable-chain-{t}"), &tree, tremble)?);
    }
    Ok(report)
}

const DISTSIM_COLUMNS: [&str; 12] = [
    "mode",
    "scenario",
    "agents",
    "commitments",
    "sync_budget",
    "resolvable",
    "strategies_explored",
    "failures",
    "witnesses_ok",
    "min_sync",
    "online_depth",
    "pass",
];

fn run_distsim(args: &DistsimArgs) -> Result<Report, CliError> {
    let mut report = Report::new("distsim", &DISTSIM_COLUMNS);
    let (name, mut scenario): (String, AsyncScenario) = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            (path.display().to_string(), serde_json::from_str(&text)?)
        }
        None => match args.bundled {
            BundledScenario::CrossDependency => {
                ("bundled/cross-dependency".to_string(), distsim::cross_dependency_scenario(0))
            }
            BundledScenario::LocalPointwise => {
                ("bundled/local-pointwise".to_string(), distsim::local_pointwise_scenario())
            }
            BundledScenario::LocalChain => {
                ("bundled/local-chain".to_string(), distsim::local_chain_scenario())
            }
            BundledScenario::Settled => ("bundled/settled".to_string(), distsim::settled_scenario()),
        },
    };
    if let Some(budget) = args.sync {
        scenario.sync_budget = budget;
    }
    report.config = format!(
        "distsim scenario={} sync_budget={} min_sync={}",
        name, scenario.sync_budget, args.min_sync
    );
    let commitments = scenario.validate()?.basis.len() as u64;

    let verdict = exhaustive_async_check(&scenario)?;
    let mut witnesses_ok = true;
    for failure in &verdict.failures {
        let r = replay(&scenario, &failure.strategy, &failure.schedule, ResolutionMode::GlobalSingleton)?;
        let confirmed = match failure.kind {
            FailureKind::Emptied => r.emptied,
            FailureKind::Stalled => !r.resolved && !r.emptied && r.stalled_fair,
        };
        if !confirmed {
            witnesses_ok = false;
        }
    }
    report.push_row(vec![
        Cell::text("exhaustive"),
        Cell::text(name.clone()),
        Cell::UInt(scenario.agents as u64),
        Cell::UInt(commitments),
        Cell::UInt(scenario.sync_budget as u64),
        Cell::Bool(verdict.resolvable),
        Cell::UInt(verdict.strategies_explored as u64),
        Cell::UInt(verdict.failures.len() as u64),
        Cell::Bool(witnesses_ok),
        Cell::Empty,
        Cell::Empty,
        Cell::Bool(witnesses_ok),
    ]);

    if args.min_sync {
        let r = min_sync_points(&scenario)?;
        // A bounded search that finds nothing violates no bound; a found
        // minimum must not beat the centralized depth.
        let pass = match (r.min_sync, r.online_depth) {
            (Some(k), Some(d)) => k as u64 <= d,
            _ => true,
        };
        report.push_row(vec![
            Cell::text("min-sync"),
            Cell::text(name.clone()),
            Cell::UInt(scenario.agents as u64),
            Cell::UInt(commitments),
            Cell::UInt(scenario.sync_budget as u64),
            Cell::Bool(r.min_sync.is_some()),
            Cell::Empty,
            Cell::Empty,
            Cell::Bool(witnesses_ok),
            r.min_sync.map_or(Cell::Empty, |k| Cell::UInt(k as u64)),
            r.online_depth.map_or(Cell::Empty, Cell::UInt),
            Cell::Bool(pass),
        ]);
    }
    Ok(report)
}
