//! `demuskin-lab`: command-line front end over the pairing, construction,
//! module, corestriction and subgroup-presentation checks, emitting
//! deterministic JSON reports.
//!
//! Exit codes: 0 = verified / true, 1 = refuted / false (with the witness
//! in the report), 2 = inconclusive (budget exhausted), 3 = input error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use demuskin_core::cohomology::{self, CorestrictionDatum};
use demuskin_core::constructions::{
    build, enumerate_trees, find_isomorphism, pairings_isomorphic, verify_kula_corollary,
    ConstructionTree, TreeSample,
};
use demuskin_core::cp_modules::CpModule;
use demuskin_core::pairing::Pairing;
use demuskin_core::propp::{
    d_of_subgroup, enumerate_index_p, h1_module, reidemeister_schreier, verify_rank_formula,
    verify_theorem4_shape, ProPPresentation,
};
use demuskin_core::suite;
use demuskin_core::{Budget, Error, Prime, Search, Verdict};

const SCHEMA_VERSION: u32 = 1;

const EXIT_VERIFIED: i32 = 0;
const EXIT_REFUTED: i32 = 1;
const EXIT_INCONCLUSIVE: i32 = 2;
const EXIT_INPUT: i32 = 3;

#[derive(Parser)]
#[command(
    name = "demuskin-lab",
    version,
    about = "Exact checks for finite pairings, cyclic-group modules, and index-p subgroup presentations"
)]
struct Cli {
    #[command(subcommand)]
    domain: Domain,
}

#[derive(Subcommand)]
enum Domain {
    /// Axiom checks and classification of finite pairings
    Pairing {
        #[command(subcommand)]
        action: PairingAction,
    },
    /// Building, comparing, and sweeping pairing constructions
    Construct {
        #[command(subcommand)]
        action: ConstructAction,
    },
    /// Analysis of modules over the cyclic group of order p
    Module {
        #[command(subcommand)]
        action: ModuleAction,
    },
    /// Corestriction data: generation, validation, decomposition
    Cohom {
        #[command(subcommand)]
        action: CohomAction,
    },
    /// Pro-p presentations and their index-p subgroups
    Propp {
        #[command(subcommand)]
        action: ProppAction,
    },
    /// The acceptance suite
    Suite {
        #[command(subcommand)]
        action: SuiteAction,
    },
}

/// Flags shared by every action. `--in`/`--out` are optional here and
/// checked per command.
#[derive(Args)]
struct Common {
    /// Input JSON file
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Write the report to a file instead of standard output
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Seed for all randomized generation
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Multiplier applied to the default search budget
    #[arg(long, default_value_t = 1)]
    budget: u64,
    /// Prime modulus, for commands that do not read it from the input
    #[arg(long)]
    p: Option<u32>,
    /// Emit the full JSON report envelope on one line
    #[arg(long, action = ArgAction::SetTrue)]
    json: bool,
}

#[derive(Subcommand)]
enum PairingAction {
    /// Check the pairing axioms, including the linking conditions up to
    /// length n
    Check {
        #[command(flatten)]
        common: Common,
        /// Largest linking length checked
        #[arg(long, default_value_t = 3)]
        n_max: usize,
    },
    /// Classify a pairing and report its regularity properties
    Classify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum ConstructAction {
    /// Build the pairing described by a construction tree
    Build {
        #[command(flatten)]
        common: Common,
    },
    /// Decide whether two pairings are isomorphic
    Iso {
        #[command(flatten)]
        common: Common,
    },
    /// Check that strongly regular builds are weakly p-local
    Kula {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum ModuleAction {
    /// Report the structure of a module
    Analyze {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum CohomAction {
    /// Generate a seeded valid corestriction datum
    Generate {
        #[command(flatten)]
        common: Common,
        /// Number of trivial blocks
        #[arg(long, default_value_t = 1)]
        x: usize,
        /// Number of free blocks
        #[arg(long, default_value_t = 1)]
        y: usize,
    },
    /// Decompose a datum's module as X ⊕ Y
    Decompose {
        #[command(flatten)]
        common: Common,
    },
    /// Validate a datum against the six axioms
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum ProppAction {
    /// List the index-p subgroups with their rewritten presentations
    Subgroups {
        #[command(flatten)]
        common: Common,
    },
    /// Check the subgroup rank formula and module shapes
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum SuiteAction {
    /// Run the ten acceptance criteria
    Acceptance {
        #[command(flatten)]
        common: Common,
    },
}

/// An input problem: bad paths, malformed JSON (with position info), or
/// parameters outside a command's domain. Always exits 3.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

struct Outcome {
    exit: i32,
    result: Value,
    /// Human-readable lines printed without `--json`.
    summary: String,
}

fn read_input(common: &Common) -> Result<(String, String), InputError> {
    let path = common
        .input
        .as_ref()
        .ok_or_else(|| InputError("this command requires --in <FILE>".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    let digest = hex_digest(text.as_bytes());
    Ok((text, digest))
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in out {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| InputError(format!("malformed {what}: {e}")))
}

fn required_prime(common: &Common) -> Result<Prime, InputError> {
    let raw = common.p.ok_or_else(|| InputError("this command requires --p <PRIME>".into()))?;
    Ok(Prime::new(raw)?)
}

fn verdict_exit<W>(v: &Verdict<W>) -> i32 {
    match v {
        Verdict::Verified => EXIT_VERIFIED,
        Verdict::Refuted(_) => EXIT_REFUTED,
        Verdict::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

fn verdict_word<W>(v: &Verdict<W>) -> &'static str {
    match v {
        Verdict::Verified => "verified",
        Verdict::Refuted(_) => "refuted",
        Verdict::Inconclusive { .. } => "inconclusive",
    }
}

// ---------------------------------------------------------------------------
// Command handlers
// ---------------------------------------------------------------------------

fn pairing_check(
    common: &Common,
    n_max: usize,
    budget: &Budget,
) -> Result<(Outcome, Option<String>), InputError> {
    let (text, digest) = read_input(common)?;
    let pairing: Pairing = parse_json(&text, "pairing JSON")?;
    let verdict = pairing.is_quaternionic(n_max, budget)?;
    let summary = format!(
        "pairing axioms (h = {}, q = {}, n ≤ {n_max}): {}",
        pairing.h_dim(),
        pairing.q_dim(),
        verdict_word(&verdict)
    );
    Ok((
        Outcome {
            exit: verdict_exit(&verdict),
            result: json!({ "n_max": n_max, "check": verdict }),
            summary,
        },
        Some(digest),
    ))
}

fn pairing_classify(common: &Common) -> Result<(Outcome, Option<String>), InputError> {
    let (text, digest) = read_input(common)?;
    let pairing: Pairing = parse_json(&text, "pairing JSON")?;
    let class = pairing.classify();
    let result = json!({
        "h_dim": pairing.h_dim(),
        "q_dim": pairing.q_dim(),
        "class": class,
        "nondegenerate": pairing.is_nondegenerate(),
        "strongly_regular": pairing.is_strongly_regular(),
        "weakly_p_local": pairing.is_weakly_p_local(),
    });
    let summary = format!(
        "class {class}; nondegenerate = {}, strongly regular = {}, weakly p-local = {}",
        pairing.is_nondegenerate(),
        pairing.is_strongly_regular(),
        pairing.is_weakly_p_local()
    );
    Ok((Outcome { exit: EXIT_VERIFIED, result, summary }, Some(digest)))
}

fn construct_build(common: &Common) -> Result<(Outcome, Option<String>), InputError> {
    let p = required_prime(common)?;
    let (text, digest) = read_input(common)?;
    let tree: ConstructionTree = parse_json(&text, "construction tree JSON")?;
    let pairing = build(p, &tree)?;
    let summary = format!(
        "built pairing with h = {}, q = {} (tree depth {})",
        pairing.h_dim(),
        pairing.q_dim(),
        tree.depth()
    );
    let result = json!({
        "h_dim": pairing.h_dim(),
        "q_dim": pairing.q_dim(),
        "pairing": pairing,
    });
    Ok((Outcome { exit: EXIT_VERIFIED, result, summary }, Some(digest)))
}

#[derive(Deserialize)]
struct IsoInput {
    left: Pairing,
    right: Pairing,
}

fn construct_iso(common: &Common, budget: &Budget) -> Result<(Outcome, Option<String>), InputError> {
    let (text, digest) = read_input(common)?;
    let pair: IsoInput = parse_json(&text, "pairing-pair JSON (fields \"left\", \"right\")")?;
    let verdict = pairings_isomorphic(&pair.left, &pair.right, budget)?;
    let iso = if verdict.is_verified() {
        match find_isomorphism(&pair.left, &pair.right, budget)? {
            Search::Found(iso) => Some(iso),
            _ => None,
        }
    } else {
        None
    };
    let summary = format!("isomorphic: {}", verdict_word(&verdict));
    Ok((
        Outcome {
            exit: verdict_exit(&verdict),
            result: json!({ "isomorphism": verdict, "witness": iso }),
            summary,
        },
        Some(digest),
    ))
}

#[derive(Deserialize)]
struct TreeList {
    trees: Vec<ConstructionTree>,
}

fn construct_kula(common: &Common) -> Result<(Outcome, Option<String>), InputError> {
    let p = required_prime(common)?;
    let (trees, digest) = match &common.input {
        Some(_) => {
            let (text, digest) = read_input(common)?;
            let list: TreeList = parse_json(&text, "tree list JSON (field \"trees\")")?;
            (list.trees, Some(digest))
        }
        None => {
            let sample = TreeSample { max_depth: 2, max_leaf_h: 2, max_total_h: 5 };
            (enumerate_trees(p, &sample), None)
        }
    };
    let verdict = verify_kula_corollary(p, &trees)?;
    let summary = format!(
        "{} trees: strongly regular ⟹ weakly p-local is {}",
        trees.len(),
        verdict_word(&verdict)
    );
    Ok((
        Outcome {
            exit: verdict_exit(&verdict),
            result: json!({ "trees_tested": trees.len(), "implication": verdict }),
            summary,
        },
        digest,
    ))
}

fn module_analyze(common: &Common) -> Result<(Outcome, Option<String>), InputError> {
    let (text, digest) = read_input(common)?;
    let module: CpModule = parse_json(&text, "module JSON")?;
    let free = module.maximal_free_submodule();
    let result = json!({
        "p": module.prime().get(),
        "dim": module.dim(),
        "jordan_type": module.jordan_type(),
        "fixed_dim": module.fixed_submodule().dim(),
        "norm_image_dim": module.trace_image().dim(),
        "is_trivial": module.is_trivial(),
        "is_free": module.is_free(),
        "is_trivial_plus_free": module.is_trivial_plus_free(),
        "has_free_summand": module.has_free_summand(),
        "fixednorm_identity": module.check_fixednorm_identity(),
        "maximal_free_rank": free.rank(),
    });
    let summary = format!(
        "dim {} module over p = {}: jordan type {:?}, maximal free rank {}",
        module.dim(),
        module.prime(),
        module.jordan_type(),
        free.rank()
    );
    Ok((Outcome { exit: EXIT_VERIFIED, result, summary }, Some(digest)))
}

fn cohom_generate(common: &Common, x: usize, y: usize) -> Result<(Outcome, Option<String>), InputError> {
    let p = required_prime(common)?;
    let datum = cohomology::generate(p, x, y, common.seed);
    let summary = format!(
        "generated datum: dim M = {}, w = {}, dim A = {}",
        datum.module().dim(),
        datum.w_dim(),
        datum.a_space().dim()
    );
    Ok((
        Outcome {
            exit: EXIT_VERIFIED,
            result: json!({ "x": x, "y": y, "datum": datum }),
            summary,
        },
        None,
    ))
}

fn cohom_verify(common: &Common) -> Result<(Outcome, Option<String>), InputError> {
    let (text, digest) = read_input(common)?;
    let datum: CorestrictionDatum = parse_json(&text, "corestriction datum JSON")?;
    let violations: Vec<String> = datum.validate().iter().map(|a| a.to_string()).collect();
    let valid = violations.is_empty();
    let corollary = if valid { Some(datum.check_corollary()?) } else { None };
    let summary = if valid {
        format!("datum valid; dimension corollary holds: {}", corollary.unwrap_or(false))
    } else {
        format!("datum invalid; violated: {}", violations.join("; "))
    };
    Ok((
        Outcome {
            exit: if valid { EXIT_VERIFIED } else { EXIT_REFUTED },
            result: json!({ "valid": valid, "violations": violations, "corollary": corollary }),
            summary,
        },
        Some(digest),
    ))
}

fn cohom_decompose(common: &Common) -> Result<(Outcome, Option<String>), InputError> {
    let (text, digest) = read_input(common)?;
    let datum: CorestrictionDatum = parse_json(&text, "corestriction datum JSON")?;
    match datum.decompose() {
        Ok(d) => {
            let corollary = datum.check_corollary()?;
            let summary = format!(
                "decomposed: dim X = {}, free rank Y = {}, dim M = {}; corollary = {corollary}",
                d.x_space.dim(),
                d.y.rank(),
                datum.module().dim()
            );
            Ok((
                Outcome {
                    exit: EXIT_VERIFIED,
                    result: json!({ "decomposition": d, "corollary": corollary }),
                    summary,
                },
                Some(digest),
            ))
        }
        Err(Error::InvalidDatum { context }) => {
            let violations: Vec<String> =
                datum.validate().iter().map(|a| a.to_string()).collect();
            Ok((
                Outcome {
                    exit: EXIT_REFUTED,
                    result: json!({ "error": context, "violations": violations }),
                    summary: format!("decomposition refused: {context}"),
                },
                Some(digest),
            ))
        }
        Err(e) => Err(e.into()),
    }
}

fn propp_subgroups(common: &Common) -> Result<(Outcome, Option<String>), InputError> {
    let (text, digest) = read_input(common)?;
    let pres: ProPPresentation = parse_json(&text, "presentation JSON")?;
    let mut subgroups = Vec::new();
    let mut summary = format!(
        "{} generators, {} relators: index-{} subgroups\n",
        pres.num_gens(),
        pres.relators().len(),
        pres.prime()
    );
    for sub in enumerate_index_p(&pres) {
        let spres = reidemeister_schreier(&pres, &sub)?;
        let d_n = d_of_subgroup(&spres);
        let jordan = h1_module(&pres, &sub)?.jordan_type();
        let _ = writeln!(
            summary,
            "  phi {:?}: {} generators, {} relators, d(N) = {d_n}, type {jordan:?}",
            sub.phi,
            spres.num_gens(),
            spres.relators().len()
        );
        subgroups.push(json!({
            "phi": sub.phi,
            "schreier_generators": spres.num_gens(),
            "schreier_relators": spres.relators().len(),
            "d_n": d_n,
            "jordan_type": jordan,
        }));
    }
    let count = subgroups.len();
    Ok((
        Outcome {
            exit: EXIT_VERIFIED,
            result: json!({ "count": count, "subgroups": subgroups }),
            summary: summary.trim_end().to_string(),
        },
        Some(digest),
    ))
}

fn propp_verify(common: &Common) -> Result<(Outcome, Option<String>), InputError> {
    let (text, digest) = read_input(common)?;
    let pres: ProPPresentation = parse_json(&text, "presentation JSON")?;
    let rank = verify_rank_formula(&pres)?;

    // The shape check needs at least two generators; skip it otherwise.
    let shapes = if pres.num_gens() >= 2 {
        let mut overall = Verdict::Verified;
        for sub in enumerate_index_p(&pres) {
            if let Verdict::Refuted(w) = verify_theorem4_shape(&pres, &sub)? {
                overall = Verdict::Refuted(w);
                break;
            }
        }
        Some(overall)
    } else {
        None
    };

    let exit = match (&rank, &shapes) {
        (Verdict::Refuted(_), _) => EXIT_REFUTED,
        (_, Some(Verdict::Refuted(_))) => EXIT_REFUTED,
        _ => EXIT_VERIFIED,
    };
    let summary = format!(
        "rank formula: {}; module shapes: {}",
        verdict_word(&rank),
        shapes.as_ref().map_or("skipped (fewer than 2 generators)", verdict_word)
    );
    Ok((
        Outcome {
            exit,
            result: json!({ "rank_formula": rank, "shapes": shapes }),
            summary,
        },
        Some(digest),
    ))
}

fn suite_acceptance(common: &Common, budget: &Budget) -> Result<(Outcome, Option<String>), InputError> {
    let report = suite::run_acceptance(common.seed, budget);
    let mut summary = String::new();
    for c in &report.criteria {
        let _ = writeln!(
            summary,
            "[acceptance] criterion {} ({}): {} — {}",
            c.id,
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    let _ = write!(summary, "overall: {}", if report.all_pass { "PASS" } else { "FAIL" });
    let exit = if report.all_pass { EXIT_VERIFIED } else { EXIT_REFUTED };
    let result = serde_json::to_value(&report).expect("report serializes");
    Ok((Outcome { exit, result, summary }, None))
}

// ---------------------------------------------------------------------------
// Dispatch and report assembly
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Report {
    schema_version: u32,
    command: String,
    input_digest: Option<String>,
    seed: u64,
    budget_factor: u64,
    result: Value,
    wall_ms: u128,
}

fn dispatch(cli: &Cli) -> Result<(String, &Common, Outcome, Option<String>), InputError> {
    let (name, common, handled) = match &cli.domain {
        Domain::Pairing { action } => match action {
            PairingAction::Check { common, n_max } => {
                let budget = Budget::scaled(common.budget);
                ("pairing check", common, pairing_check(common, *n_max, &budget)?)
            }
            PairingAction::Classify { common } => {
                ("pairing classify", common, pairing_classify(common)?)
            }
        },
        Domain::Construct { action } => match action {
            ConstructAction::Build { common } => {
                ("construct build", common, construct_build(common)?)
            }
            ConstructAction::Iso { common } => {
                let budget = Budget::scaled(common.budget);
                ("construct iso", common, construct_iso(common, &budget)?)
            }
            ConstructAction::Kula { common } => {
                ("construct kula", common, construct_kula(common)?)
            }
        },
        Domain::Module { action } => match action {
            ModuleAction::Analyze { common } => {
                ("module analyze", common, module_analyze(common)?)
            }
        },
        Domain::Cohom { action } => match action {
            CohomAction::Generate { common, x, y } => {
                ("cohom generate", common, cohom_generate(common, *x, *y)?)
            }
            CohomAction::Decompose { common } => {
                ("cohom decompose", common, cohom_decompose(common)?)
            }
            CohomAction::Verify { common } => ("cohom verify", common, cohom_verify(common)?),
        },
        Domain::Propp { action } => match action {
            ProppAction::Subgroups { common } => {
                ("propp subgroups", common, propp_subgroups(common)?)
            }
            ProppAction::Verify { common } => ("propp verify", common, propp_verify(common)?),
        },
        Domain::Suite { action } => match action {
            SuiteAction::Acceptance { common } => {
                let budget = Budget::scaled(common.budget);
                ("suite acceptance", common, suite_acceptance(common, &budget)?)
            }
        },
    };
    let (outcome, digest) = handled;
    Ok((name.to_string(), common, outcome, digest))
}

fn emit(common: &Common, report: &Report, summary: &str, exit: i32) -> Result<(), InputError> {
    let payload = if common.json {
        serde_json::to_string(report).expect("report serializes")
    } else {
        let mut text = summary.to_string();
        let _ = write!(text, "\nexit code {exit}");
        text
    };
    match &common.out {
        Some(path) => std::fs::write(path, payload + "\n")
            .map_err(|e| InputError(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{payload}");
            Ok(())
        }
    }
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_INPUT,
            };
            let _ = e.print();
            return code;
        }
    };

    let start = Instant::now();
    match dispatch(&cli) {
        Ok((command, common, outcome, digest)) => {
            let report = Report {
                schema_version: SCHEMA_VERSION,
                command,
                input_digest: digest,
                seed: common.seed,
                budget_factor: common.budget,
                result: outcome.result,
                wall_ms: start.elapsed().as_millis(),
            };
            if let Err(InputError(msg)) = emit(common, &report, &outcome.summary, outcome.exit) {
                eprintln!("input error: {msg}");
                return EXIT_INPUT;
            }
            outcome.exit
        }
        Err(InputError(msg)) => {
            eprintln!("input error: {msg}");
            EXIT_INPUT
        }
    }
}

fn main() {
    std::process::exit(run());
}
