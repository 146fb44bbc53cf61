//! Command-line front end for `treegrp`.
//!
//! Every run renders one text report. Its header records the tool version,
//! the seed and every budget, so equal inputs give byte-identical reports.
//!
//! Exit codes: `0` success, `1` a checked mathematical failure (the report
//! names the clause), `2` usage, `3` I/O.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

mod battery;
mod commands;

pub use battery::battery;

pub const REPORT_HEADER: &str = "treegrp-report v1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SEED: u64 = 1729;

/// Hopfian tree used when no input is given: a chain `t0 < t1 < t3` with
/// spare siblings at every stage.
pub const DEFAULT_HO_TREE: &str =
    "variant ho\nt0 - 0\nt1 t0 1\nt2 t0 1\nt3 t1 2\nt4 t1 2\nbranch: t0 t1 t3\n";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("missing budget --{0}")]
    MissingBudget(&'static str),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad input: {0}")]
    Input(String),
    /// A library call failed on well-formed input; reported as a checked
    /// failure.
    #[error("{0}")]
    Math(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::MissingBudget(_) | CliError::Input(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Math(_) => 1,
        }
    }
}

pub fn math(e: impl std::fmt::Display) -> CliError {
    CliError::Math(e.to_string())
}

pub fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "treegrp", version, about = "Tree-indexed group constructions at desk scale")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    #[command(flatten)]
    pub budgets: Budgets,
    /// Write the report to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Budgets {
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Tags, searches and generator lists stay inside `X_{stage-bound}`.
    #[arg(long, global = true)]
    pub stage_bound: Option<usize>,
    #[arg(long, global = true, default_value_t = 3)]
    pub coeff_bound: u32,
    #[arg(long, global = true, default_value_t = 3)]
    pub tuple_cap: usize,
    /// Branch depth for witnesses.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Work budget for certificate and candidate searches.
    #[arg(long, global = true, default_value_t = 20_000)]
    pub budget: usize,
    /// Random samples drawn from the seed.
    #[arg(long, global = true, default_value_t = 50)]
    pub samples: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Flavor {
    Ri,
    Ho,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Ri,
    Embedding,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Any,
    Synchronous,
}

/// Where a scaffold comes from: a dump, a tree file, or the built-in example.
#[derive(Args, Debug, Clone, Default)]
pub struct Source {
    /// Scaffold dump to load.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Tree file to build a scaffold from.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Last stratum to build.
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub fillers: usize,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
}

#[derive(Subcommand, Debug)]
pub enum Verb {
    /// Inspect or generate stratified trees.
    Tree {
        #[command(subcommand)]
        cmd: TreeCmd,
    },
    /// Build, validate or probe scaffolds.
    Scaffold {
        #[command(subcommand)]
        cmd: ScaffoldCmd,
    },
    /// Tags and membership in G1.
    Group {
        #[command(subcommand)]
        cmd: GroupCmd,
    },
    /// Decide `p^m | a` in G1 with a replayed certificate.
    Divides(DividesArgs),
    /// Automorphisms, Hopfian witnesses and endomorphism searches.
    Endo {
        #[command(subcommand)]
        cmd: EndoCmd,
    },
    /// Arithmetic in the 2-nilpotent group.
    Nil2 {
        #[command(subcommand)]
        cmd: NilCmd,
    },
    /// Window models of products of finite p-groups.
    Profinite {
        #[command(subcommand)]
        cmd: ProfCmd,
    },
    /// The full deterministic battery.
    Report,
}

#[derive(Subcommand, Debug)]
pub enum TreeCmd {
    /// Parse a tree file and print its strata, rank and branch.
    Show {
        #[arg(long)]
        tree: PathBuf,
    },
    /// Draw a tree from the seed.
    Random {
        #[arg(long, value_enum, default_value_t = Flavor::Ri, visible_alias = "variant")]
        flavor: Flavor,
        #[arg(long, default_value_t = 3)]
        stages: usize,
        #[arg(long, default_value_t = 12)]
        max_nodes: usize,
        #[arg(long, value_enum, default_value_t = PolicyArg::Any)]
        policy: PolicyArg,
    },
}

#[derive(Subcommand, Debug)]
pub enum ScaffoldCmd {
    /// Build a scaffold and print its dump.
    Build {
        #[arg(long, value_enum, default_value_t = Flavor::Ri, visible_alias = "variant")]
        flavor: Flavor,
        #[command(flatten)]
        source: Source,
        /// Also write the bare dump here.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Run every clause checker on a scaffold.
    Validate {
        #[arg(long, value_enum, default_value_t = Flavor::Ri, visible_alias = "variant")]
        flavor: Flavor,
        #[command(flatten)]
        source: Source,
    },
    /// Exhaustive checks of the stage-jump and spreading properties.
    Structure {
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Subcommand, Debug)]
pub enum GroupCmd {
    /// The first entries of the prime tag table.
    Tags {
        #[arg(long, value_enum, default_value_t = Flavor::Ri)]
        flavor: Flavor,
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 12)]
        count: usize,
    },
    /// Decide membership of a vector in G1.
    Member {
        #[arg(long, value_enum, default_value_t = Flavor::Ri)]
        flavor: Flavor,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        a: String,
        /// Level of the Hopfian hierarchy.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Args, Debug)]
pub struct DividesArgs {
    #[arg(long, value_enum, default_value_t = Flavor::Ri)]
    pub flavor: Flavor,
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Level of the Hopfian hierarchy.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum EndoCmd {
    /// The branch automorphism of a rigid scaffold.
    Branch {
        #[command(flatten)]
        source: Source,
    },
    /// The onto, non-injective branch endomorphism of a Hopfian scaffold.
    Hopf {
        #[command(flatten)]
        source: Source,
    },
    /// Bounded endomorphism search; needs `--stage-bound`.
    Search {
        #[arg(long, value_enum, default_value_t = Flavor::Ri)]
        flavor: Flavor,
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Subcommand, Debug)]
pub enum NilCmd {
    /// Product of two words.
    Mul {
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
    },
    /// Commutator of two words.
    Comm {
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
    },
    /// Image of a word under h2.
    Project {
        #[arg(long)]
        u: String,
    },
    /// Chosen pairs, branch embedding and torsion obstruction.
    Check,
}

#[derive(Subcommand, Debug)]
pub enum ProfCmd {
    /// Components of an element prime by prime.
    Components {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        a: String,
    },
    /// Bezout witnesses for a set of primes.
    Bezout {
        /// Comma-separated primes.
        #[arg(long)]
        primes: String,
        #[arg(long, default_value_t = 1)]
        m: u32,
    },
    /// Check that generators embed in the product of the window.
    EmbedCheck {
        #[arg(long)]
        model: PathBuf,
        /// Generators separated by `;`.
        #[arg(long)]
        gens: String,
        /// Comma-separated sub-window; defaults to the whole model.
        #[arg(long)]
        window: Option<String>,
    },
}

/// Report under construction. The header is assembled at the end so that
/// budgets resolved by the command are recorded as used.
#[derive(Debug)]
pub struct Report {
    command: String,
    budgets: BTreeMap<&'static str, String>,
    seed: u64,
    body: String,
    failures: Vec<String>,
    error: Option<String>,
}

impl Report {
    pub fn new(command: impl Into<String>, b: &Budgets) -> Self {
        let unset = |v: Option<usize>| v.map_or("unset".to_string(), |v| v.to_string());
        let budgets = BTreeMap::from([
            ("budget", b.budget.to_string()),
            ("coeff-bound", b.coeff_bound.to_string()),
            ("depth", unset(b.depth)),
            ("samples", b.samples.to_string()),
            ("stage-bound", unset(b.stage_bound)),
            ("tuple-cap", b.tuple_cap.to_string()),
        ]);
        Report {
            command: command.into(),
            budgets,
            seed: b.seed,
            body: String::new(),
            failures: Vec::new(),
            error: None,
        }
    }

    /// Records the value a defaulted budget resolved to. A battery that uses
    /// several values lists them all, in order of first use, as `1/0`.
    pub fn budget(&mut self, name: &'static str, value: impl ToString) {
        let value = value.to_string();
        let entry = self.budgets.entry(name).or_insert_with(|| "unset".to_string());
        if entry == "unset" {
            *entry = value;
        } else if !entry.split('/').any(|v| v == value) {
            entry.push('/');
            entry.push_str(&value);
        }
    }

    pub fn section(&mut self, name: &str) {
        let _ = writeln!(self.body, "== {name} ==");
    }

    pub fn line(&mut self, text: impl AsRef<str>) {
        let text = text.as_ref();
        self.body.push_str(text);
        if !text.ends_with('\n') {
            self.body.push('\n');
        }
    }

    /// Records a checked failure; the first one names the exit status.
    pub fn fail(&mut self, clause: impl Into<String>) {
        self.failures.push(clause.into());
    }

    /// `pass` or `FAIL`, recording the failure.
    pub fn check(&mut self, name: &str, ok: bool) -> &'static str {
        if ok {
            "pass"
        } else {
            self.fail(name);
            "FAIL"
        }
    }

    pub fn failed(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{REPORT_HEADER}");
        let _ = writeln!(out, "tool: treegrp {TOOL_VERSION}");
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "seed: {}", self.seed);
        let budgets: Vec<String> = self.budgets.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "budgets: {}", budgets.join(" "));
        out.push_str(&self.body);
        match (&self.error, self.failures.first()) {
            (Some(e), _) => {
                let _ = writeln!(out, "status: error ({e})");
            }
            (None, Some(first)) => {
                let _ = writeln!(out, "status: FAIL ({first})");
            }
            (None, None) => out.push_str("status: ok\n"),
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn command_name(verb: &Verb) -> String {
    let sub = match verb {
        Verb::Tree { cmd } => match cmd {
            TreeCmd::Show { .. } => "show",
            TreeCmd::Random { .. } => "random",
        },
        Verb::Scaffold { cmd } => match cmd {
            ScaffoldCmd::Build { .. } => "build",
            ScaffoldCmd::Validate { .. } => "validate",
            ScaffoldCmd::Structure { .. } => "structure",
        },
        Verb::Group { cmd } => match cmd {
            GroupCmd::Tags { .. } => "tags",
            GroupCmd::Member { .. } => "member",
        },
        Verb::Divides(_) => "",
        Verb::Endo { cmd } => match cmd {
            EndoCmd::Branch { .. } => "branch",
            EndoCmd::Hopf { .. } => "hopf",
            EndoCmd::Search { .. } => "search",
        },
        Verb::Nil2 { cmd } => match cmd {
            NilCmd::Mul { .. } => "mul",
            NilCmd::Comm { .. } => "comm",
            NilCmd::Project { .. } => "project",
            NilCmd::Check => "check",
        },
        Verb::Profinite { cmd } => match cmd {
            ProfCmd::Components { .. } => "components",
            ProfCmd::Bezout { .. } => "bezout",
            ProfCmd::EmbedCheck { .. } => "embed-check",
        },
        Verb::Report => "",
    };
    let verb = match verb {
        Verb::Tree { .. } => "tree",
        Verb::Scaffold { .. } => "scaffold",
        Verb::Group { .. } => "group",
        Verb::Divides(_) => "divides",
        Verb::Endo { .. } => "endo",
        Verb::Nil2 { .. } => "nil2",
        Verb::Profinite { .. } => "profinite",
        Verb::Report => "report",
    };
    if sub.is_empty() {
        verb.to_string()
    } else {
        format!("{verb} {sub}")
    }
}

/// Parses `argv`, mapping clap errors to exit code 2 (help and version to 0).
pub fn parse_args<I, T>(argv: I) -> Result<Cli, Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv).map_err(|e| {
        let code = match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
            _ => 2,
        };
        let text = e.render().to_string();
        if code == 0 {
            Outcome {
                code,
                stdout: text,
                stderr: String::new(),
            }
        } else {
            Outcome {
                code,
                stdout: String::new(),
                stderr: text,
            }
        }
    })
}

/// Runs a parsed command and always renders a report. Usage and I/O errors
/// end it with `status: error (…)` and are echoed on standard error.
pub fn execute(cli: &Cli) -> Outcome {
    let mut report = Report::new(command_name(&cli.verb), &cli.budgets);
    let result = commands::dispatch(cli, &mut report);
    let (code, stderr) = match result {
        Ok(()) if report.failed() => (1, String::new()),
        Ok(()) => (0, String::new()),
        Err(e @ CliError::Math(_)) => {
            report.line(format!("error: {e}"));
            report.fail(format!("error: {e}"));
            (1, String::new())
        }
        Err(e) => {
            report.error = Some(e.to_string());
            (e.code(), format!("treegrp: {e}\n"))
        }
    };
    let text = report.render();
    match &cli.out {
        Some(path) => match write_file(path, &text) {
            Ok(()) => Outcome {
                code,
                stdout: String::new(),
                stderr,
            },
            Err(e) => Outcome {
                code: e.code(),
                stdout: String::new(),
                stderr: format!("treegrp: {e}\n"),
            },
        },
        None => Outcome {
            code,
            stdout: text,
            stderr,
        },
    }
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(cli) => execute(&cli),
        Err(out) => out,
    }
}
