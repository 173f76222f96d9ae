//! `cpexpert` command line.
//!
//! Exit codes: 0 success, 1 processing error (rule parse, compile or
//! runtime failure), 2 usage or input error.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::cp::{
    diagnose, generate_ruleset, load_symptom_table, run_generated, Answer, AnswerSet,
    BandThresholds, DiagnosisResult, SymptomTable, DISCLAIMER,
};
use crate::dsl::{self, Construct};
use crate::engine::{RuleBase, Session};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROCESSING: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cpexpert", version, about = "Rule-based cerebral palsy screening and a small RETE rule engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a questionnaire, interactively or from an answers file.
    Diagnose(DiagnoseArgs),
    /// Compile a rule file, assert facts and run to quiescence.
    Run(RunArgs),
    /// Write the rule program generated from a symptom table.
    GenRules(GenRulesArgs),
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Symptom table (`id|question|weight` lines). Defaults to the bundled table.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Ask every question on the terminal.
    #[arg(short, long, conflicts_with = "answers", required_unless_present = "answers")]
    pub interactive: bool,
    /// Answers file with `symptom-id: yes|no` lines.
    #[arg(short, long)]
    pub answers: Option<PathBuf>,
    /// Treat symptoms missing from the answers file as answered no.
    #[arg(long)]
    pub assume_no: bool,
    /// List the symptoms that contributed to the score.
    #[arg(long)]
    pub explain: bool,
    /// Print the machine-readable JSON report.
    #[arg(long)]
    pub json: bool,
    /// Also run the generated rule program and check it agrees.
    #[arg(long)]
    pub engine: bool,
    /// Band thresholds in percent, e.g. `16,39,66`.
    #[arg(long, value_parser = parse_thresholds)]
    pub thresholds: Option<BandThresholds>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Rule file (`.rules`).
    #[arg(long)]
    pub rules: PathBuf,
    /// File of fact literals asserted in order after the rule file's own facts.
    #[arg(long)]
    pub facts: Option<PathBuf>,
    /// Write trace events to standard error.
    #[arg(long)]
    pub trace: bool,
    /// Stop after this many rule firings.
    #[arg(long)]
    pub max_firings: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenRulesArgs {
    /// Symptom table. Defaults to the bundled table.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Destination file; standard output if omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Band thresholds in percent, e.g. `16,39,66`.
    #[arg(long, value_parser = parse_thresholds)]
    pub thresholds: Option<BandThresholds>,
}

fn parse_thresholds(s: &str) -> Result<BandThresholds, String> {
    s.parse()
}

/// Error carrying the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn processing(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_PROCESSING,
            message: message.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Standard streams for a command. Tests pass in-memory buffers.
pub struct Io<'a> {
    pub stdin: &'a mut dyn BufRead,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn load_table(path: Option<&Path>) -> Result<SymptomTable, Failure> {
    match path {
        None => Ok(SymptomTable::bundled()),
        Some(p) => load_symptom_table(&read(p)?)
            .map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::processing(format!("write failed: {e}"))
}

/// Parse `args` (including the program name) and execute.
pub fn run<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let _ = if code == 0 {
                io.stdout.write_all(text.as_bytes())
            } else {
                io.stderr.write_all(text.as_bytes())
            };
            return if code == 0 { EXIT_OK } else { EXIT_INPUT };
        }
    };
    let result = match &cli.command {
        Command::Diagnose(a) => cmd_diagnose(a, io),
        Command::Run(a) => cmd_run(a, io),
        Command::GenRules(a) => cmd_gen_rules(a, io),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(io.stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn ask_all(table: &SymptomTable, io: &mut Io<'_>) -> Result<AnswerSet, Failure> {
    let mut answers = AnswerSet::new();
    let n = table.len();
    for (i, s) in table.symptoms().iter().enumerate() {
        loop {
            write!(io.stdout, "[{}/{}] {} (yes/no) ", i + 1, n, s.question).map_err(io_err)?;
            io.stdout.flush().map_err(io_err)?;
            let mut line = String::new();
            let read = io
                .stdin
                .read_line(&mut line)
                .map_err(|e| Failure::input(format!("cannot read answer: {e}")))?;
            if read == 0 {
                return Err(Failure::input("input ended before every question was answered"));
            }
            match line.parse::<Answer>() {
                Ok(a) => {
                    answers.insert(s.id.clone(), a);
                    break;
                }
                Err(()) => writeln!(io.stdout, "Please answer yes or no.").map_err(io_err)?,
            }
        }
    }
    Ok(answers)
}

fn write_report(result: &DiagnosisResult, explain: bool, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{}", result.sentence())?;
    writeln!(
        out,
        "Weightage score: {:.2}% ({} of {})",
        result.percentage, result.raw_score, result.max_score
    )?;
    if explain {
        writeln!(out, "Contributing symptoms:")?;
        if result.contributions.is_empty() {
            writeln!(out, "  (none)")?;
        }
        let width = result
            .contributions
            .iter()
            .map(|c| c.id.len())
            .max()
            .unwrap_or(0)
            .max(5);
        for c in &result.contributions {
            writeln!(out, "  {:<width$}  {:>3}", c.id, c.weight)?;
        }
        writeln!(out, "  {:<width$}  {:>3}", "total", result.raw_score)?;
    }
    Ok(())
}

fn cmd_diagnose(args: &DiagnoseArgs, io: &mut Io<'_>) -> CmdResult {
    let table = load_table(args.table.as_deref())?;
    let thresholds = args.thresholds.unwrap_or_default();
    let answers = match &args.answers {
        Some(path) => {
            let mut set = AnswerSet::parse(&read(path)?, &table)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            if args.assume_no {
                set.fill_missing_with_no(&table);
            }
            set
        }
        None => ask_all(&table, io)?,
    };
    let result = diagnose(&table, &answers, &thresholds).map_err(|e| {
        let hint = if args.answers.is_some() { " (use --assume-no to treat missing answers as no)" } else { "" };
        Failure::input(format!("{e}{hint}"))
    })?;

    if args.engine {
        let program = generate_ruleset(&table, &thresholds);
        let rules = crate::engine::compile_str(&program)
            .map_err(|e| Failure::processing(format!("generated rules: {e}")))?;
        let verdict = run_generated(&rules, &table, &answers)
            .map_err(|e| Failure::processing(format!("rule engine: {e}")))?;
        if verdict.raw_score != result.raw_score as i64 || verdict.band != Some(result.band) {
            return Err(Failure::processing(format!(
                "rule engine disagrees: score {} band {:?}, direct scorer: score {} band {}",
                verdict.raw_score, verdict.band, result.raw_score, result.band
            )));
        }
    }

    if args.json {
        writeln!(io.stdout, "{}", result.to_json()).map_err(io_err)?;
        writeln!(io.stderr, "{DISCLAIMER}").map_err(io_err)?;
    } else {
        write_report(&result, args.explain, io.stdout).map_err(io_err)?;
        writeln!(io.stdout, "{DISCLAIMER}").map_err(io_err)?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs, io: &mut Io<'_>) -> CmdResult {
    let rules_path = args.rules.display().to_string();
    let source = read(&args.rules)?;
    let constructs = dsl::parse_str(&source)
        .map_err(|e| Failure::processing(format!("{rules_path}:{e}")))?;
    let rules = Arc::new(
        RuleBase::compile(&constructs).map_err(|e| Failure::processing(format!("{rules_path}: {e}")))?,
    );

    let mut facts = rules.facts().to_vec();
    if let Some(path) = &args.facts {
        let facts_path = path.display().to_string();
        let text = read(path)?;
        let tokens = dsl::tokenize(&text).map_err(|e| Failure::processing(format!("{facts_path}:{e}")))?;
        let parsed = dsl::Parser::with_templates(rules.templates().map(|t| t.name.clone()))
            .parse(&tokens)
            .map_err(|e| Failure::processing(format!("{facts_path}:{e}")))?;
        for c in parsed {
            match c {
                Construct::Fact(f) => facts.push(f),
                _ => {
                    return Err(Failure::processing(format!(
                        "{facts_path}: only fact literals are allowed in a facts file"
                    )))
                }
            }
        }
    }

    let mut session = Session::new(Arc::clone(&rules));
    let mut outcome = Ok(());
    for f in &facts {
        if let Err(e) = session.assert_fact(f) {
            outcome = Err(Failure::processing(format!("{e}")));
            break;
        }
    }
    if outcome.is_ok() {
        if let Err(e) = session.run(args.max_firings) {
            outcome = Err(Failure::processing(format!("{rules_path}: runtime error in {e}")));
        }
    }
    io.stdout.write_all(session.take_output().as_bytes()).map_err(io_err)?;
    if args.trace {
        for event in session.trace() {
            writeln!(io.stderr, "{event}").map_err(io_err)?;
        }
    }
    outcome
}

fn cmd_gen_rules(args: &GenRulesArgs, io: &mut Io<'_>) -> CmdResult {
    let table = load_table(args.table.as_deref())?;
    let text = generate_ruleset(&table, &args.thresholds.unwrap_or_default());
    match &args.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::processing(format!("cannot write {}: {e}", path.display()))),
        None => io.stdout.write_all(text.as_bytes()).map_err(io_err),
    }
}
