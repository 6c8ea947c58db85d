//! The `dirm` command-line front end.
//!
//! Exit codes: 0 on success (and for an opaque verdict), 1 for a violated
//! verdict or a failed oracle check, 2 for an unreadable or invalid model or
//! bad arguments, 3 when the observer exceeds its state limit.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::augment::{augment, AugModel};
use crate::dot;
use crate::model::{parse_model, EventId, Model};
use crate::observer::{self, DEFAULT_STATE_CAP};
use crate::semantics;
use crate::verify::{self, VerifyError, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dirm",
    version,
    about = "Current-state opacity under a dynamic information release mechanism"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Model document (JSON).
    model: PathBuf,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
    /// Accept releasable events that lead straight into a release state.
    /// Estimates may then miss states.
    #[arg(long)]
    allow_immediate_release: bool,
}

#[derive(Debug, Args)]
struct Word {
    /// Comma-separated event names; empty for the empty string.
    #[arg(long, num_args = 0..=1, default_missing_value = "", allow_hyphen_values = true)]
    string: String,
}

#[derive(Debug, Args)]
struct Cap {
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    max_observer_states: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Graph {
    Model,
    Augmented,
    Observer,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the model and report findings.
    Validate(Common),
    /// Release-aware projection of a string.
    Project {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        word: Word,
    },
    /// Observation history of a string.
    History {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        word: Word,
    },
    /// Current-state estimate after a string.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        word: Word,
    },
    /// Build the augmented plant.
    Augment {
        #[command(flatten)]
        common: Common,
        /// Also write the augmented plant as DOT to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Build the observer.
    Observer {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cap: Cap,
        /// Also write the observer as DOT to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Decide current-state opacity.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cap: Cap,
    },
    /// Compare the observer against string enumeration.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cap: Cap,
        #[arg(long, default_value_t = 6)]
        bound: usize,
    },
    /// Export a graph in DOT format.
    ExportDot {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cap: Cap,
        #[arg(long, value_enum, default_value_t = Graph::Model)]
        graph: Graph,
        /// Output path; standard output when absent.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.to_string(),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        let code = if e.is_resource_limit() {
            EXIT_RESOURCE
        } else {
            EXIT_INVALID
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<observer::ObserverError> for Failure {
    fn from(e: observer::ObserverError) -> Self {
        VerifyError::from(e).into()
    }
}

impl From<crate::augment::AugmentError> for Failure {
    fn from(e: crate::augment::AugmentError) -> Self {
        VerifyError::from(e).into()
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                return EXIT_INVALID;
            }
            let _ = out.write_all(text.as_bytes());
            return EXIT_OK;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load(common: &Common) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(&common.model)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", common.model.display())))?;
    let mut model = parse_model(&text).map_err(Failure::invalid)?;
    if common.allow_immediate_release {
        model.set_allow_immediate_release(true);
    }
    Ok(model)
}

fn load_word(model: &Model, word: &Word) -> Result<Vec<EventId>, Failure> {
    let w = model
        .alphabet()
        .parse_word(&word.string)
        .map_err(Failure::invalid)?;
    if model.run(&w).is_none() {
        return Err(Failure::invalid(format!(
            "string `{}` is not generated by the model",
            model.alphabet().format_word(&w, ",")
        )));
    }
    Ok(w)
}

fn emit_json(out: &mut dyn Write, value: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    writeln!(out, "{text}").map_err(Failure::invalid)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(Failure::invalid)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Validate(common) => validate(&common, out),
        Command::Project { common, word } => project(&common, &word, out),
        Command::History { common, word } => history(&common, &word, out),
        Command::Estimate { common, word } => estimate(&common, &word, out),
        Command::Augment { common, dot } => augmented(&common, dot.as_deref(), out),
        Command::Observer { common, cap, dot } => observer(&common, &cap, dot.as_deref(), out),
        Command::Verify { common, cap } => verify(&common, &cap, out),
        Command::OracleCheck { common, cap, bound } => oracle_check(&common, &cap, bound, out),
        Command::ExportDot {
            common,
            cap,
            graph,
            dot,
        } => export_dot(&common, &cap, graph, dot.as_deref(), out),
    }
}

fn validate(common: &Common, out: &mut dyn Write) -> Outcome {
    let model = load(common)?;
    let report = model.validate();
    let code = if report.is_valid() {
        EXIT_OK
    } else {
        EXIT_INVALID
    };
    if common.json {
        let issues: Vec<Value> = report
            .issues
            .iter()
            .map(|i| json!({"severity": i.severity.to_string(), "message": i.finding.to_string()}))
            .collect();
        emit_json(
            out,
            &json!({
                "valid": report.is_valid(),
                "states": model.num_states(),
                "events": model.alphabet().len(),
                "transitions": model.num_transitions(),
                "issues": issues,
            }),
        )?;
    } else {
        let mut text = format!(
            "{}: {} states, {} events, {} transitions\n",
            if report.is_valid() {
                "valid"
            } else {
                "invalid"
            },
            model.num_states(),
            model.alphabet().len(),
            model.num_transitions()
        );
        if report.is_empty() {
            text.push_str("no findings\n");
        }
        for issue in &report.issues {
            text.push_str(&format!("{issue}\n"));
        }
        emit(out, &text)?;
    }
    Ok(code)
}

fn project(common: &Common, word: &Word, out: &mut dyn Write) -> Outcome {
    let model = load(common)?;
    let w = load_word(&model, word)?;
    let iota = semantics::release_instant(&model, &w).expect("checked");
    let obs = semantics::dirm_projection(&model, &w).expect("checked");
    let shown = obs.display(model.alphabet());
    if common.json {
        emit_json(
            out,
            &json!({
                "string": model.alphabet().word_names(&w),
                "release_instant": iota,
                "observation": shown,
            }),
        )?;
    } else {
        emit(out, &format!("{shown}\n"))?;
    }
    Ok(EXIT_OK)
}

fn history(common: &Common, word: &Word, out: &mut dyn Write) -> Outcome {
    let model = load(common)?;
    let w = load_word(&model, word)?;
    let h = semantics::history(&model, &w).expect("checked");
    if common.json {
        emit_json(
            out,
            &json!({
                "string": model.alphabet().word_names(&w),
                "history": h.strings(model.alphabet()),
            }),
        )?;
    } else {
        emit(out, &format!("{}\n", h.display(model.alphabet())))?;
    }
    Ok(EXIT_OK)
}

fn names(set: impl IntoIterator<Item = String>) -> String {
    format!("{{{}}}", set.into_iter().collect::<Vec<_>>().join(", "))
}

fn estimate(common: &Common, word: &Word, out: &mut dyn Write) -> Outcome {
    let model = load(common)?;
    let w = load_word(&model, word)?;
    let am = augment(&model)?;
    let state = observer::estimate_on_the_fly(&am, &w)?;
    let mut base: Vec<usize> = state.low.iter().map(|&x| am.state(x).base).collect();
    base.dedup();
    let base: Vec<String> = base
        .iter()
        .map(|&x| model.state_name(x).to_string())
        .collect();
    let augmented: Vec<String> = state.low.iter().map(|&x| am.name(x)).collect();
    let secret = state.low.iter().all(|&x| am.is_secret(x));
    let h = semantics::history(&model, &w).expect("checked");
    if common.json {
        emit_json(
            out,
            &json!({
                "string": model.alphabet().word_names(&w),
                "history": h.strings(model.alphabet()),
                "estimate": base,
                "augmented_estimate": augmented,
                "observer_state": state.label(&am),
                "secret": secret,
            }),
        )?;
    } else {
        emit(
            out,
            &format!(
                "history:   {}\nestimate:  {}\naugmented: {}\nobserver:  {}\nsecret:    {}\n",
                h.display(model.alphabet()),
                names(base),
                names(augmented),
                state.label(&am),
                if secret { "yes" } else { "no" }
            ),
        )?;
    }
    Ok(EXIT_OK)
}

fn augment_table(am: &AugModel) -> String {
    let alphabet = am.alphabet();
    let mut text = format!("{} augmented states\n", am.num_states());
    for x in am.ids() {
        let mut tags = Vec::new();
        if x == am.initial() {
            tags.push("initial");
        }
        if am.is_release(x) {
            tags.push("release");
        }
        if am.is_secret(x) {
            tags.push("secret");
        }
        text.push_str(&format!("  {:<8} {}\n", am.name(x), tags.join(" ")));
    }
    text.push_str("transitions\n");
    for (x, e, y) in am.transitions() {
        text.push_str(&format!(
            "  {} -{}-> {}\n",
            am.name(x),
            alphabet.name(e),
            am.name(y)
        ));
    }
    text
}

fn augmented(common: &Common, dot_path: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let model = load(common)?;
    let am = augment(&model)?;
    if let Some(path) = dot_path {
        write_file(path, &dot::augmented_to_dot(&am))?;
    }
    if common.json {
        emit(out, &am.to_document())?;
    } else {
        emit(out, &augment_table(&am))?;
    }
    Ok(EXIT_OK)
}

fn observer(common: &Common, cap: &Cap, dot_path: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let model = load(common)?;
    let am = augment(&model)?;
    let obs = observer::build_observer_with_cap(&am, cap.max_observer_states)?;
    if let Some(path) = dot_path {
        write_file(path, &dot::observer_to_dot(&obs, &am))?;
    }
    let alphabet = model.alphabet();
    if common.json {
        let set = |s: &observer::AugSet| s.iter().map(|&x| am.name(x)).collect::<Vec<_>>();
        let states: Vec<Value> = obs
            .states()
            .map(|(id, s)| {
                json!({
                    "id": id,
                    "actual": am.name(s.actual),
                    "high": set(&s.high),
                    "low": set(&s.low),
                    "secret": s.low.iter().all(|&x| am.is_secret(x)),
                })
            })
            .collect();
        let transitions: Vec<Value> = obs
            .transitions()
            .map(|(x, e, y)| json!([x, alphabet.name(e), y]))
            .collect();
        emit_json(out, &json!({"states": states, "transitions": transitions}))?;
    } else {
        let mut text = format!(
            "{} observer states, {} transitions\n",
            obs.num_states(),
            obs.num_transitions()
        );
        for (id, s) in obs.states() {
            let mark = if s.low.iter().all(|&x| am.is_secret(x)) {
                " *"
            } else {
                ""
            };
            text.push_str(&format!("  q{id}: {}{mark}\n", s.label(&am)));
        }
        text.push_str("transitions\n");
        for (x, e, y) in obs.transitions() {
            text.push_str(&format!("  q{x} -{}-> q{y}\n", alphabet.name(e)));
        }
        emit(out, &text)?;
    }
    Ok(EXIT_OK)
}

fn verify(common: &Common, cap: &Cap, out: &mut dyn Write) -> Outcome {
    let model = load(common)?;
    let options = VerifyOptions {
        max_observer_states: cap.max_observer_states,
        complete_build: false,
    };
    let verdict = verify::verify_opacity_with(&model, &options)?;
    if common.json {
        emit(out, &format!("{}\n", verdict.to_json()))?;
    } else {
        let mut text = String::new();
        if verdict.is_opaque() {
            text.push_str("status: opaque\n");
        } else {
            let witness = verdict.witness.as_deref().unwrap_or_default();
            // Single-letter alphabets read best unseparated, as in `haha`.
            let terse = model
                .alphabet()
                .ids()
                .all(|e| model.alphabet().name(e).chars().count() == 1);
            let shown = if witness.is_empty() {
                "eps".to_string()
            } else {
                witness.join(if terse { "" } else { "," })
            };
            text.push_str("status: violated\n");
            text.push_str(&format!("witness: {shown}\n"));
            text.push_str(&format!(
                "observation: {}\n",
                verdict.observation.as_deref().unwrap_or_default()
            ));
            text.push_str(&format!(
                "history: {}\n",
                names(verdict.history.clone().unwrap_or_default())
            ));
            text.push_str(&format!(
                "estimate: {}\n",
                names(verdict.estimate.clone().unwrap_or_default())
            ));
        }
        let s = &verdict.stats;
        text.push_str(&format!(
            "augmented states: {}\nobserver states: {}{}\nobserver transitions: {}\n",
            s.augmented_states,
            s.observer_states,
            if s.complete { "" } else { " (stopped early)" },
            s.observer_transitions
        ));
        emit(out, &text)?;
    }
    Ok(if verdict.is_opaque() {
        EXIT_OK
    } else {
        EXIT_VIOLATED
    })
}

fn oracle_check(common: &Common, cap: &Cap, bound: usize, out: &mut dyn Write) -> Outcome {
    let model = load(common)?;
    let report = verify::crosscheck_with_cap(&model, bound, cap.max_observer_states)?;
    if common.json {
        emit_json(
            out,
            &serde_json::to_value(&report).expect("report serializes"),
        )?;
    } else {
        let mut text = format!(
            "bound {}, {} strings, {} comparison, {} mismatches\n",
            report.bound,
            report.strings_checked,
            if report.exact { "exact" } else { "containment" },
            report.mismatches.len()
        );
        for m in &report.mismatches {
            text.push_str(&format!(
                "  {:?} on {}: oracle {} observer {}\n",
                m.kind,
                if m.word.is_empty() {
                    "eps".to_string()
                } else {
                    m.word.join(",")
                },
                names(m.oracle.clone()),
                names(m.observer.clone())
            ));
        }
        emit(out, &text)?;
    }
    Ok(if report.is_clean() {
        EXIT_OK
    } else {
        EXIT_VIOLATED
    })
}

fn export_dot(
    common: &Common,
    cap: &Cap,
    graph: Graph,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    let model = load(common)?;
    let text = match graph {
        Graph::Model => dot::model_to_dot(&model),
        Graph::Augmented => dot::augmented_to_dot(&augment(&model)?),
        Graph::Observer => {
            let am = augment(&model)?;
            let obs = observer::build_observer_with_cap(&am, cap.max_observer_states)?;
            dot::observer_to_dot(&obs, &am)
        }
    };
    match path {
        Some(path) => write_file(path, &text)?,
        None => emit(out, &text)?,
    }
    Ok(EXIT_OK)
}
