//! Batch driver: JSON experiment configs in, JSON/CSV artifacts out.
//!
//! Exit codes: 0 ok, 1 module error or failed contract, 2 usage.

mod report;
mod verbs;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "massred",
    version,
    about = "Mass-problem reduction experiments"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// JSON config for the verb.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the artifact files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized strategies; overrides a `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args, Clone, Debug)]
struct ReportArgs {
    /// Artifact files or directories of artifacts.
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Verb {
    /// Block profile round trip between functions and bit strings.
    Codec(Common),
    /// Build and certify a list code.
    CodeBuild(Common),
    /// Compute the largest list of a code.
    CodeVerify(Common),
    /// Density side to function side candidates.
    PipelineD(Common),
    /// Function side to density side, with replay.
    PipelineB(Common),
    /// Agreement density estimators against a family.
    Gamma(Common),
    /// Check a witness family over a finite universe.
    WitnessCheck(Common),
    /// Map a witness family through one step.
    WitnessTransform(Common),
    /// Run the forcing construction against a functional.
    ForceRun(Common),
    /// Certify fatness of a tree.
    FatCheck(Common),
    /// Thin a two-part partition of leaves.
    Thin(Common),
    /// Summarize artifacts into tables.
    Report(ReportArgs),
}

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Module(massred::error::Error),
    /// The run finished but its result violates the requested contract.
    Contract(String),
}

impl From<massred::error::Error> for Failure {
    fn from(e: massred::error::Error) -> Self {
        Failure::Module(e)
    }
}

impl Failure {
    fn json(&self) -> Value {
        match self {
            Failure::Usage(m) => json!({ "error": "Usage", "message": m }),
            Failure::Module(e) => json!({ "error": e.kind(), "message": e.to_string() }),
            Failure::Contract(m) => json!({ "error": "ContractFailure", "message": m }),
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

/// A verb's output: the artifact body, extra files, and an optional contract breach.
pub struct Output {
    pub result: Value,
    pub files: Vec<(String, String)>,
    pub breach: Option<String>,
}

impl Output {
    pub fn new(result: Value) -> Self {
        Output {
            result,
            files: Vec::new(),
            breach: None,
        }
    }
}

/// A parsed config plus the effective seed.
pub struct Ctx {
    pub verb: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub verbose: bool,
}

impl Ctx {
    pub fn seed(&self) -> Outcome<u64> {
        self.seed.ok_or_else(|| {
            Failure::Usage(format!(
                "{} needs a seed for its randomized input",
                self.verb
            ))
        })
    }

    pub fn parse<T: serde::de::DeserializeOwned>(&self) -> Outcome<T> {
        serde_json::from_value(self.config.clone())
            .map_err(|e| Failure::Usage(format!("malformed {} config: {e}", self.verb)))
    }

    pub fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[{}] {}", self.verb, msg.as_ref());
        }
    }
}

fn load(verb: &'static str, c: &Common) -> Outcome<Ctx> {
    let text = fs::read_to_string(&c.config)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", c.config.display())))?;
    let mut config: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("config is not JSON: {e}")))?;
    let obj = config
        .as_object_mut()
        .ok_or_else(|| Failure::Usage("config must be a JSON object".into()))?;
    if let Some(v) = obj.remove("verb") {
        if v.as_str() != Some(verb) {
            return Err(Failure::Usage(format!(
                "config is for verb {v}, not {verb:?}"
            )));
        }
    }
    let cfg_seed = match obj.remove("seed") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) if n.is_u64() => n.as_u64(),
        Some(Value::String(s)) => Some(
            s.parse()
                .map_err(|_| Failure::Usage(format!("bad seed {s:?}")))?,
        ),
        Some(v) => return Err(Failure::Usage(format!("bad seed {v}"))),
    };
    Ok(Ctx {
        verb,
        config,
        seed: c.seed.or(cfg_seed),
        verbose: c.verbose,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn write_files(dir: &Path, files: &[(String, String)]) -> Outcome<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn run_verb(verb: &'static str, c: &Common, f: fn(&Ctx) -> Outcome<Output>) -> Outcome<()> {
    let ctx = load(verb, c)?;
    ctx.log("config loaded");
    let out = f(&ctx)?;
    let artifact = json!({
        "verb": verb,
        "seed": ctx.seed.map(|s| s.to_string()),
        "config": ctx.config,
        "result": out.result,
    });
    let body = pretty(&artifact);
    print!("{body}");
    if let Some(dir) = &c.out {
        let mut files = vec![(format!("{verb}.json"), body)];
        files.extend(out.files);
        write_files(dir, &files)?;
        ctx.log(format!("artifacts written to {}", dir.display()));
    }
    match out.breach {
        Some(m) => Err(Failure::Contract(m)),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.verb {
        Verb::Codec(c) => run_verb("codec", &c, verbs::codec),
        Verb::CodeBuild(c) => run_verb("code-build", &c, verbs::code_build),
        Verb::CodeVerify(c) => run_verb("code-verify", &c, verbs::code_verify),
        Verb::PipelineD(c) => run_verb("pipeline-d", &c, verbs::pipeline_d),
        Verb::PipelineB(c) => run_verb("pipeline-b", &c, verbs::pipeline_b),
        Verb::Gamma(c) => run_verb("gamma", &c, verbs::gamma),
        Verb::WitnessCheck(c) => run_verb("witness-check", &c, verbs::witness_check),
        Verb::WitnessTransform(c) => run_verb("witness-transform", &c, verbs::witness_transform),
        Verb::ForceRun(c) => run_verb("force-run", &c, verbs::force_run),
        Verb::FatCheck(c) => run_verb("fat-check", &c, verbs::fat_check),
        Verb::Thin(c) => run_verb("thin", &c, verbs::thin),
        Verb::Report(a) => {
            let (summary, csv) = report::build(&a.inputs, a.verbose)?;
            let body = pretty(&summary);
            print!("{body}");
            if let Some(dir) = &a.out {
                write_files(
                    dir,
                    &[("report.json".into(), body), ("report.csv".into(), csv)],
                )?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let f = Failure::Usage(e.to_string().trim().to_string());
            eprintln!("{}", f.json());
            return ExitCode::from(f.code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.json());
            ExitCode::from(f.code())
        }
    }
}
