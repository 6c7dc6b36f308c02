use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qparts::io::{distribution_to_value, spec_to_value};
use qparts::{
    coexist, emit_report, enumerate_parts, parse_spec, part_of, run_theorem_suite, Check, DensityState, DimPair,
    Entity, EntitySpec, Factor, Report, Status, Tolerance,
};

#[derive(Parser)]
#[command(name = "qparts", version, about = "Parts, coexistence and reductions of quantum measurements")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Numerical tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for randomized runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Largest parent outcome count for partition enumeration.
    #[arg(long, global = true, default_value_t = 8)]
    max_outcomes: usize,
    /// Record per-check runtimes in reports.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate an entity file.
    Validate { file: PathBuf },
    /// Measured observable of an instrument or model, or outcome
    /// probabilities when a state is given.
    Measure {
        file: PathBuf,
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Every part of an observable up to equivalence.
    Parts { file: PathBuf },
    /// Search for a surjection with child = f(parent).
    PartCheck { child: PathBuf, parent: PathBuf },
    /// Check that all members are parts of a common parent.
    Coexist {
        #[arg(long)]
        parent: PathBuf,
        #[arg(required = true)]
        members: Vec<PathBuf>,
    },
    /// Reduce to one factor of a bipartite space.
    Reduce {
        file: PathBuf,
        /// Factor dimensions `n1,n2`; defaults to the file's dims.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = Side::First)]
        keep: Side,
    },
    /// Tensor product of two entities of the same kind.
    Tensor { first: PathBuf, second: PathBuf },
    /// Instrument and observable of a measurement model.
    MmRun {
        file: PathBuf,
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Run the randomized verification suite.
    TheoremSuite,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    First,
    Second,
}

impl From<Side> for Factor {
    fn from(s: Side) -> Factor {
        match s {
            Side::First => Factor::First,
            Side::Second => Factor::Second,
        }
    }
}

enum Output {
    Report(Report),
    Json(Value),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = &cli.opts;
    let result = Tolerance::new(opts.tol).map_err(|e| e.to_string()).and_then(|tol| run(&cli.command, opts, tol));
    let (text, code) = match result {
        Ok(Output::Report(r)) => {
            let code = if r.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) };
            (emit_report(&r), code)
        }
        Ok(Output::Json(v)) => (pretty(&v), ExitCode::SUCCESS),
        Err(msg) => {
            eprintln!("qparts: {msg}");
            return ExitCode::from(2);
        }
    };
    match &opts.out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("qparts: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    code
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn load(path: &Path, tol: Tolerance<f64>) -> Result<EntitySpec<f64>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_spec(&text, tol).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_entity(path: &Path, tol: Tolerance<f64>) -> Result<Entity<f64>, String> {
    let spec = load(path, tol)?;
    spec.entity()
        .ok_or_else(|| format!("{}: expected an observable, instrument or mm, found {}", path.display(), spec.kind()))
}

fn load_state(path: &Path, tol: Tolerance<f64>) -> Result<DensityState<f64>, String> {
    match load(path, tol)? {
        EntitySpec::State { state, .. } => Ok(state),
        other => Err(format!("{}: expected a state, found {}", path.display(), other.kind())),
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn run(command: &Command, opts: &GlobalOpts, tol: Tolerance<f64>) -> Result<Output, String> {
    match command {
        Command::Validate { file } => {
            let mut report = Report::new(opts.seed, opts.tol);
            let text = fs::read_to_string(file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
            let check = match parse_spec::<f64>(&text, tol) {
                Ok(spec) => Check::with_status("valid-entity", format!("valid {}", spec.kind()), Status::Pass, 0.0),
                Err(e) => Check::with_status("valid-entity", e.to_string(), Status::Fail, f64::NAN),
            };
            report.push(check);
            Ok(Output::Report(report))
        }
        Command::Measure { file, state } => {
            let entity = load_entity(file, tol)?;
            let observable = entity.observable(tol).map_err(err)?;
            match state {
                Some(path) => {
                    let rho = load_state(path, tol)?;
                    Ok(Output::Json(distribution_to_value(&observable.distribution(&rho, tol).map_err(err)?)))
                }
                None => Ok(Output::Json(spec_to_value(&EntitySpec::from_observable(observable)))),
            }
        }
        Command::Parts { file } => {
            let observable = load_entity(file, tol)?.observable(tol).map_err(err)?;
            let parts = enumerate_parts(&observable, tol, opts.max_outcomes).map_err(err)?;
            let items: Vec<Value> = parts
                .into_iter()
                .map(|(part, map)| {
                    let pairs: Vec<Value> = map.pairs().map(|(x, y)| json!([x.to_string(), y.to_string()])).collect();
                    json!({"map": pairs, "part": spec_to_value(&EntitySpec::from_observable(part))})
                })
                .collect();
            Ok(Output::Json(Value::Array(items)))
        }
        Command::PartCheck { child, parent } => {
            let (child, parent) = (load_entity(child, tol)?, load_entity(parent, tol)?);
            let mut report = Report::new(opts.seed, opts.tol);
            report.push(part_check("part-of", &child, &parent, tol)?);
            Ok(Output::Report(report))
        }
        Command::Coexist { parent, members } => {
            let parent = load_entity(parent, tol)?;
            let members = members.iter().map(|m| load_entity(m, tol)).collect::<Result<Vec<_>, _>>()?;
            let mut report = Report::new(opts.seed, opts.tol);
            for (i, m) in members.iter().enumerate() {
                report.push(part_check(&format!("member-{}", i + 1), m, &parent, tol)?);
            }
            let joint = coexist(&members, &parent, tol).map_err(err)?;
            let check = match joint {
                Some(_) => Check::with_status("coexistence", "all members are parts of the parent", Status::Pass, 0.0),
                None => Check::with_status("coexistence", "some member is not a part of the parent", Status::Fail, f64::NAN),
            };
            report.push(check);
            Ok(Output::Report(report))
        }
        Command::Reduce { file, dims, keep } => {
            let spec = load(file, tol)?;
            let dims = match dims.as_deref().unwrap_or(spec.dims()) {
                [n1, n2] => DimPair::new(*n1, *n2).map_err(err)?,
                _ => return Err("reduce needs two factor dimensions; pass --dims n1,n2".into()),
            };
            let side = Factor::from(*keep);
            let kept = vec![dims.of(side)];
            let out = match spec {
                EntitySpec::Effect { effect, .. } => {
                    EntitySpec::Effect { dims: kept, effect: effect.reduce(dims, side).map_err(err)? }
                }
                EntitySpec::State { state, .. } => {
                    EntitySpec::State { dims: kept, state: state.marginal(dims, side).map_err(err)? }
                }
                EntitySpec::Observable { observable, .. } => {
                    EntitySpec::Observable { dims: kept, observable: observable.reduce(dims, side).map_err(err)? }
                }
                EntitySpec::Instrument { instrument, .. } => EntitySpec::Instrument {
                    dims: kept,
                    instrument: instrument.reduce(dims, side, tol).map_err(err)?,
                },
                EntitySpec::Model { model, .. } => EntitySpec::Instrument {
                    dims: kept,
                    instrument: model.reduced_instrument(dims, side, tol).map_err(err)?,
                },
            };
            Ok(Output::Json(spec_to_value(&out)))
        }
        Command::Tensor { first, second } => {
            let (a, b) = (load(first, tol)?, load(second, tol)?);
            let dims = [a.dims(), b.dims()].concat();
            let out = match (a, b) {
                (EntitySpec::Effect { effect: x, .. }, EntitySpec::Effect { effect: y, .. }) => {
                    EntitySpec::Effect { dims, effect: x.tensor(&y) }
                }
                (EntitySpec::State { state: x, .. }, EntitySpec::State { state: y, .. }) => {
                    EntitySpec::State { dims, state: x.tensor(&y) }
                }
                (EntitySpec::Observable { observable: x, .. }, EntitySpec::Observable { observable: y, .. }) => {
                    EntitySpec::Observable { dims, observable: x.tensor(&y) }
                }
                (EntitySpec::Instrument { instrument: x, .. }, EntitySpec::Instrument { instrument: y, .. }) => {
                    EntitySpec::Instrument { dims, instrument: x.tensor(&y) }
                }
                (EntitySpec::Model { model: x, .. }, EntitySpec::Model { model: y, .. }) => {
                    EntitySpec::Model { dims, model: x.composite(&y) }
                }
                (x, y) => return Err(format!("cannot tensor {} with {}", x.kind(), y.kind())),
            };
            Ok(Output::Json(spec_to_value(&out)))
        }
        Command::MmRun { file, state } => {
            let model = match load(file, tol)? {
                EntitySpec::Model { model, .. } => model,
                other => return Err(format!("{}: expected an mm, found {}", file.display(), other.kind())),
            };
            let instrument = model.instrument(tol).map_err(err)?;
            let observable = model.observable(tol).map_err(err)?;
            let mut out = json!({
                "instrument": spec_to_value(&EntitySpec::from_instrument(instrument)),
                "observable": spec_to_value(&EntitySpec::from_observable(observable.clone())),
            });
            if let Some(path) = state {
                let rho = load_state(path, tol)?;
                out["distribution"] = distribution_to_value(&observable.distribution(&rho, tol).map_err(err)?);
            }
            Ok(Output::Json(out))
        }
        Command::TheoremSuite => Ok(Output::Report(run_theorem_suite(opts.seed, opts.tol, opts.timings))),
    }
}

fn part_check(id: &str, child: &Entity<f64>, parent: &Entity<f64>, tol: Tolerance<f64>) -> Result<Check, String> {
    Ok(match part_of(child, parent, tol).map_err(err)? {
        Some(cert) => {
            let map: Vec<String> = cert.map().pairs().map(|(x, y)| format!("{x}->{y}")).collect();
            Check::with_status(id, format!("child = f(parent) with f = {{{}}}", map.join(", ")), Status::Pass, cert.residual())
        }
        None => Check::with_status(id, "no surjection maps the parent onto the child", Status::Fail, f64::NAN),
    })
}
