use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use exdecomp::generate::{generate, GeneratorSpec};
use exdecomp::numeric::parse_decimal;
use exdecomp::verify::verify_certificate;
use exdecomp::{run_pipeline, Certificate, Error, Instance, Params, Regime};

#[derive(Parser)]
#[command(name = "exdecomp", version, about = "Generate, decompose and verify exceptional path system decompositions")]
struct Cli {
    /// Emit stage traces as JSON lines on stderr.
    #[arg(long, global = true)]
    json_logs: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance for a regime.
    Generate(GenerateArgs),
    /// Run the decomposition pipeline and write a certificate.
    Run(RunArgs),
    /// Re-verify a certificate against its instance.
    Verify {
        instance: PathBuf,
        certificate: PathBuf,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    regime: Regime,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "k", short = 'k')]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "degree", short = 'D')]
    d: Option<usize>,
    /// Lower bound on φn / n, as a decimal or fraction.
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    eps_close: Option<String>,
    /// Crossing edge count for the few-edges regime.
    #[arg(long)]
    crossing: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Instance file; omit with --batch.
    #[arg(required_unless_present = "batch")]
    instance: Option<PathBuf>,
    /// Parameters as a JSON object or a path to a JSON file. Defaults to
    /// the parameters stored in the instance.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Force a pipeline instead of detecting the regime.
    #[arg(long)]
    regime: Option<Regime>,
    /// Certificate path, or the output directory with --batch.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run every instance file in a directory in parallel.
    #[arg(long, conflicts_with = "instance")]
    batch: Option<PathBuf>,
}

/// Outcome of one command, mapped to an exit code and a JSON summary.
struct Outcome {
    code: u8,
    summary: serde_json::Value,
}

fn error_outcome(e: &Error) -> Outcome {
    let (code, status) = match e {
        Error::Infeasible(_) => (2, "infeasible"),
        Error::Precondition(_) => (1, "precondition"),
        Error::Input(_) | Error::Contract(_) => (1, "input"),
    };
    let summary = match e.failure() {
        Some(f) => json!({ "status": status, "failure": f }),
        None => json!({ "status": status, "message": e.to_string() }),
    };
    Outcome { code, summary }
}

fn load_params(inst: &Instance, args: &RunArgs) -> Result<Params, Error> {
    let mut params = match &args.params {
        Some(text) if text.trim_start().starts_with('{') => parse_params(text)?,
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("reading {path}: {e}")))?;
            parse_params(&text)?
        }
        None => inst
            .params
            .clone()
            .ok_or_else(|| Error::Input("instance has no parameters; pass --params".into()))?,
    };
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    Ok(params)
}

fn parse_params(text: &str) -> Result<Params, Error> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("params JSON: {e}")))
}

fn run_one(path: &Path, args: &RunArgs, out: &Path) -> Outcome {
    let result = (|| {
        let inst = Instance::load(path)?;
        let params = load_params(&inst, args)?;
        let cert = run_pipeline(&inst, &params, args.regime.or(inst.regime))?;
        std::fs::write(out, cert.to_json()).map_err(|e| Error::Input(format!("writing {}: {e}", out.display())))?;
        Ok::<_, Error>(cert)
    })();
    match result {
        Ok(cert) => verification_outcome(&cert.verification, json!({ "regime": cert.regime, "systems": cert.systems.len(), "flags": cert.flags, "certificate": out })),
        Err(e) => error_outcome(&e),
    }
}

fn verification_outcome(report: &exdecomp::report::Report, mut extra: serde_json::Value) -> Outcome {
    match report.first_failure() {
        None => {
            extra["status"] = json!("ok");
            Outcome { code: 0, summary: extra }
        }
        Some(c) => {
            extra["status"] = json!("verification");
            extra["failure"] = json!(c);
            Outcome { code: 3, summary: extra }
        }
    }
}

fn cmd_run(args: &RunArgs) -> Outcome {
    let Some(dir) = &args.batch else {
        let path = args.instance.as_ref().expect("clap requires an instance");
        let out = args.out.clone().unwrap_or_else(|| path.with_extension("cert.json"));
        let mut o = run_one(path, args, &out);
        o.summary["instance"] = json!(path);
        return o;
    };
    let listing = match std::fs::read_dir(dir) {
        Ok(l) => l,
        Err(e) => return error_outcome(&Error::Input(format!("reading {}: {e}", dir.display()))),
    };
    let mut inputs: Vec<PathBuf> = listing
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.to_string_lossy().ends_with(".cert.json"))
        .collect();
    inputs.sort();
    let out_dir = args.out.clone().unwrap_or_else(|| dir.clone());
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        return error_outcome(&Error::Input(format!("creating {}: {e}", out_dir.display())));
    }
    let results: Vec<(PathBuf, Outcome)> = inputs
        .par_iter()
        .map(|p| {
            let stem = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let out = out_dir.join(format!("{stem}.cert.json"));
            (p.clone(), run_one(p, args, &out))
        })
        .collect();
    let code = results.iter().map(|(_, o)| o.code).max().unwrap_or(0);
    let ok = results.iter().filter(|(_, o)| o.code == 0).count();
    let runs: Vec<serde_json::Value> = results
        .into_iter()
        .map(|(p, mut o)| {
            o.summary["instance"] = json!(p);
            o.summary
        })
        .collect();
    Outcome { code, summary: json!({ "status": if code == 0 { "ok" } else { "partial" }, "succeeded": ok, "runs": runs }) }
}

fn cmd_verify(instance: &Path, certificate: &Path) -> Outcome {
    let result = (|| {
        let inst = Instance::load(instance)?;
        let text = std::fs::read_to_string(certificate)
            .map_err(|e| Error::Input(format!("reading {}: {e}", certificate.display())))?;
        let cert = Certificate::from_json(&text)?;
        Ok::<_, Error>(verify_certificate(&inst, &cert))
    })();
    match result {
        Ok(report) => {
            let checks = report.checks.len();
            verification_outcome(&report, json!({ "checks": checks }))
        }
        Err(e) => error_outcome(&e),
    }
}

fn cmd_generate(a: &GenerateArgs) -> Outcome {
    let result = (|| {
        let mut spec = GeneratorSpec::default_for(a.regime, a.seed);
        spec.n = a.n.unwrap_or(spec.n);
        spec.k = a.k.unwrap_or(spec.k);
        spec.d = a.d;
        spec.crossing = a.crossing;
        spec.phi = a.phi.as_deref().map(parse_decimal).transpose()?;
        if let Some(e) = &a.eps_close {
            spec.eps_close = parse_decimal(e)?;
        }
        let inst = generate(&spec)?;
        inst.save(&a.out)?;
        Ok::<_, Error>(inst)
    })();
    match result {
        Ok(inst) => Outcome {
            code: 0,
            summary: json!({ "status": "ok", "n": inst.graph.n(), "edges": inst.graph.edge_count(), "params": inst.params, "out": a.out }),
        },
        Err(e) => error_outcome(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(if cli.json_logs { "info" } else { "warn" }));
    let builder = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr);
    if cli.json_logs {
        builder.json().init();
    } else {
        builder.init();
    }
    let outcome = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Run(a) => cmd_run(a),
        Command::Verify { instance, certificate } => cmd_verify(instance, certificate),
    };
    println!("{}", outcome.summary);
    ExitCode::from(outcome.code)
}
