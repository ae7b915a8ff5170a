mod builtins;
mod density_file;
mod manifest;
mod records;
mod spec_file;
mod stats_cmd;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use padicslice::{sampler, DensitySpec, PadicContext, RunOptions, VarietySpec};

use crate::manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(name = "padicslice", version, about = "Sample points and integrate over p-adic varieties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw points distributed as f dμ_X.
    Sample(SampleArgs),
    /// Estimate ∫_X f dμ_X.
    Integrate(IntegrateArgs),
    /// Estimate the volume μ_X of the support ball.
    Volume(VolumeArgs),
    /// Histogram a sample file modulo p^j and test for uniformity.
    Stats(StatsArgs),
    /// Built-in example varieties.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
    /// Rerun the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Write output here instead of the recorded location.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Variety file, or the name of a built-in example.
    #[arg(long)]
    variety: String,
    #[arg(long)]
    prime: u64,
    #[arg(long, default_value_t = 32)]
    precision: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: u32,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to `<out>.manifest.json` when --out is given.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    count: u64,
    /// `uniform` or a density file.
    #[arg(long, default_value = "uniform")]
    density: String,
    #[arg(long, default_value_t = 0)]
    support_radius: u32,
}

#[derive(Args, Debug, Clone)]
struct IntegrateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    samples: u64,
    #[arg(long, default_value = "uniform")]
    density: String,
    #[arg(long, default_value_t = 0)]
    support_radius: u32,
}

#[derive(Args, Debug, Clone)]
struct VolumeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    support_radius: u32,
}

#[derive(Args, Debug, Clone)]
struct StatsArgs {
    #[arg(long)]
    samples: PathBuf,
    /// `p^j`, or an integer power of the sample prime.
    #[arg(long)]
    modulus: String,
}

#[derive(Subcommand, Debug)]
enum ExamplesAction {
    List,
    Emit {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, &argv[1..], true) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let violated = e
        .chain()
        .any(|c| matches!(c.downcast_ref::<padicslice::Error>(), Some(padicslice::Error::BoundViolation { .. })));
    if violated {
        3
    } else {
        2
    }
}

fn run(cli: Cli, argv: &[String], write_manifest: bool) -> Result<()> {
    match cli.command {
        Command::Sample(args) => cmd_sample(args, argv, write_manifest),
        Command::Integrate(args) => {
            let IntegrateArgs { common, samples, density, support_radius } = args;
            cmd_integrate(common, samples, &density, support_radius, argv, write_manifest)
        }
        Command::Volume(args) => {
            let VolumeArgs { common, samples, support_radius } = args;
            cmd_integrate(common, samples, "uniform", support_radius, argv, write_manifest)
        }
        Command::Stats(args) => cmd_stats(args),
        Command::Examples { action } => cmd_examples(action),
        Command::Replay { manifest, out } => cmd_replay(&manifest, out),
    }
}

fn load_variety(arg: &str) -> Result<VarietySpec> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(b) = builtins::find(arg) {
            return b.file().to_spec();
        }
    }
    spec_file::load(path)
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn manifest_path(common: &Common) -> Option<PathBuf> {
    common.manifest.clone().or_else(|| {
        common.out.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    })
}

fn emit_manifest(common: &Common, argv: &[String], resamples: u64, slices_tried: u64, started: Instant) -> Result<()> {
    let Some(path) = manifest_path(common) else { return Ok(()) };
    RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: argv.to_vec(),
        seed: common.seed,
        prime: common.prime,
        precision: common.precision,
        workers: common.workers,
        resamples,
        slices_tried,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    }
    .write(&path)
}

fn setup(common: &Common, density: &str, support_radius: u32) -> Result<(PadicContext, VarietySpec, DensitySpec)> {
    if common.workers == 0 {
        bail!("--workers must be at least 1");
    }
    let ctx = PadicContext::new(common.prime, common.precision, common.seed)?;
    let spec = load_variety(&common.variety)?;
    let f = density_file::resolve(density, support_radius, common.prime, common.precision, spec.num_vars())?;
    Ok((ctx, spec, f))
}

fn cmd_sample(args: SampleArgs, argv: &[String], write_manifest: bool) -> Result<()> {
    let started = Instant::now();
    let common = &args.common;
    let (ctx, spec, f) = setup(common, &args.density, args.support_radius)?;
    let batch = sampler::sample(&ctx, &spec, &f, args.count, RunOptions { workers: common.workers })?;
    let mut out = open_out(&common.out)?;
    records::write_batch(&mut out, &ctx, &spec, &batch, args.support_radius)?;
    if write_manifest {
        emit_manifest(common, argv, batch.resamples, batch.slices_tried, started)?;
    }
    Ok(())
}

fn cmd_integrate(
    common: Common,
    samples: u64,
    density: &str,
    support_radius: u32,
    argv: &[String],
    write_manifest: bool,
) -> Result<()> {
    let started = Instant::now();
    if samples == 0 {
        bail!("--samples must be at least 1");
    }
    let (ctx, spec, f) = setup(&common, density, support_radius)?;
    let est = sampler::integrate(&ctx, &spec, &f, samples, RunOptions { workers: common.workers })?;
    let mut out = open_out(&common.out)?;
    writeln!(out, "value {:.10e}", est.value)?;
    writeln!(out, "std_error {:.10e}", est.std_error)?;
    writeln!(out, "chebyshev_bound {:.10e}", est.chebyshev_bound)?;
    writeln!(out, "samples {}", est.samples)?;
    writeln!(out, "resamples {}", est.resamples)?;
    out.flush()?;
    if write_manifest {
        emit_manifest(&common, argv, est.resamples, est.samples + est.resamples, started)?;
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let file = File::open(&args.samples).with_context(|| format!("cannot open {}", args.samples.display()))?;
    let (header, points) = records::read_batch(BufReader::new(file))?;
    let j = stats_cmd::parse_modulus(&args.modulus, header.prime)?;
    let hist = stats_cmd::histogram(&header, &points, j)?;
    print!("{}", stats_cmd::render(&header, &hist));
    Ok(())
}

fn cmd_examples(action: ExamplesAction) -> Result<()> {
    match action {
        ExamplesAction::List => {
            for b in builtins::BUILTINS {
                println!("{:<10} {}", b.name, b.summary);
            }
            Ok(())
        }
        ExamplesAction::Emit { name, out } => {
            let b = builtins::find(&name).with_context(|| format!("no built-in example named `{name}`"))?;
            let text = serde_json::to_string_pretty(&b.file())? + "\n";
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn cmd_replay(path: &Path, out: Option<PathBuf>) -> Result<()> {
    let m = RunManifest::read(path)?;
    let argv: Vec<String> = std::iter::once(m.tool.clone()).chain(m.command.iter().cloned()).collect();
    let mut cli = Cli::try_parse_from(&argv).map_err(|e| anyhow::anyhow!("recorded command does not parse: {e}"))?;
    if let Some(out) = out {
        match &mut cli.command {
            Command::Sample(a) => a.common.out = Some(out),
            Command::Integrate(a) => a.common.out = Some(out),
            Command::Volume(a) => a.common.out = Some(out),
            _ => bail!("manifest does not record a sample, integrate or volume run"),
        }
    }
    if matches!(cli.command, Command::Replay { .. }) {
        bail!("manifest records another replay");
    }
    run(cli, &m.command, false)
}
