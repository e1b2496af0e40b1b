//! `gazeval`: batch front end for gaze value maps.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use gazeval_core::fitting::{fit, FitConfig};
use gazeval_core::grid::downscale_bilinear;
use gazeval_core::io::{json, read_raster, read_scanpaths, write_raster, import_pgm, load_params, load_profile, LoadOptions};
use gazeval_core::{presets, CostProfile, Dataset, Error, ErrorClass, EvalReport, Grid, NStepMode, PredictionContext};

#[derive(Parser)]
#[command(name = "gazeval", version, about = "History-dependent gaze value maps")]
struct Cli {
    /// Worker threads for evaluation and fitting (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Import a PGM saliency map as an SMR raster.
    Convert(ConvertArgs),
    /// Value map and predicted next fixation for a scanpath prefix.
    Predict(PredictArgs),
    /// Score a dataset and write a report.
    Eval(EvalArgs),
    /// Fit model parameters by maximizing one-step NSS.
    Fit(FitArgs),
    /// Per-position CSV from a report.
    Breakdown(BreakdownArgs),
    /// Start the session service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Integer bilinear downscale factor.
    #[arg(long, default_value_t = 1)]
    downscale: usize,
}

#[derive(Args)]
struct PredictArgs {
    /// SMR or PGM saliency map.
    #[arg(long)]
    saliency: PathBuf,
    /// Scanpath CSV; without it the history is empty.
    #[arg(long)]
    scanpath: Option<PathBuf>,
    /// Pick the scanpath for this image (default: the first one in the file).
    #[arg(long)]
    image_id: Option<String>,
    #[arg(long)]
    subject_id: Option<String>,
    /// Use only the first N fixations of the scanpath.
    #[arg(long)]
    fixations: Option<usize>,
    /// Downscale applied to the saliency map and the fixation coordinates.
    #[arg(long, default_value_t = 1)]
    downscale: usize,
    #[arg(long)]
    params: PathBuf,
    /// Cost profile JSON (default: the bundled illustrative profile).
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Where to write the value map.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the predicted fixation as a JSON line.
    #[arg(long)]
    print_prediction: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long, default_value = "truncate")]
    mode: NStepMode,
    #[arg(long)]
    report: PathBuf,
    /// Label for the report (default: the params file stem).
    #[arg(long)]
    model_id: Option<String>,
    /// Accepted for symmetry with `fit`; evaluation scores every target and
    /// draws nothing at random.
    #[arg(long)]
    seed: Option<u64>,
    /// Reject fixations outside the declared image instead of clamping them.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Full fit configuration JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hold the exploration weights fixed to these values: a JSON array or a
    /// params file.
    #[arg(long)]
    fixed_phis: Option<PathBuf>,
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Fitted params JSON.
    #[arg(long)]
    out: PathBuf,
    /// Full fit result with the objective trace.
    #[arg(long)]
    result: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct BreakdownArgs {
    #[arg(long)]
    report: PathBuf,
    /// Output CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    #[arg(long, default_value_t = 1800)]
    idle_timeout_secs: u64,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Data => 2,
            ErrorClass::Numeric => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

fn profile_or_default(path: Option<&PathBuf>) -> Result<CostProfile, Failure> {
    Ok(match path {
        Some(p) => load_profile(p)?,
        None => presets::illustrative_profile(),
    })
}

fn load_saliency(path: &Path) -> Result<Grid, Error> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        import_pgm(path)
    } else {
        read_raster(path)
    }
}

fn convert(args: ConvertArgs) -> Result<(), Failure> {
    if args.downscale == 0 {
        return Err(usage("--downscale must be at least 1"));
    }
    let g = load_saliency(&args.input)?;
    let g = downscale_bilinear(&g, args.downscale)?;
    write_raster(&g, &args.out)?;
    Ok(())
}

fn predict(args: PredictArgs) -> Result<(), Failure> {
    if args.downscale == 0 {
        return Err(usage("--downscale must be at least 1"));
    }
    let raw = load_saliency(&args.saliency)?;
    let saliency = downscale_bilinear(&raw, args.downscale)?;
    let mut history = Vec::new();
    if let Some(path) = &args.scanpath {
        let scanpaths = read_scanpaths(path)?;
        let chosen = scanpaths
            .iter()
            .find(|sp| {
                args.image_id.as_ref().is_none_or(|id| &sp.image_id == id)
                    && args.subject_id.as_ref().is_none_or(|id| &sp.subject_id == id)
            })
            .ok_or_else(|| Failure { code: 2, message: "no matching scanpath".into() })?;
        let image = (raw.width() as f64, raw.height() as f64);
        history = chosen.to_working(image, args.downscale, saliency.dims(), true)?.fixations;
        if let Some(n) = args.fixations {
            history.truncate(n);
        }
    }
    let ctx = PredictionContext::new(
        Arc::new(saliency),
        history,
        load_params(&args.params)?,
        profile_or_default(args.profile.as_ref())?,
    )?;
    let value = ctx.value_map()?;
    if let Some(out) = &args.out {
        write_raster(&value, out)?;
    }
    if args.print_prediction {
        println!("{}", json::to_string(&gazeval_core::argmax(&value)));
    }
    Ok(())
}

fn load_dataset(manifest: &Path, strict: bool) -> Result<Dataset, Failure> {
    Ok(Dataset::load(manifest, LoadOptions { strict })?)
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    if args.steps == 0 {
        return Err(usage("--steps must be at least 1"));
    }
    if let Some(seed) = args.seed {
        log::debug!("seed {seed} has no effect on evaluation");
    }
    let dataset = load_dataset(&args.manifest, args.strict)?;
    let params = load_params(&args.params)?;
    let profile = profile_or_default(args.profile.as_ref())?;
    let model_id = args.model_id.unwrap_or_else(|| stem(&args.params));
    let report = gazeval_core::evaluate(&dataset, &params, &profile, args.steps, args.mode, &model_id)?;
    write_file(&args.report, report.to_json() + "\n")
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

/// Exploration weights from a bare JSON array or from a params file.
fn read_phis(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = read_text(path)?;
    if let Ok(phis) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(phis);
    }
    Ok(gazeval_core::ModelParams::from_json(&text)?.phis)
}

fn fit_cmd(args: FitArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(p) => FitConfig::from_json(&read_text(p)?)?,
        None => FitConfig::default(),
    };
    if let Some(n) = args.samples {
        config.sample_count = n;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(p) = &args.fixed_phis {
        config.free_phis = false;
        config.init.phis = read_phis(p)?;
    }
    config.validate()?;
    let dataset = load_dataset(&args.manifest, args.strict)?;
    let profile = profile_or_default(args.profile.as_ref())?;
    let (result, failure) = match fit(&dataset, &profile, &config) {
        Ok(r) => (r, None),
        Err(Error::LineSearchFailure { best }) => {
            let message = format!(
                "line search failed; writing the best parameters found (objective {})",
                best.final_objective()
            );
            (*best, Some(Failure { code: 3, message }))
        }
        Err(e) => return Err(e.into()),
    };
    write_file(&args.out, result.params.to_json() + "\n")?;
    if let Some(path) = &args.result {
        write_file(path, json::to_string_pretty(&result) + "\n")?;
    }
    failure.map_or(Ok(()), Err)
}

fn breakdown(args: BreakdownArgs) -> Result<(), Failure> {
    let report = EvalReport::from_json(&read_text(&args.report)?)?;
    let mut buf = Vec::new();
    report.write_position_csv(&mut buf).expect("writing to memory");
    match &args.out {
        Some(path) => write_file(path, buf),
        None => std::io::stdout().write_all(&buf).map_err(|e| Failure { code: 2, message: e.to_string() }),
    }
}

fn serve(args: ServeArgs) -> Result<(), Failure> {
    let io_failure = |e: std::io::Error| Failure { code: 2, message: e.to_string() };
    let runtime = tokio::runtime::Runtime::new().map_err(io_failure)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.addr).await.map_err(io_failure)?;
        eprintln!("listening on http://{}", listener.local_addr().map_err(io_failure)?);
        let state = gazeval_service::AppState::new(Duration::from_secs(args.idle_timeout_secs));
        gazeval_service::serve(listener, state).await.map_err(io_failure)
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    match cli.command {
        Command::Convert(a) => convert(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Breakdown(a) => breakdown(a),
        Command::Serve(a) => serve(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GAZEVAL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gazeval: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
