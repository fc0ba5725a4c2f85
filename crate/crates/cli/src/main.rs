use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use scatden::bank::{check_littlewood_paley, check_vanishing_moments, MotherWaveletParams, WaveletBank};
use scatden::bench::{
    denoise_with, fit_slope, minimax_slope, psnr, read_sweep_csv, run_decay_experiment, run_noise_sweep,
    write_decay_csv, Estimator, SweepConfig,
};
use scatden::config::{init_workers, RunConfig};
use scatden::datagen::{sample_geometric_image, GeoImageParams};
use scatden::io::{read_image, save_bank, write_image, write_manifest, write_pgm, ManifestRow};
use scatden::{Error, Result};

/// Exit code for a bad configuration or any other error.
const EXIT_ERROR: u8 = 1;
/// Exit code when the run completed but some solves or samples failed.
const EXIT_PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(name = "scatden", version, about = "Scattering-energy image denoising experiments")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample piecewise-regular images.
    Generate(GenerateArgs),
    /// Denoise one image.
    Denoise(DenoiseArgs),
    /// Run a noise sweep and write one CSV row per noise level.
    Sweep(SweepArgs),
    /// Decay of second-order coefficients on constant-region images.
    Decay(DecayArgs),
    /// Print the frame bounds and moment report of a bank.
    CheckBank(CheckBankArgs),
    /// Fit log-log slopes to an existing sweep CSV.
    Fit(FitArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of samples.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Image side.
    #[arg(long = "N")]
    side: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Constant background and foreground.
    #[arg(long)]
    constant_regions: bool,
    /// Also write a 16-bit PGM per sample.
    #[arg(long)]
    pgm: bool,
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value = "scattering")]
    estimator: Estimator,
    #[arg(long)]
    out: PathBuf,
    /// Coarsest first-order scale; defaults to one octave above the pixel.
    #[arg(long, allow_hyphen_values = true)]
    j_max: Option<i32>,
    #[arg(long, default_value_t = 2)]
    jprime_extra: i32,
    /// Clean reference; prints the PSNR of the input and of the estimate.
    #[arg(long)]
    clean: Option<PathBuf>,
    #[arg(long)]
    pgm: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated exponents.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    estimator: Option<Estimator>,
    /// Comma-separated noise variances.
    #[arg(long, value_delimiter = ',')]
    sigma2: Option<Vec<f64>>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long = "N")]
    side: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; existing rows are kept and skipped.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecayArgs {
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long = "N", default_value_t = 256)]
    side: usize,
    /// Number of samples.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckBankArgs {
    #[arg(long = "N", default_value_t = 128)]
    side: usize,
    #[arg(long, allow_hyphen_values = true)]
    j_min: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    j_max: Option<i32>,
    /// Write the bank as JSON.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // usage errors are configuration errors; clap's own code would read as a partial failure
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_PARTIAL),
        Err(e) => {
            error!("{e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

/// Returns `false` when the run finished with partial failures.
fn run(cli: Cli) -> Result<bool> {
    init_workers()?;
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Generate(a) => generate(&config, a),
        Command::Denoise(a) => denoise(&config, a),
        Command::Sweep(a) => sweep(&config, a),
        Command::Decay(a) => decay(a),
        Command::CheckBank(a) => check_bank(a),
        Command::Fit(a) => fit(a),
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn generate(config: &RunConfig, a: GenerateArgs) -> Result<bool> {
    let mut base = config.datagen.clone().unwrap_or_default();
    if let Some(alpha) = a.alpha {
        base = GeoImageParams { c_contour: GeoImageParams::for_alpha(alpha, base.n, 0).c_contour, alpha, ..base };
    }
    if let Some(n) = a.side {
        base.n = n;
    }
    base.constant_regions |= a.constant_regions;
    base.validate()?;
    std::fs::create_dir_all(&a.out)?;
    let mut rows = Vec::with_capacity(a.n);
    let mut ok = true;
    for i in 0..a.n {
        let params = GeoImageParams { seed: a.seed.wrapping_add(i as u64), ..base.clone() };
        let sample = match sample_geometric_image(&params) {
            Ok(s) => s,
            Err(e @ Error::Degenerate(_)) => {
                error!("sample {i} (seed {}): {e}", params.seed);
                ok = false;
                continue;
            }
            Err(e) => return Err(e),
        };
        let name = format!("sample_{i:04}.bin");
        write_image(&a.out.join(&name), &sample.image, [-1.0, 1.0])?;
        if a.pgm {
            write_pgm(&a.out.join(format!("sample_{i:04}.pgm")), &sample.image, [-1.0, 1.0])?;
        }
        rows.push(ManifestRow {
            file: name,
            alpha: params.alpha,
            seed: params.seed,
            n: params.n,
            gap: sample.gap,
            contour_length: sample.stats.contour_length,
            contour_lipschitz: sample.stats.contour_lipschitz,
            region_lipschitz: sample.stats.region_lipschitz,
        });
    }
    write_manifest(&a.out.join("manifest.csv"), &rows)?;
    Ok(ok)
}

fn denoise(config: &RunConfig, a: DenoiseArgs) -> Result<bool> {
    let (g, header) = read_image(&a.input)?;
    let energy = config.energy.unwrap_or_else(|| a.estimator.default_energy());
    let solver = config.solver.unwrap_or_default();
    let j_pix = -(g.side().trailing_zeros() as i32);
    let j_max = a.j_max.unwrap_or(j_pix + 1);
    let (h, failed) = denoise_with(a.estimator, &g, a.sigma, &energy, &solver, j_max, a.jprime_extra)?;
    write_image(&a.out, &h, header.range)?;
    if a.pgm {
        write_pgm(&a.out.with_extension("pgm"), &h, header.range)?;
    }
    if let Some(clean) = &a.clean {
        let (f, _) = read_image(clean)?;
        let peak = header.range[1] - header.range[0];
        print_json(&serde_json::json!({
            "psnr_input": psnr(&g, &f, peak)?,
            "psnr_output": psnr(&h, &f, peak)?,
        }))?;
    }
    Ok(!failed)
}

fn sweep(config: &RunConfig, a: SweepArgs) -> Result<bool> {
    let mut c: SweepConfig = config.sweep.clone().unwrap_or_default();
    if let Some(v) = a.alpha {
        c.alphas = v;
    }
    if let Some(v) = a.estimator {
        c.estimator = v;
    }
    if let Some(v) = a.sigma2 {
        c.sigma2_grid = v;
    }
    if let Some(v) = a.realizations {
        c.realizations = v;
    }
    if let Some(v) = a.side {
        c.n = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if c.energy.is_none() {
        c.energy = config.energy;
    }
    if let Some(s) = config.solver {
        c.solver = s;
    }
    let rows = run_noise_sweep(&c, Some(&a.out))?;
    Ok(rows.iter().all(|r| r.failures == 0))
}

fn decay(a: DecayArgs) -> Result<bool> {
    let seeds: Vec<u64> = (0..a.seeds).map(|i| a.seed.wrapping_add(i)).collect();
    let result = run_decay_experiment(a.alpha, a.side, &seeds)?;
    write_decay_csv(&result, std::fs::File::create(&a.out)?)?;
    print_json(&serde_json::json!({
        "alpha": a.alpha,
        "fit_scales": result.fit_scales,
        "fit": result.fit,
        "degenerate": result.degenerate,
    }))?;
    Ok(!result.degenerate)
}

fn check_bank(a: CheckBankArgs) -> Result<bool> {
    let j_pix = -(a.side.trailing_zeros() as i32);
    let j_min = a.j_min.unwrap_or(j_pix);
    let j_max = a.j_max.unwrap_or(j_min + 2);
    let bank = WaveletBank::build(a.side, j_min, j_max, MotherWaveletParams::default())?;
    let (lower, upper) = check_littlewood_paley(&bank);
    let moments = check_vanishing_moments(&bank, 1e-6);
    if let Some(p) = &a.export {
        save_bank(p, &bank)?;
    }
    print_json(&serde_json::json!({
        "n": a.side,
        "j_min": j_min,
        "j_max": j_max,
        "littlewood_paley": { "lower": lower, "upper": upper },
        "moments": moments,
    }))?;
    Ok(lower > 0.0 && moments.iter().all(|m| m.pass))
}

fn fit(a: FitArgs) -> Result<bool> {
    let rows = read_sweep_csv(Path::new(&a.input))?;
    let fits = fit_slope(&rows)?;
    let out: serde_json::Map<String, serde_json::Value> = fits
        .iter()
        .map(|(alpha, f)| {
            let minimax = alpha.parse::<f64>().map(minimax_slope).ok();
            (alpha.clone(), serde_json::json!({ "fit": f, "ci": f.ci(), "minimax_slope": minimax }))
        })
        .collect();
    print_json(&serde_json::Value::Object(out))?;
    Ok(true)
}
