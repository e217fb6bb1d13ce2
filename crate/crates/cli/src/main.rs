//! `condres`: entropy sweeps, theorem verification, rate-distortion
//! comparisons, codec runs and BD-rate analysis for residual, conditional and
//! conditional-residual coding.

mod grid;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use condres_core::analysis::{
    bd_rate, format_percent, format_quant_step, read_rd_csv, sig9, write_rd_csv, BD_METHOD,
    write_sweep_csv, write_theorem_csv, QualityCurve,
};
use condres_core::codec::{
    decode, encode, measure_rate, sample_pixels, target_entropy, Bitstream, Paradigm,
    ProbabilityModel,
};
use condres_core::pixel::{
    conditional_vs_residual_crossovers, default_p_grid, default_q_list, entropy_report,
    parse_quant_step, sweep_p,
};
use condres_core::rd::{compare_paradigms, default_slopes, BaConfig, RdCurve};
use condres_core::theorems::{check_pixel_grid, run_suite, SuiteConfig};
use condres_core::{Error, PixelModelParams};
use grid::List;
use num_rational::Rational64;

const EXIT_VERIFY: u8 = 1;
const EXIT_INTEGRITY: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Largest alphabet `rd` accepts without `--force`.
const RD_MAX_ALPHABET: usize = 64;

/// Window of rate-distortion points used for BD-rates.
const BD_MIN_RATE: f64 = 0.01;
const BD_MAX_PSNR: f64 = 40.0;

#[derive(Parser, Debug)]
#[command(name = "condres", version, about = "Residual, conditional and conditional-residual coding laboratory")]
struct Cli {
    /// Seed for every randomized step; recorded in all outputs.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Directory for CSV and bitstream outputs.
    #[arg(long, global = true, env = "CONDRES_OUT", default_value = "condres-out")]
    out: PathBuf,

    /// Print results only; write no files.
    #[arg(long, global = true)]
    plain: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entropies of the pixel model over a grid of occlusion probabilities
    /// and quantizer steps.
    Sweep(SweepArgs),
    /// Randomized numeric verification of the coding identities and
    /// inequalities.
    Verify(VerifyArgs),
    /// Rate-distortion curves of the four coders and their BD-rates.
    Rd(RdArgs),
    /// Encode and decode a sampled pixel sequence with one coder.
    Codec(CodecArgs),
    /// BD-rates between curves of a rate-distortion CSV.
    Bd(BdArgs),
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Occlusion probabilities: list `a,b,c` or range `start:stop:step`.
    #[arg(long = "p", value_parser = grid::p_grid)]
    p: Option<List<f64>>,
    /// Quantizer steps, e.g. `1,1.4,2,64`.
    #[arg(long = "Q", value_parser = grid::q_list)]
    q: Option<List<Rational64>>,
    /// Pixel alphabet size.
    #[arg(long = "M", default_value_t = 256)]
    m: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Alphabet sizes of `X` and `X_p`, e.g. `8x8`.
    #[arg(long, default_value = "8x8", value_parser = grid::shape)]
    shape: List<usize>,
    /// Dirichlet concentration of the random distributions.
    #[arg(long, default_value_t = 1.0)]
    concentration: f64,
    /// Also check the lossless identities on the default pixel-model grid.
    #[arg(long)]
    pixel_grid: bool,
    /// Break the residual map to exercise the failure path.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args, Debug)]
struct RdArgs {
    #[arg(long = "M", default_value_t = 16)]
    m: usize,
    #[arg(long = "p", default_value_t = 0.3)]
    p: f64,
    #[arg(long = "Q", default_value = "4", value_parser = quant_step)]
    q: Rational64,
    /// Slopes: `lo:hi:count` (log-spaced) or a list.
    #[arg(long, value_parser = grid::slopes)]
    slopes: Option<List<f64>>,
    #[arg(long, default_value_t = BaConfig::default().max_iters)]
    max_iters: usize,
    /// Duality-gap tolerance in bits.
    #[arg(long, default_value_t = BaConfig::default().tol)]
    tol: f64,
    /// Allow alphabets above 64 symbols.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct CodecArgs {
    #[arg(long = "p", default_value_t = 0.5)]
    p: f64,
    #[arg(long = "Q", default_value = "1", value_parser = quant_step)]
    q: Rational64,
    #[arg(long = "M", default_value_t = 256)]
    m: usize,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// residual, conditional or condres.
    #[arg(long, value_parser = paradigm)]
    paradigm: Paradigm,
}

#[derive(Args, Debug)]
struct BdArgs {
    /// Rate-distortion CSV as written by `rd`.
    #[arg(long)]
    csv: PathBuf,
    /// Label of the reference curve.
    #[arg(long, default_value = condres_core::rd::LABEL_RES)]
    reference: String,
    /// Peak value for the PSNR mapping.
    #[arg(long, default_value_t = 15.0)]
    peak: f64,
}

fn quant_step(text: &str) -> Result<Rational64, String> {
    parse_quant_step(text).map_err(|e| e.to_string())
}

fn paradigm(text: &str) -> Result<Paradigm, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Success,
    VerificationFailed,
    IntegrityFailed,
}

struct Ctx {
    seed: u64,
    out: PathBuf,
    plain: bool,
    provenance: String,
}

impl Ctx {
    fn path(&self, name: &str) -> Option<PathBuf> {
        (!self.plain).then(|| self.out.join(name))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let args: Vec<String> = std::env::args().collect();
    let ctx = Ctx {
        seed: cli.seed,
        out: cli.out,
        plain: cli.plain,
        provenance: format!(
            "condres {} | {} | seed {}",
            env!("CARGO_PKG_VERSION"),
            args.join(" "),
            cli.seed
        ),
    };
    println!("# {}", ctx.provenance);
    let result = match &cli.command {
        Command::Sweep(a) => sweep(&ctx, a),
        Command::Verify(a) => verify(&ctx, a),
        Command::Rd(a) => rd(&ctx, a),
        Command::Codec(a) => codec(&ctx, a),
        Command::Bd(a) => bd(&ctx, a),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(EXIT_VERIFY),
        Ok(Outcome::IntegrityFailed) => ExitCode::from(EXIT_INTEGRITY),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Format(_) | Error::Integrity(_) | Error::ModelCoverage { .. } => EXIT_INTEGRITY,
        Error::Io { .. } | Error::Csv { .. } | Error::NegativeMeasure { .. } => EXIT_VERIFY,
        _ => EXIT_USAGE,
    }
}

fn sweep(ctx: &Ctx, a: &SweepArgs) -> Result<Outcome, Error> {
    let p_grid = a.p.clone().map_or_else(default_p_grid, |l| l.0);
    let q_list = a.q.clone().map_or_else(default_q_list, |l| l.0);
    let rows = sweep_p(&p_grid, &q_list, a.m)?;
    if let Some(path) = ctx.path("sweep.csv") {
        write_sweep_csv(&path, &rows, Some(&ctx.provenance))?;
        println!("wrote {} rows to {}", rows.len(), path.display());
    }
    if rows.len() <= 40 {
        println!(
            "{:>6} {:>6} {:>11} {:>11} {:>11} {:>11}",
            "Q", "p", "H(R)", "H(X|Xp)", "H(X|Xhat)", "H(R|Xhat)"
        );
        for r in &rows {
            println!(
                "{:>6} {:>6} {:>11.6} {:>11.6} {:>11.6} {:>11.6}",
                format_quant_step(&r.quant_step),
                sig9(r.occlusion_prob),
                r.report.h_r.value(),
                r.report.h_x_given_xp.value(),
                r.report.h_x_given_xphat.value(),
                r.report.h_r_given_xphat.value()
            );
        }
    }
    let crossovers = conditional_vs_residual_crossovers(&rows);
    if crossovers.is_empty() {
        println!("no sign change of H(X|Xhat_p) - H(R) on this grid");
    }
    for c in crossovers {
        println!(
            "crossover Q={} between p={} and p={} (estimate {:.4})",
            format_quant_step(&c.quant_step),
            sig9(c.p_before),
            sig9(c.p_after),
            c.p_estimate
        );
    }
    Ok(Outcome::Success)
}

fn verify(ctx: &Ctx, a: &VerifyArgs) -> Result<Outcome, Error> {
    let mut cfg = SuiteConfig::new(a.trials, a.shape.0.clone(), a.concentration, ctx.seed);
    cfg.inject_fault = a.inject_fault;
    let mut report = run_suite(&cfg)?;
    if a.pixel_grid {
        report = report.merge(check_pixel_grid(&default_p_grid(), &default_q_list(), 256)?);
    }
    print!("{}", report.render_text());
    println!(
        "trials {} | max identity residual {:.3e} | min inequality margin {:+.3e}",
        report.trial_count,
        report.max_identity_residual(),
        report.min_inequality_margin()
    );
    if let Some(path) = ctx.path("verify.csv") {
        write_theorem_csv(&path, &report, Some(&ctx.provenance))?;
        println!("wrote {}", path.display());
    }
    if report.all_pass() {
        println!("verification passed");
        Ok(Outcome::Success)
    } else {
        println!(
            "verification FAILED; replay with --seed {} --trials {} --shape {}",
            ctx.seed,
            a.trials,
            a.shape.0.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("x")
        );
        Ok(Outcome::VerificationFailed)
    }
}

fn bd_matrix(curves: &[&RdCurve], peak: f64) -> String {
    let quality: Vec<Option<QualityCurve>> = curves
        .iter()
        .map(|c| QualityCurve::from_rd_curve(c, peak, BD_MIN_RATE, BD_MAX_PSNR).ok())
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:>14}", "ref \\ test");
    for c in curves {
        let _ = write!(out, " {:>14}", c.label);
    }
    out.push('\n');
    for (i, r) in curves.iter().enumerate() {
        let _ = write!(out, "{:>14}", r.label);
        for j in 0..curves.len() {
            let cell = match (&quality[i], &quality[j]) {
                (Some(a), Some(b)) => bd_rate(a, b)
                    .map(format_percent)
                    .unwrap_or_else(|_| "undefined".into()),
                _ => "undefined".into(),
            };
            let _ = write!(out, " {cell:>14}");
        }
        out.push('\n');
    }
    out
}

fn rd(ctx: &Ctx, a: &RdArgs) -> Result<Outcome, Error> {
    if a.m > RD_MAX_ALPHABET && !a.force {
        return Err(Error::InvalidParameter(format!(
            "M={} exceeds {RD_MAX_ALPHABET}; pass --force to run anyway",
            a.m
        )));
    }
    let params = PixelModelParams::new(a.m, a.p, a.q)?;
    let slopes = a.slopes.clone().map_or_else(default_slopes, |l| l.0);
    let config = BaConfig {
        max_iters: a.max_iters,
        tol: a.tol,
    };
    let curves = compare_paradigms(&params, &slopes, &config)?;
    let all = curves.all();
    for c in &all {
        let unconverged = c.points.iter().filter(|p| !p.converged).count();
        let gap = c.points.iter().map(|p| p.gap).fold(0.0, f64::max);
        println!(
            "{:<13} {:>3} envelope points, {} not converged, max duality gap {:.2e} bit",
            c.label,
            c.points.len(),
            unconverged,
            gap
        );
    }
    let pairs = [
        (&curves.conditional_residual, &curves.conditional),
        (&curves.conditional_residual, &curves.residual),
        (&curves.conditional_ideal, &curves.residual),
        (&curves.conditional_ideal, &curves.conditional),
    ];
    for (lower, upper) in pairs {
        if let Some(e) = lower.max_excess_over(upper) {
            println!("max {} - {} at matched distortion: {:+.3e} bit", lower.label, upper.label, e);
        }
    }
    println!("BD-rate ({BD_METHOD}, PSNR peak {}):", a.m - 1);
    print!("{}", bd_matrix(&all, (a.m - 1) as f64));
    if let Some(path) = ctx.path("rd.csv") {
        write_rd_csv(&path, &all, Some(&ctx.provenance))?;
        println!("wrote {}", path.display());
    }
    Ok(Outcome::Success)
}

fn codec(ctx: &Ctx, a: &CodecArgs) -> Result<Outcome, Error> {
    if a.n == 0 {
        return Err(Error::InvalidParameter("--n must be at least 1".into()));
    }
    let params = PixelModelParams::new(a.m, a.p, a.q)?;
    let model = ProbabilityModel::from_pixel_model(&params, a.paradigm)?;
    let seq = sample_pixels(&params, a.n, ctx.seed)?;
    let bs = encode(&seq, a.paradigm, &model)?;
    let bytes = bs.to_bytes();
    if let Some(path) = ctx.path(&format!("{}.crlb", a.paradigm)) {
        write_file(&path, &bytes)?;
        println!("wrote {} ({} bytes)", path.display(), bytes.len());
    }
    let rate = measure_rate(&bs, a.n as u64)?;
    let bound = target_entropy(&entropy_report(&params)?, a.paradigm);
    println!(
        "paradigm {} | M {} | p {} | Q {} | n {}",
        a.paradigm,
        a.m,
        sig9(a.p),
        format_quant_step(&a.q),
        a.n
    );
    println!("rate {rate:.6} bit/symbol | entropy bound {bound:.6} bit/symbol | excess {:+.6}", rate - bound);
    let preds: Vec<u32> = seq.iter().map(|&(_, x_p)| x_p).collect();
    let decoded = Bitstream::from_bytes(&bytes).and_then(|b| decode(&b, &preds, &model));
    match decoded {
        Ok(xs) if xs.iter().zip(&seq).all(|(x, (y, _))| x == y) && xs.len() == seq.len() => {
            println!("round trip: exact");
            Ok(Outcome::Success)
        }
        Ok(_) => {
            println!("round trip: MISMATCH");
            Ok(Outcome::IntegrityFailed)
        }
        Err(e) => {
            println!("round trip: FAILED ({e})");
            Ok(Outcome::IntegrityFailed)
        }
    }
}

fn bd(ctx: &Ctx, a: &BdArgs) -> Result<Outcome, Error> {
    let curves = read_rd_csv(&a.csv)?;
    let reference = curves
        .iter()
        .find(|c| c.label == a.reference)
        .ok_or_else(|| Error::InvalidParameter(format!("no curve labelled `{}`", a.reference)))?;
    let reference_q = QualityCurve::from_rd_curve(reference, a.peak, BD_MIN_RATE, BD_MAX_PSNR)?;
    println!("method: {BD_METHOD}, PSNR peak {}", sig9(a.peak));
    let mut lines = format!("# method: {BD_METHOD}\nreference,test,bd_rate_percent\n");
    for c in &curves {
        let value = QualityCurve::from_rd_curve(c, a.peak, BD_MIN_RATE, BD_MAX_PSNR).and_then(|q| bd_rate(&reference_q, &q));
        match value {
            Ok(v) => {
                println!("{} vs {}: {}", c.label, a.reference, format_percent(v));
                let _ = writeln!(lines, "{},{},{v:.4}", a.reference, c.label);
            }
            Err(e) => {
                println!("{} vs {}: undefined ({e})", c.label, a.reference);
                let _ = writeln!(lines, "{},{},nan", a.reference, c.label);
            }
        }
    }
    if let Some(path) = ctx.path("bd.csv") {
        write_file(&path, format!("# {}\n{lines}", ctx.provenance).as_bytes())?;
        println!("wrote {}", path.display());
    }
    Ok(Outcome::Success)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, bytes).map_err(io)
}
