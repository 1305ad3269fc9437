//! Command-line front end: one subcommand per suite.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hatano_nelson::error::Error;
use hatano_nelson::runner::{self, AcceptanceReport, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "hnlab", version, about = "Experiments on the non-Hermitian Anderson model H_N(g)")]
#[command(after_help = "The default output directory is $HNLAB_OUT_DIR, else ./hnlab-out. \
Every run writes manifest.json with the SHA-256 of each file.")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Dense complex spectrum of H_N(g) with reality classification
    #[command(after_help = "spectrum.csv: k,re,im,is_real,residual\npotential.csv: v")]
    Spectrum(Common),
    /// Eigenvalue trajectories lambda_j(g) on 0 <= g <= g_max
    #[command(after_help = "flow.csv: j,g,re,im,is_real")]
    Flow(Common),
    /// Bands and gaps of the periodic transfer matrix, and tr Phi_N(E) on the energy grid
    #[command(after_help = "bands.csv: kind,index,left,right\nchar_trace.csv: E,f_scaled,sigma (sign of tr Phi_N - 2cosh(Ng), scaled by e^-sigma)")]
    Bands(Common),
    /// Lyapunov exponent by Monte Carlo and by the Thouless formula
    #[command(after_help = "lyapunov.csv: E,gamma,stderr,thouless,ids,density")]
    Lyapunov(Common),
    /// gamma(z) on a complex grid and its level curve gamma = g
    #[command(after_help = "field.csv: re,im,gamma,stderr\ncurve.csv: curve,re,im")]
    Curve(Common),
    /// Reality below the Lyapunov threshold over an ensemble, gap capture and the decay fit
    #[command(after_help = "theorem_checks.csv: stream,label,lambda0,threshold,checked,g_reached,max_deviation,all_real\n\
theorem_violations.csv: stream,label,g,re,im,threshold,margin\nprofile.csv: E,gamma,stderr")]
    Theorem(Common),
    /// Kolmogorov-Smirnov test of rescaled spacings against Exp(1) at g = 0 and g = gamma/2
    #[command(name = "stats-poisson", after_help = "spacings.csv: g,spacing")]
    StatsPoisson(Common),
    /// Probability that (1/N) log||Phi_N|| misses gamma by epsilon, over N
    #[command(name = "stats-ldp", after_help = "ldp.csv: n,exceed,n_reps,p_hat")]
    StatsLdp(Common),
    /// Distribution of rho(Phi_N)/||Phi_N||
    #[command(name = "stats-radius", after_help = "cdf.csv: delta,cdf\nsamples.csv: log_ratio")]
    StatsRadius(Common),
    /// Spectral radius in gaps, minimal spacing exponent and Hoelder fit of gamma
    #[command(
        name = "stats-gaps",
        after_help = "gap_radius.csv: stream,gap,left,right,max_rate,bound,left_window_rate,right_window_rate,passed,edge_passed\n\
min_spacing.csv: n,seed,min_gap,duplicates\nprofile.csv: E,gamma,stderr"
    )]
    StatsGaps(Common),
    /// Convergence of the right singular factor V_N
    #[command(name = "stats-vconv", after_help = "vconv.csv: n,mean,stderr")]
    StatsVconv(Common),
    /// Complex spectrum with the curve gamma = g overlaid, as SVG
    #[command(after_help = "figure1_spectrum.csv: re,im,is_real\nfigure1_curve.csv: curve,re,im")]
    Figure1(Common),
    /// Real eigenvalue trajectories in the (lambda, g) plane with the gamma envelope, as SVG
    #[command(after_help = "figure2_trajectories.csv: j,g,lambda\nfigure2_envelope.csv: E,gamma,stderr")]
    Figure2(Common),
    /// Runs every acceptance criterion; exits nonzero if any fails
    #[command(name = "verify-all", after_help = "summary.json and criterion_XX.json; set scale=\"quick\" for a smoke run")]
    VerifyAll(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags override its values
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (default $HNLAB_OUT_DIR, else ./hnlab-out)
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    n_seeds: Option<usize>,
    #[arg(long)]
    n_reps: Option<usize>,
    /// Any config key, dotted for nested tables (e.g. thresholds.tau_re=1e-20)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the resolved config as TOML and exit
    #[arg(long)]
    print_config: bool,
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Spectrum(c) => (Command::Spectrum, c),
            Sub::Flow(c) => (Command::Flow, c),
            Sub::Bands(c) => (Command::Bands, c),
            Sub::Lyapunov(c) => (Command::Lyapunov, c),
            Sub::Curve(c) => (Command::Curve, c),
            Sub::Theorem(c) => (Command::Theorem, c),
            Sub::StatsPoisson(c) => (Command::StatsPoisson, c),
            Sub::StatsLdp(c) => (Command::StatsLdp, c),
            Sub::StatsRadius(c) => (Command::StatsRadius, c),
            Sub::StatsGaps(c) => (Command::StatsGaps, c),
            Sub::StatsVconv(c) => (Command::StatsVconv, c),
            Sub::Figure1(c) => (Command::Figure1, c),
            Sub::Figure2(c) => (Command::Figure2, c),
            Sub::VerifyAll(c) => (Command::VerifyAll, c),
        }
    }
}

fn resolve(command: Command, common: &Common) -> Result<ExperimentConfig, Error> {
    let file = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| Error::Config { key: "<file>".into(), message: e.message().to_string() })?
        }
        None => toml::Table::new(),
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut flag = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            overrides.push((key.into(), v));
        }
    };
    flag("seed", common.seed.map(|v| v.to_string()));
    flag("n", common.n.map(|v| v.to_string()));
    flag("g", common.g.map(|v| format!("{v:?}")));
    flag("epsilon", common.epsilon.map(|v| format!("{v:?}")));
    flag("n_seeds", common.n_seeds.map(|v| v.to_string()));
    flag("n_reps", common.n_reps.map(|v| v.to_string()));
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config { key: kv.clone(), message: "expected KEY=VALUE".into() })?;
        overrides.push((k.trim().into(), v.trim().into()));
    }
    let mut cfg = ExperimentConfig::build(Some(command), file, &overrides)?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let (command, common) = Cli::parse().command.split();
    let cfg = match resolve(command, &common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hnlab: {e}");
            return ExitCode::from(2);
        }
    };
    if common.print_config {
        return match cfg.to_toml() {
            Ok(t) => {
                print!("{t}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("hnlab: {e}");
                ExitCode::from(2)
            }
        };
    }
    let manifest = match runner::run(&cfg) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("hnlab {}: {e}", command.name());
            return ExitCode::from(if matches!(e, Error::Config { .. }) { 2 } else { 1 });
        }
    };
    let dir = cfg.resolved_out_dir();
    if command == Command::VerifyAll {
        let summary = std::fs::read(dir.join("summary.json"))
            .ok()
            .and_then(|b| serde_json::from_slice::<AcceptanceReport>(&b).ok());
        for c in summary.iter().flat_map(|s| &s.criteria) {
            println!("{}", c.line());
        }
    }
    for f in &manifest.files {
        println!("wrote {} ({} bytes)", dir.join(&f.path).display(), f.bytes);
    }
    match manifest.passed {
        Some(true) => println!("{}: PASS ({:.1} s)", command.name(), manifest.wall_clock_seconds),
        Some(false) => {
            println!("{}: FAIL ({:.1} s)", command.name(), manifest.wall_clock_seconds);
            return ExitCode::FAILURE;
        }
        None => println!("{}: done ({:.1} s)", command.name(), manifest.wall_clock_seconds),
    }
    ExitCode::SUCCESS
}
