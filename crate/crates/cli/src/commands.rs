use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsde_core::convergence::{
    doubling_cutoffs, generator_study, semigroup_study, truncation_study, ConvergenceReport, StudyConfig,
    DEFAULT_K_SCHEDULE,
};
use qsde_core::elimination::eliminate_with_cond_limit;
use qsde_core::model::{assemble, QsdeCoefficients};
use qsde_core::operator::{C64, DEFAULT_COND_LIMIT, DEFAULT_TOL};
use qsde_core::semigroup::{evolve_on_grid, generator, dissipativity_check, time_grid, FieldAmplitudes};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::model_file::{self, LoadedModel, StudyDefaults, SHIPPED};
use crate::output::{
    amplitudes_text, float_text, matrix_doc, summary_line, validation_text, write_json, write_report_csv,
    LimitDocument, MatrixDoc,
};

/// Default coherent amplitude on every channel when neither flags nor the
/// model file give one.
pub const DEFAULT_AMPLITUDE: f64 = 0.5;

/// Default cutoff increase for the adequacy re-run.
pub const DEFAULT_BUMP: usize = 2;

#[derive(Debug, Parser)]
#[command(name = "qsde", version, about = "Adiabatic elimination and convergence studies for QSDE models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct AmplitudeArgs {
    /// Annihilation-side amplitudes, one per channel or one for all (e.g. 0.5-0.1i).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_complex)]
    pub alpha: Option<Vec<C64>>,
    /// Creation-side amplitudes, one per channel or one for all.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_complex)]
    pub beta: Option<Vec<C64>>,
}

#[derive(Debug, Args)]
pub struct TimeArgs {
    /// Time horizon.
    #[arg(long = "T")]
    pub t_max: Option<f64>,
    /// Number of uniform grid points on [0, T].
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Generator,
    Semigroup,
    Truncation,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the scaled Hudson–Parthasarathy relations and the structural conditions.
    Validate {
        model: String,
        #[arg(long)]
        tol: Option<f64>,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compute the limit coefficients and the compression isometry.
    Eliminate {
        model: String,
        #[arg(long)]
        tol: Option<f64>,
        /// Output file (standard output if absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate the limit semigroup (or the prelimit one at a given k).
    Semigroup {
        model: String,
        #[command(flatten)]
        amp: AmplitudeArgs,
        #[command(flatten)]
        time: TimeArgs,
        /// Use the prelimit generator at this k instead of the limit.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run one convergence study and fit its rate.
    Converge {
        model: String,
        #[arg(long, value_enum, default_value = "generator")]
        kind: KindArg,
        /// Scaling schedule, comma separated.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<f64>>,
        #[command(flatten)]
        time: TimeArgs,
        #[command(flatten)]
        amp: AmplitudeArgs,
        #[arg(long)]
        tol: Option<f64>,
        /// Truncation cutoffs, comma separated and increasing.
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<usize>>,
        /// Number of low states the truncation gap is measured on.
        #[arg(long)]
        probe: Option<usize>,
        /// Cutoff increase for the adequacy re-run; 0 disables it.
        #[arg(long, default_value_t = DEFAULT_BUMP)]
        bump: usize,
        /// Skip the doubled-grid adequacy re-run.
        #[arg(long)]
        no_grid_check: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print a shipped model file, or list them.
    Example { name: Option<String> },
}

fn parse_complex(s: &str) -> Result<C64, String> {
    s.trim().parse::<C64>().map_err(|_| format!("'{s}' is not a complex number"))
}

/// Runs a parsed command and returns its exit code.
pub fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Validate { model, tol, report } => validate(&model, tol, report),
        Command::Eliminate { model, tol, out } => cmd_eliminate(&model, tol, out),
        Command::Semigroup { model, amp, time, k, tol, csv, report } => {
            cmd_semigroup(&model, &amp, &time, k, tol, csv, report)
        }
        Command::Converge { model, kind, k, time, amp, tol, cutoffs, probe, bump, no_grid_check, csv, report } => {
            let m = model_file::load(&model)?;
            let cfg = study_config(&m, k, &time, &amp, tol, kind != KindArg::Generator && !no_grid_check)?;
            require_valid(&m, cfg.tol)?;
            let rep = converge(&m, kind, &cfg, cutoffs, probe, bump)?;
            match &csv {
                Some(p) => write_report_csv(&rep, std::fs::File::create(p)?)?,
                None => write_report_csv(&rep, std::io::stdout().lock())?,
            }
            if let Some(p) = &report {
                write_json(&rep, Some(p))?;
            }
            eprintln!("{}", summary_line(&rep));
            Ok(if rep.verdict.passed() { 0 } else { 1 })
        }
        Command::Example { name } => example(name.as_deref()),
    }
}

fn resolve_tol(flag: Option<f64>, defaults: &StudyDefaults) -> CliResult<f64> {
    let tol = flag.or(defaults.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::usage(format!("tolerance {tol} must be positive")));
    }
    Ok(tol)
}

fn require_valid(m: &LoadedModel, tol: f64) -> CliResult<()> {
    let rep = m.fixture.validate(tol, DEFAULT_COND_LIMIT);
    if rep.overall {
        Ok(())
    } else {
        Err(CliError::Domain {
            message: format!("{} fails validation: {}", m.fixture.name, rep.failing_names().join(", ")),
            report: Some(Box::new(rep)),
        })
    }
}

fn validate(path: &str, tol: Option<f64>, report: Option<PathBuf>) -> CliResult<i32> {
    let m = model_file::load(path)?;
    let tol = resolve_tol(tol, &m.study)?;
    let rep = m.fixture.validate(tol, DEFAULT_COND_LIMIT);
    print!("{}", validation_text(&m.fixture.name, &rep));
    if let Some(p) = &report {
        write_json(&rep, Some(p))?;
    }
    Ok(if rep.overall { 0 } else { 1 })
}

fn cmd_eliminate(path: &str, tol: Option<f64>, out: Option<PathBuf>) -> CliResult<i32> {
    let m = model_file::load(path)?;
    let tol = resolve_tol(tol, &m.study)?;
    require_valid(&m, tol)?;
    let res = eliminate_with_cond_limit(&m.fixture.family, &m.fixture.sub, tol, DEFAULT_COND_LIMIT)?;
    write_json(&LimitDocument::new(&m.fixture.name, &res), out.as_deref())?;
    Ok(0)
}

fn amplitudes(
    flags: &AmplitudeArgs,
    defaults: &StudyDefaults,
    channels: usize,
) -> CliResult<FieldAmplitudes> {
    let pick = |flag: &Option<Vec<C64>>, file: &Option<Vec<C64>>, what: &str| -> CliResult<Vec<C64>> {
        let v = flag.clone().or_else(|| file.clone()).unwrap_or_else(|| vec![C64::new(DEFAULT_AMPLITUDE, 0.0)]);
        match v.len() {
            1 => Ok(vec![v[0]; channels]),
            n if n == channels => Ok(v),
            n => Err(CliError::usage(format!("{what} gives {n} amplitudes for {channels} channels"))),
        }
    };
    let alpha = pick(&flags.alpha, &defaults.alpha, "--alpha")?;
    let beta = pick(&flags.beta, &defaults.beta, "--beta")?;
    Ok(FieldAmplitudes::new(alpha, beta)?)
}

/// The study configuration a `converge` invocation runs with.
pub fn study_config(
    m: &LoadedModel,
    k: Option<Vec<f64>>,
    time: &TimeArgs,
    amp: &AmplitudeArgs,
    tol: Option<f64>,
    check_grid: bool,
) -> CliResult<StudyConfig> {
    let d = &m.study;
    let mut cfg = StudyConfig::new(amplitudes(amp, d, m.fixture.family.channels())?);
    cfg.k_schedule = k.or_else(|| d.k.clone()).unwrap_or_else(|| DEFAULT_K_SCHEDULE.to_vec());
    cfg.t_max = time.t_max.or(d.t_max).unwrap_or(cfg.t_max);
    cfg.grid_points = time.grid.or(d.grid).unwrap_or(cfg.grid_points);
    cfg.tol = resolve_tol(tol, d)?;
    cfg.check_grid = check_grid;
    if !(cfg.t_max > 0.0 && cfg.t_max.is_finite()) {
        return Err(CliError::usage(format!("--T {} must be positive", cfg.t_max)));
    }
    if cfg.grid_points < 2 {
        return Err(CliError::usage("--grid needs at least 2 points"));
    }
    Ok(cfg)
}

/// Runs the requested study exactly as a library caller would.
pub fn converge(
    m: &LoadedModel,
    kind: KindArg,
    cfg: &StudyConfig,
    cutoffs: Option<Vec<usize>>,
    probe: Option<usize>,
    bump: usize,
) -> CliResult<ConvergenceReport> {
    let bumped = match (m.fixture.cutoff, bump) {
        (Some(c), b) if b > 0 && kind != KindArg::Truncation => Some(m.with_cutoff(c + b)?.fixture),
        _ => None,
    };
    Ok(match kind {
        KindArg::Generator => generator_study(&m.fixture, cfg, bumped.as_ref())?,
        KindArg::Semigroup => semigroup_study(&m.fixture, cfg, bumped.as_ref())?,
        KindArg::Truncation => {
            let limit = eliminate_with_cond_limit(&m.fixture.family, &m.fixture.sub, cfg.tol, cfg.cond_limit)?.limit;
            let cutoffs = cutoffs.or_else(|| m.study.cutoffs.clone()).unwrap_or_else(|| doubling_cutoffs(&limit, 3));
            let smallest = *cutoffs.first().ok_or_else(|| CliError::usage("no truncation cutoffs"))?;
            let probe = probe.or(m.study.probe).unwrap_or(2.min(smallest + 1));
            truncation_study(&m.fixture.name, &limit, &cutoffs, cfg, probe)?
        }
    })
}

#[derive(Serialize)]
struct SemigroupDocument {
    fixture: String,
    generator: String,
    t_max: f64,
    grid_points: usize,
    alpha: Vec<C64>,
    beta: Vec<C64>,
    dissipativity: f64,
    times: Vec<f64>,
    norms: Vec<f64>,
    propagator: MatrixDoc,
}

fn cmd_semigroup(
    path: &str,
    amp: &AmplitudeArgs,
    time: &TimeArgs,
    k: Option<f64>,
    tol: Option<f64>,
    csv_path: Option<PathBuf>,
    report: Option<PathBuf>,
) -> CliResult<i32> {
    let m = model_file::load(path)?;
    let tol = resolve_tol(tol, &m.study)?;
    let amps = amplitudes(amp, &m.study, m.fixture.family.channels())?;
    let t_max = time.t_max.or(m.study.t_max).unwrap_or(2.0);
    let grid = time.grid.or(m.study.grid).unwrap_or(64);
    let (label, coeffs): (String, QsdeCoefficients) = match k {
        Some(k) => (float_text(k), assemble(&m.fixture.family, k)?),
        None => {
            require_valid(&m, tol)?;
            let res = eliminate_with_cond_limit(&m.fixture.family, &m.fixture.sub, tol, DEFAULT_COND_LIMIT)?;
            ("limit".to_string(), res.limit)
        }
    };
    let gen = generator(&coeffs, &amps)?;
    let times = time_grid(t_max, grid)?;
    let props = evolve_on_grid(&gen, &times)?;
    let norms: Vec<f64> = props.iter().map(|p| p.spectral_norm()).collect();
    let diss = dissipativity_check(&coeffs, &amps)?;

    let alpha = amplitudes_text(amps.alpha());
    let beta = amplitudes_text(amps.beta());
    let sink: Box<dyn Write> = match &csv_path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| CliError::usage(e.to_string());
    w.write_record(["fixture", "generator", "t", "alpha", "beta", "norm"]).map_err(io)?;
    for (t, n) in times.iter().zip(&norms) {
        w.write_record([m.fixture.name.as_str(), &label, &float_text(*t), &alpha, &beta, &float_text(*n)])
            .map_err(io)?;
    }
    w.flush()?;

    if let Some(p) = &report {
        let doc = SemigroupDocument {
            fixture: m.fixture.name.clone(),
            generator: label.clone(),
            t_max,
            grid_points: grid,
            alpha: amps.alpha().to_vec(),
            beta: amps.beta().to_vec(),
            dissipativity: diss,
            times: times.clone(),
            norms: norms.clone(),
            propagator: matrix_doc(props.last().map(|p| p.matrix()).unwrap_or(gen.matrix())),
        };
        write_json(&doc, Some(p))?;
    }
    let contractive = diss <= tol * gen.spectral_norm().max(1.0);
    eprintln!(
        "{} {label}: dissipativity={diss:.3e} max_norm={:.6} {}",
        m.fixture.name,
        norms.iter().copied().fold(0.0, f64::max),
        if contractive { "contractive" } else { "NOT contractive" }
    );
    Ok(if contractive { 0 } else { 1 })
}

fn example(name: Option<&str>) -> CliResult<i32> {
    match name {
        None => {
            for (n, _) in SHIPPED {
                println!("{n}");
            }
            Ok(0)
        }
        Some(n) => {
            let (_, text) = SHIPPED.iter().find(|(s, _)| *s == n).ok_or_else(|| {
                let names: Vec<&str> = SHIPPED.iter().map(|(s, _)| *s).collect();
                CliError::usage(format!("no shipped model '{n}'; available: {}", names.join(", ")))
            })?;
            print!("{text}");
            Ok(0)
        }
    }
}
