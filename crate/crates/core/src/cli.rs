//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::bands::{solve_lowest_band, tunneling_from_band, tunneling_from_integral, wannier_for};
use crate::config::{solve_point, RunConfig};
use crate::error::{Error, Result};
use crate::model::{ground_state_with, onsite_aa, HubbardProblem};
use crate::observables::{ipr, lyapunov_fit};
use crate::sweep::{export_csv, run_sweep_with, SweepResult};

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e7)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e7).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Depth below which the single-band tight-binding reduction is not trusted.
const SHALLOW_DEPTH: f64 = 5.0;

#[derive(Parser, Debug)]
#[command(name = "cavloc", version, about = "Localization in a lattice with a cavity potential")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tunneling and correction constants of the lowest band.
    Wannier(Common),
    /// Single ground-state solve.
    GroundState(Common),
    /// Every sweep listed in the config.
    Sweep(Common),
    /// Aubry-Andre scan and Thouless comparison.
    BaselineAa(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
}

enum Failure {
    Config(Error),
    Runtime(Error),
    Partial(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::Json(_) => Failure::Config(e),
            other => Failure::Runtime(other),
        }
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: invalid configuration: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Partial(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cmd: &Command) -> std::result::Result<(), Failure> {
    let common = match cmd {
        Command::Wannier(c) | Command::GroundState(c) | Command::Sweep(c) | Command::BaselineAa(c) => c,
    };
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Io { .. } => Failure::Runtime(e),
            other => Failure::Config(other),
        })?,
        None => RunConfig::default(),
    };
    if common.workers == Some(0) {
        return Err(Failure::Config(Error::InvalidParameter {
            field: "workers",
            reason: "must be at least 1".into(),
        }));
    }
    std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    match cmd {
        Command::Wannier(_) => cmd_wannier(&cfg, &common.out)?,
        Command::GroundState(_) => cmd_ground_state(&cfg, &common.out)?,
        Command::Sweep(_) => cmd_sweep(&cfg, &common.out, common.workers)?,
        Command::BaselineAa(_) => cmd_baseline(&cfg, &common.out, common.workers)?,
    }
    Ok(())
}

fn cmd_wannier(cfg: &RunConfig, out: &Path) -> Result<()> {
    let spec = &cfg.lattice;
    if spec.depth_w0.abs() < SHALLOW_DEPTH {
        eprintln!(
            "warning: |W0| = {} E_r is too shallow; the tight-binding regime is invalid",
            spec.depth_w0.abs()
        );
    }
    let band = solve_lowest_band(spec)?;
    let wb = wannier_for(spec)?;
    let t_band = tunneling_from_band(&band);
    let t_integral = tunneling_from_integral(&wb, spec)?;
    let c = wb.constants();
    let mut o = std::io::stdout().lock();
    let _ = writeln!(o, "W0={}", num(spec.depth_w0));
    let _ = writeln!(o, "t_band={}", num(t_band));
    let _ = writeln!(o, "t_integral={}", num(t_integral));
    let _ = writeln!(o, "t_relative_difference={}", num((t_band - t_integral).abs() / t_band.abs()));
    let _ = writeln!(o, "bandwidth_over_4={}", num(band.bandwidth() / 4.0));
    let _ = writeln!(o, "A={}", num(c.a));
    let _ = writeln!(o, "B={}", num(c.b));
    let _ = writeln!(o, "alpha={}", num(c.alpha));
    let _ = writeln!(o, "norm_defect={}", num((wb.overlap(0) - 1.0).abs()));
    let _ = writeln!(o, "nearest_neighbour_overlap={}", num(wb.overlap(1)));
    let _ = writeln!(o, "symmetry_defect={}", num(wb.symmetry_defect()));
    let _ = writeln!(o, "edge_decay={}", num(wb.edge_decay()));
    let _ = writeln!(
        o,
        "planewave_cutoff_M={} quasimomentum_samples_Nq={} window_sites={} points_per_site={}",
        spec.planewave_cutoff_m, spec.quasimomentum_samples, spec.window_sites, spec.points_per_site
    );
    let path = out.join("wannier.csv");
    wb.write_csv(&path)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_ground_state(cfg: &RunConfig, out: &Path) -> Result<()> {
    let sol = solve_point(cfg)?;
    let csv_path = out.join("ground_state.csv");
    let csv_err = |source| Error::Csv {
        path: csv_path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    w.write_record(["n", "psi_n", "psi_n_sq"]).map_err(csv_err)?;
    for (k, a) in sol.state.amplitudes.iter().enumerate() {
        w.write_record([
            (k + 1).to_string(),
            format!("{a:.16e}"),
            format!("{:.16e}", a * a),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let m = &sol.metrics;
    let doc = serde_json::json!({
        "E0": sol.state.energy,
        "ipr": m.ipr,
        "gamma": m.lyapunov_gamma,
        "gamma_err": m.gamma_err,
        "fit_r2": m.fit_r2,
        "nbar": sol.nbar,
        "method": sol.state.method.to_string(),
        "potential": sol.potential,
        "t": sol.basis.t(),
        "alpha": sol.basis.alpha(),
        "metrics": m,
        "effective_config": cfg.to_value(),
    });
    let json_path = out.join("ground_state.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&doc)?)
        .map_err(|e| Error::io(&json_path, e))?;
    println!("E0={}", num(sol.state.energy));
    println!("ipr={}", num(m.ipr));
    match m.lyapunov_gamma {
        Some(g) => println!("gamma={}", num(g)),
        None => println!("gamma=absent"),
    }
    if let Some(n) = sol.nbar {
        println!("nbar={}", num(n));
    }
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn progress_reporter(name: String) -> impl Fn(usize, usize) + Sync {
    move |done, total| {
        let step = (total / 20).max(1);
        if done % step == 0 || done == total {
            eprintln!("[{name}] {done}/{total}");
        }
    }
}

fn write_result(result: &mut SweepResult, cfg: &RunConfig, out: &Path, stem: &str) -> Result<PathBuf> {
    result.metadata.effective_config = Some(cfg.to_value());
    let path = out.join(format!("{stem}.csv"));
    export_csv(result, &path)?;
    eprintln!("wrote {}", path.display());
    Ok(path)
}

fn check_success(result: &SweepResult) -> std::result::Result<(), Failure> {
    let failed = result.failure_fraction();
    if failed > 0.01 {
        return Err(Failure::Partial(format!(
            "{:.1}% of grid points failed in sweep {}",
            100.0 * failed,
            result.metadata.name
        )));
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, out: &Path, workers: Option<usize>) -> std::result::Result<(), Failure> {
    if cfg.sweeps.is_empty() {
        return Err(Failure::Config(Error::InvalidParameter {
            field: "sweeps",
            reason: "config lists no sweeps".into(),
        }));
    }
    let mut partial = Ok(());
    for section in &cfg.sweeps {
        let spec = cfg.sweep_spec(section)?;
        let progress = progress_reporter(spec.name.clone());
        let mut result = run_sweep_with(&spec, workers, Some(&progress))?;
        write_result(&mut result, cfg, out, &spec.file_stem())?;
        if partial.is_ok() {
            partial = check_success(&result);
        }
    }
    partial
}

fn cmd_baseline(cfg: &RunConfig, out: &Path, workers: Option<usize>) -> std::result::Result<(), Failure> {
    let spec = cfg.baseline_spec();
    let progress = progress_reporter(spec.name.clone());
    let mut result = run_sweep_with(&spec, workers, Some(&progress))?;
    write_result(&mut result, cfg, out, &spec.file_stem())?;
    let t = result.metadata.lattice.first().map_or(f64::NAN, |c| c.t);
    if let Some(vc) = result.records.first().and_then(|r| r.vc) {
        println!("vc_over_t={}", num(vc / t));
        println!("vc_analytic_over_t=2");
        println!("vc_relative_error={}", num((vc / (2.0 * t) - 1.0).abs()));
    } else {
        println!("vc_over_t=unresolved");
    }
    for &ratio in &cfg.baseline.thouless_ratios {
        let v0 = ratio * 2.0 * t;
        let onsite = onsite_aa(v0, cfg.lattice.beta, cfg.sites)?;
        let gs = ground_state_with(&HubbardProblem::new(t, onsite)?, &cfg.solver)?;
        let m = lyapunov_fit(&gs, &cfg.fit);
        let reference = ratio.ln();
        match m.lyapunov_gamma {
            Some(g) => println!(
                "ratio={ratio} gamma={} thouless={} relative_error={} ipr={}",
                num(g),
                num(reference),
                num((g / reference - 1.0).abs()),
                num(ipr(&gs))
            ),
            None => println!("ratio={ratio} gamma=absent thouless={}", num(reference)),
        }
    }
    check_success(&result)
}
