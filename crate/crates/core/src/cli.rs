//! The `dpe` command line: pulse synthesis, evolution, scans, fits, influence
//! coefficient caching and convergence studies.
//!
//! Every command reads a [`RunConfig`], writes its outputs into
//! `paths.output_dir` together with a `manifest.json`, and prints a short
//! summary on stdout.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::dynamics::{default_grid, default_step, evolve_closed, evolve_lindblad, final_occupation, EvolveOptions};
use crate::error::{Error, ErrorClass, Result};
use crate::io::{comment_header, trajectory_csv, write_string};
use crate::pathint::{convergence_csv, convergence_scan, observed_order, propagate, window_study_pairs, ConvergenceRow};
use crate::phonon::{cached_eta_coefficients, write_spectral_density_csv, Bath, InfluenceCoefficients};
use crate::photonstats::{
    fit_delta_scan, fit_g2, fit_lifetime, fit_lorentzian, windowed_visibility, G2FitOptions, Histogram,
    HistogramKind,
};
use crate::pulse::DichromaticPulse;
use crate::scan::{area_contrast_map_resumable, cell_log_line, parse_cell_log, CellStatus, Engine};

pub const MANIFEST: &str = "manifest.json";

/// Largest change in final occupation tolerated once the memory depth
/// exceeds the bath memory.
pub const K_SATURATION_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "dpe", version, about = "Dichromatic pulse excitation of a two-level emitter")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// TOML run configuration. Defaults are used when omitted.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set pulse.area_pi=5`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory (overrides `paths.output_dir`).
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the sampled field and the sideband spectra of the configured pulse.
    Pulse(Common),
    /// Run one engine on the configured pulse and write the trajectory.
    Evolve(Common),
    /// Final occupation on the area × contrast grid; resumes interrupted runs.
    Scan(Common),
    /// Fit a histogram CSV and write the result as JSON.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Histogram CSV (overrides `fit.input`).
        #[arg(short, long)]
        input: Option<PathBuf>,
    },
    /// Compute and cache influence coefficients for the configured bath, dt and K.
    EtaCache(Common),
    /// Step-refinement and memory-depth studies of the path integral.
    Converge(Common),
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Resource => 4,
        ErrorClass::Io => 5,
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(dir) = &common.output_dir {
        overrides.push(format!("paths.output_dir={}", toml::Value::String(dir.display().to_string())));
    }
    RunConfig::load(common.config.as_deref(), &overrides)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_hash: String,
    physics_hash: String,
    config: &'a RunConfig,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    details: Value,
}

fn write_manifest(cfg: &RunConfig, command: &str, outputs: &[&str], details: Value) -> Result<PathBuf> {
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash(),
        physics_hash: cfg.physics_hash(),
        config: cfg,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        details,
    };
    let path = cfg.paths.output_dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&m).expect("manifest serialises");
    write_string(&path, &(text + "\n"))?;
    Ok(path)
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.paths.output_dir.join(name)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pulse(c) => cmd_pulse(&load(&c)?),
        Command::Evolve(c) => cmd_evolve(&load(&c)?),
        Command::Scan(c) => cmd_scan(&load(&c)?),
        Command::Fit { common, input } => {
            let mut cfg = load(&common)?;
            if input.is_some() {
                cfg.fit.input = input;
            }
            cmd_fit(&cfg)
        }
        Command::EtaCache(c) => cmd_eta_cache(&load(&c)?),
        Command::Converge(c) => cmd_converge(&load(&c)?),
    }
}

pub fn cmd_pulse(cfg: &RunConfig) -> Result<()> {
    let pulse = DichromaticPulse::new(cfg.pulse.spec())?;
    let spec = pulse.spec();
    let (a, b) = pulse.support();
    let spacing = default_step(&pulse).min(0.05);
    let n = ((b - a) / spacing).ceil() as usize;
    let meta = [
        ("units", "t in ps, field in rad/ps".to_string()),
        ("config_hash", cfg.hash()),
    ];
    let mut field = comment_header(&meta);
    field.push_str("t_ps,re_f,im_f\n");
    for i in 0..=n {
        let t = a + (b - a) * i as f64 / n as f64;
        let f = pulse.field(t);
        field.push_str(&format!("{t:.6},{:.10e},{:.10e}\n", f.re, f.im));
    }
    write_string(&out_path(cfg, "pulse_field.csv"), &field)?;

    // Sample finely enough to resolve both sidebands and long enough to
    // contain the untruncated envelope.
    let half_width = (b - a).max(200.0);
    let spectrum = pulse.spectrum(half_width, 1 << 16)?;
    let emax = spec.delta + spec.carrier_detuning.abs() + 3.0 * spec.w_red.max(spec.w_blue);
    let mut text = comment_header(&[
        ("units", "energy in meV relative to the transition, intensity in rad^2/(ps meV)".to_string()),
        ("config_hash", cfg.hash()),
    ]);
    text.push_str("energy_mev,red,blue,total\n");
    for ((e, r), bl) in spectrum.energies.iter().zip(&spectrum.red).zip(&spectrum.blue) {
        if e.abs() <= emax {
            text.push_str(&format!("{e:.6},{r:.10e},{bl:.10e},{:.10e}\n", r + bl));
        }
    }
    write_string(&out_path(cfg, "pulse_spectrum.csv"), &text)?;

    let (ir, ib) = pulse.intensities();
    let (sr, sb) = spectrum.integrated();
    let details = json!({
        "intensity_red": ir,
        "intensity_blue": ib,
        "contrast": crate::pulse::contrast(&pulse)?,
        "spectrum_intensity_red": sr,
        "spectrum_intensity_blue": sb,
        "spectrum_contrast": spectrum.contrast(),
        "support_ps": [a, b],
        "symmetric": pulse.is_symmetric(),
    });
    write_manifest(cfg, "pulse", &["pulse_field.csv", "pulse_spectrum.csv"], details.clone())?;
    println!("contrast = {:.6}", details["contrast"].as_f64().unwrap_or(f64::NAN));
    println!("spectrum_contrast = {:.6}", spectrum.contrast());
    println!("intensities = {ir:.6e} {ib:.6e}");
    Ok(())
}

fn coefficients(cfg: &RunConfig) -> Result<InfluenceCoefficients> {
    let bath = Bath::new(cfg.phonon)?;
    if bath.is_uncoupled() {
        return Ok(InfluenceCoefficients::zero(cfg.pathint.dt, cfg.pathint.memory_k));
    }
    cached_eta_coefficients(&bath, cfg.pathint.dt, cfg.pathint.memory_k, Some(&cfg.cache_dir()))
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<()> {
    let pulse = DichromaticPulse::new(cfg.pulse.spec())?;
    let options = EvolveOptions {
        initial: cfg.engine.initial,
        max_step: cfg.engine.max_step,
    };
    let mut details = json!({ "engine": cfg.engine.kind.name() });
    let traj = match cfg.engine.kind {
        Engine::Closed => evolve_closed(&pulse, &default_grid(&pulse, cfg.engine.output_spacing), &options)?,
        Engine::Lindblad => evolve_lindblad(
            &pulse,
            &cfg.dissipation.params(),
            &default_grid(&pulse, cfg.engine.output_spacing),
            &options,
        )?,
        Engine::PathIntegral => {
            let coeffs = coefficients(cfg)?;
            let (a, b) = pulse.support();
            let pcfg = cfg.pathint.config(a, b + cfg.pathint.tail, cfg.engine.initial);
            details["eta_hash"] = json!(coeffs.hash());
            details["dt_ps"] = json!(coeffs.dt);
            details["memory_k"] = json!(coeffs.memory_k);
            propagate(&pulse, &coeffs, &pcfg)?
        }
    };
    let fin = final_occupation(&traj)?;
    details["n_final"] = json!(fin.value);
    details["stationary"] = json!(fin.stationary);
    let meta = [
        ("engine", cfg.engine.kind.name().to_string()),
        ("config_hash", cfg.hash()),
        ("units", "t in ps; s = (Re rho_ge, Im rho_ge, (rho_ee - rho_gg)/2)".to_string()),
    ];
    write_string(&out_path(cfg, "trajectory.csv"), &trajectory_csv(&traj, &meta))?;
    write_manifest(cfg, "evolve", &["trajectory.csv"], details)?;
    println!("n_final = {:.9}", fin.value);
    Ok(())
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<()> {
    let scan = cfg.scan_config()?;
    let scan_hash = scan.hash();
    let dir = &cfg.paths.output_dir;
    let log_path = out_path(cfg, "cells.log");
    let manifest_path = out_path(cfg, MANIFEST);

    let mut done = Vec::new();
    if manifest_path.exists() && log_path.exists() {
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let previous: Option<String> = serde_json::from_str::<Value>(&text)
            .ok()
            .and_then(|v| v["details"]["scan_hash"].as_str().map(str::to_string));
        if previous.as_deref() == Some(scan_hash.as_str()) {
            let log = std::fs::read_to_string(&log_path).map_err(|e| Error::io(&log_path, e))?;
            done = parse_cell_log(&log)
                .into_iter()
                .filter(|c| c.status == CellStatus::Ok)
                .collect();
            log::info!("resuming scan: {} cells already done", done.len());
        } else {
            log::warn!("scan configuration changed; discarding previous progress in {}", dir.display());
            std::fs::remove_file(&log_path).map_err(|e| Error::io(&log_path, e))?;
        }
    } else if log_path.exists() {
        std::fs::remove_file(&log_path).map_err(|e| Error::io(&log_path, e))?;
    }

    let coeffs = match scan.engine {
        Engine::PathIntegral => Some(coefficients(cfg)?),
        _ => None,
    };
    let mut details = json!({
        "scan_hash": scan_hash,
        "engine": scan.engine.name(),
        "complete": false,
    });
    if let Some(c) = &coeffs {
        details["eta_hash"] = json!(c.hash());
    }
    // The manifest is written first so an interrupted run can be resumed.
    write_manifest(cfg, "scan", &["occupation_map.csv", "cells.log"], details.clone())?;

    let log_file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(|e| Error::io(&log_path, e))?;
    let log_file = Mutex::new(log_file);
    let on_cell = |cell: &crate::scan::Cell| {
        let mut f = log_file.lock().expect("log writer not poisoned");
        if let Err(e) = f.write_all(cell_log_line(cell).as_bytes()).and_then(|_| f.flush()) {
            log::error!("cannot append to {}: {e}", log_path.display());
        }
    };
    let map = area_contrast_map_resumable(&scan, coeffs.as_ref(), &done, &on_cell)?;
    let failed = map.status.iter().flatten().filter(|s| **s == CellStatus::Failed).count();
    write_string(&out_path(cfg, "occupation_map.csv"), &map.to_csv())?;
    details["complete"] = json!(true);
    details["failed_cells"] = json!(failed);
    details["resumed_cells"] = json!(done.len());
    write_manifest(cfg, "scan", &["occupation_map.csv", "cells.log"], details)?;
    println!(
        "cells = {} computed = {} failed = {failed}",
        map.areas.len() * map.contrasts.len(),
        map.areas.len() * map.contrasts.len() - done.len()
    );
    Ok(())
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let input = cfg
        .fit
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("fit needs an input histogram (fit.input or --input)".into()))?;
    let hist = Histogram::read(input)?;
    if let Some(kind) = cfg.fit.kind {
        if kind != hist.kind {
            return Err(Error::Config(format!(
                "{} holds a '{}' histogram but fit.kind is '{}'",
                input.display(),
                hist.kind.as_str(),
                kind.as_str()
            )));
        }
    }
    let result = match hist.kind {
        HistogramKind::G2 => fit_g2(&hist, cfg.fit.irf_fwhm, &G2FitOptions { fixed_t1: cfg.fit.fixed_t1 })?,
        HistogramKind::Lifetime => fit_lifetime(&hist, cfg.fit.irf_fwhm)?,
        HistogramKind::Spectrum => fit_lorentzian(&hist)?,
        HistogramKind::DeltaScan => fit_delta_scan(&hist)?,
    };
    let mut outputs = vec!["fit.json"];
    let mut doc = serde_json::to_value(&result).expect("fit result serialises");
    doc["kind"] = json!(hist.kind.as_str());
    doc["input"] = json!(input.display().to_string());
    write_string(
        &out_path(cfg, "fit.json"),
        &(serde_json::to_string_pretty(&doc).expect("json") + "\n"),
    )?;

    if let Some(perp) = &cfg.fit.g_perp {
        if cfg.fit.windows.is_empty() {
            return Err(Error::Config("fit.g_perp is set but fit.windows is empty".into()));
        }
        let perp = Histogram::read(perp)?;
        let curve = windowed_visibility(&hist, &perp, &cfg.fit.windows)?;
        let mut text = comment_header(&[("units", "window in ns".to_string())]);
        text.push_str("window_ns,visibility\n");
        for (w, v) in &curve {
            text.push_str(&format!("{w},{v:.9}\n"));
        }
        write_string(&out_path(cfg, "visibility.csv"), &text)?;
        outputs.push("visibility.csv");
    }
    write_manifest(cfg, "fit", &outputs, json!({ "kind": hist.kind.as_str() }))?;
    for (k, v) in &result.params {
        println!("{k} = {v:.6e} ± {:.2e}", result.uncertainties.get(k).copied().unwrap_or(f64::NAN));
    }
    for (k, v) in &result.derived {
        println!("{k} = {v:.6e}");
    }
    if result.ill_conditioned {
        println!("warning: parameters are poorly determined");
    }
    Ok(())
}

pub fn cmd_eta_cache(cfg: &RunConfig) -> Result<()> {
    let bath = Bath::new(cfg.phonon)?;
    let dir = cfg.cache_dir();
    let coeffs = cached_eta_coefficients(&bath, cfg.pathint.dt, cfg.pathint.memory_k, Some(&dir))?;
    let name = InfluenceCoefficients::cache_file_name(&cfg.phonon.hash(), cfg.pathint.dt, cfg.pathint.memory_k);
    let mut j = Vec::new();
    write_spectral_density_csv(&bath, 2001, &mut j)?;
    let j_path = out_path(cfg, "spectral_density.csv");
    crate::io::write_atomic(&j_path, &j)?;
    let details = json!({
        "cache_file": dir.join(&name).display().to_string(),
        "eta_hash": coeffs.hash(),
        "polaron_shift_mev": bath.polaron_shift()? * crate::units::HBAR,
    });
    write_manifest(cfg, "eta-cache", &["spectral_density.csv"], details)?;
    println!("cache = {}", dir.join(name).display());
    println!("eta_hash = {}", coeffs.hash());
    Ok(())
}

/// Outcome of the two convergence studies.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub step_rows: Vec<ConvergenceRow>,
    pub memory_rows: Vec<ConvergenceRow>,
    /// Order `p` of `n(dt) = n₀ + c dtᵖ` from the last three step rows.
    pub order: Option<f64>,
    /// Largest change between successive memory depths.
    pub k_saturation: f64,
}

impl ConvergenceReport {
    pub fn second_order(&self) -> bool {
        self.order.is_some_and(|p| (p - 2.0).abs() <= 0.5)
    }

    pub fn k_saturated(&self) -> bool {
        self.k_saturation < K_SATURATION_TOLERANCE
    }
}

/// Runs the step study at fixed memory window and the memory-depth study at
/// fixed step.
pub fn convergence_report(cfg: &RunConfig) -> Result<ConvergenceReport> {
    let pulse = DichromaticPulse::new(cfg.pulse.spec())?;
    let bath = Bath::new(cfg.phonon)?;
    let (a, b) = pulse.support();
    let base = cfg.pathint.config(a, b + cfg.pathint.tail, cfg.engine.initial);
    let mut ks = cfg.converge.k_list.clone();
    ks.sort_unstable();
    let step_rows = convergence_scan(&pulse, &bath, &window_study_pairs(&ks, cfg.converge.window), &base)?;
    let pairs: Vec<(f64, usize)> = cfg.converge.saturation_k.iter().map(|&k| (cfg.converge.saturation_dt, k)).collect();
    let memory_rows = convergence_scan(&pulse, &bath, &pairs, &base)?;
    let k_saturation = memory_rows
        .iter()
        .skip(1)
        .map(|r| r.delta_prev.abs())
        .fold(0.0, f64::max);
    Ok(ConvergenceReport {
        order: observed_order(&step_rows),
        step_rows,
        memory_rows,
        k_saturation,
    })
}

pub fn cmd_converge(cfg: &RunConfig) -> Result<()> {
    let report = convergence_report(cfg)?;
    let meta = [("config_hash", cfg.hash()), ("study", "step refinement at fixed memory window".to_string())];
    write_string(&out_path(cfg, "convergence_dt.csv"), &convergence_csv(&report.step_rows, &meta))?;
    let meta = [("config_hash", cfg.hash()), ("study", "memory depth at fixed step".to_string())];
    write_string(&out_path(cfg, "convergence_k.csv"), &convergence_csv(&report.memory_rows, &meta))?;
    let details = json!({
        "order": report.order,
        "second_order": report.second_order(),
        "k_saturation": report.k_saturation,
        "k_saturated": report.k_saturated(),
    });
    write_manifest(cfg, "converge", &["convergence_dt.csv", "convergence_k.csv"], details)?;
    match report.order {
        Some(p) => println!("order = {p:.3}"),
        None => println!("order = undetermined"),
    }
    println!("k_saturation = {:.3e}", report.k_saturation);
    Ok(())
}

/// Reads `manifest.json` from an output directory.
pub fn read_manifest(dir: &Path) -> Result<Value> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })
}
