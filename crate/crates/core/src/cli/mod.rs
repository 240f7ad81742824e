//! The `spinsqz` command line.
//!
//! Every subcommand reads one JSON config (`--config`) and writes a tidy
//! table to `--out` (stdout by default) as CSV or as a JSON array of records
//! carrying the same numbers. Frequencies are in Hz at this boundary.

pub mod config;

use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{
    dataset_rows, global_fit, read_dataset_csv, synthesize_dataset, FitProblem, FitResult,
    ParamKind,
};
use crate::model::{build_cesium_ensemble, LevelSpecFile, ModelFile};
use crate::optics::{collimating_negative_lens, solve_equivalent_setup, TophatDesign};
use crate::spectrum::{
    backaction_imprecision_product, homodyne_psd, min_over_angle, optimum_envelope, to_db,
    SpectrumRequest,
};
use config::{BipConfig, FitConfig, SimulateConfig, SweepConfig, SynthConfig, TophatConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// PSD traces at the configured angles.
    Simulate,
    /// Angle sweep with the numeric and closed-form squeezing envelopes.
    Sweep,
    /// Global fit of a dataset CSV.
    Fit,
    /// Seeded synthetic dataset.
    Synth,
    /// Backaction-imprecision product.
    Bip,
    /// Lens separations for the collimated tophat probe.
    DesignTophat,
    /// Mode model of a multilevel spin ensemble.
    Ensemble,
}

/// Parsed command line.
#[derive(Debug, Clone, Parser)]
#[command(
    name = "spinsqz",
    version,
    about = "Spectra, fits and optics for measured spin oscillators"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration of the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset CSV for `fit` (overrides the config's `data`).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Add a `psd_db` column to spectra.
    #[arg(long, global = true)]
    pub db: bool,
    /// Worker threads for the frequency loops (all cores by default).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let result = match cfg.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cfg)),
            Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
        },
        None => dispatch(cfg),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("spinsqz: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_CONFIG
            }
        }
    }
}

fn dispatch(cfg: &RunConfig) -> Result<i32> {
    match cfg.command {
        Command::Simulate => simulate(cfg),
        Command::Sweep => sweep(cfg),
        Command::Fit => fit(cfg),
        Command::Synth => synth(cfg),
        Command::Bip => bip(cfg),
        Command::DesignTophat => design_tophat(cfg),
        Command::Ensemble => ensemble(cfg),
    }
}

fn read_config<T: DeserializeOwned>(cfg: &RunConfig) -> Result<T> {
    let path = cfg
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn emit(cfg: &RunConfig, bytes: Vec<u8>) -> Result<()> {
    match &cfg.out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn write_table<T: Serialize>(cfg: &RunConfig, rows: &[T]) -> Result<()> {
    let bytes = match cfg.format {
        Format::Csv => csv_bytes(rows)?,
        Format::Json => json_bytes(rows)?,
    };
    emit(cfg, bytes)
}

#[derive(Debug, Serialize)]
struct PsdRow {
    freq_hz: f64,
    angle_rad: Option<f64>,
    psd_sn: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    psd_db: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SweepRow {
    series: &'static str,
    freq_hz: f64,
    angle_rad: Option<f64>,
    psd_sn: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    psd_db: Option<f64>,
}

fn simulate(cfg: &RunConfig) -> Result<i32> {
    let c: SimulateConfig = read_config(cfg)?;
    let model = c.model.to_model()?;
    let request = SpectrumRequest::new(c.grid.to_grid()?, c.angles_rad.clone())
        .with_method(c.method)
        .with_extraneous(c.include_extraneous);
    let traces = homodyne_psd(&model, &request)?;
    let rows: Vec<PsdRow> = traces
        .iter()
        .flat_map(|t| {
            t.grid.iter().zip(&t.values_sn).map(move |(w, v)| PsdRow {
                freq_hz: w / TAU,
                angle_rad: t.angle,
                psd_sn: *v,
                psd_db: cfg.db.then(|| to_db(*v)),
            })
        })
        .collect();
    write_table(cfg, &rows)?;
    Ok(EXIT_OK)
}

fn sweep(cfg: &RunConfig) -> Result<i32> {
    let c: SweepConfig = read_config(cfg)?;
    let model = c.model.to_model()?;
    let grid = c.grid.to_grid()?;
    let request =
        SpectrumRequest::new(grid.clone(), c.angles()?).with_extraneous(c.include_extraneous);
    let traces = homodyne_psd(&model, &request)?;
    let (numeric, best_angles) = min_over_angle(&model, &grid, c.include_extraneous)?;
    let closed = optimum_envelope(&model.effective_mode(), model.eta(), &grid);
    let row = |series, w: f64, angle, v: f64| SweepRow {
        series,
        freq_hz: w / TAU,
        angle_rad: angle,
        psd_sn: v,
        psd_db: cfg.db.then(|| to_db(v)),
    };
    let mut rows = Vec::new();
    for t in &traces {
        for (w, v) in t.grid.iter().zip(&t.values_sn) {
            rows.push(row("trace", *w, t.angle, *v));
        }
    }
    for ((w, v), a) in grid.iter().zip(&numeric.values_sn).zip(&best_angles) {
        rows.push(row("envelope_numeric", *w, Some(*a), *v));
    }
    for (w, v) in grid.iter().zip(&closed.values_sn) {
        rows.push(row("envelope_closed_form", *w, None, *v));
    }
    write_table(cfg, &rows)?;
    Ok(EXIT_OK)
}

fn synth(cfg: &RunConfig) -> Result<i32> {
    let c: SynthConfig = read_config(cfg)?;
    let model = c.model.to_model()?;
    let data = synthesize_dataset(&model, &c.angles_rad, &c.grid.to_grid()?, c.n_avg, cfg.seed)?;
    write_table(cfg, &dataset_rows(&data)?)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct ParamRow {
    name: String,
    unit: &'static str,
    value: f64,
    standard_error: Option<f64>,
    free: bool,
}

#[derive(Debug, Serialize)]
struct FitReport {
    converged: bool,
    termination: crate::fit::Termination,
    iterations: usize,
    cost: f64,
    initial_cost: f64,
    n_points: usize,
    n_free: usize,
    parameters: Vec<ParamRow>,
    angles_rad: Vec<f64>,
    per_trace_residuals: Vec<f64>,
    model: ModelFile,
}

fn param_rows(result: &FitResult) -> Vec<ParamRow> {
    result
        .parameters
        .iter()
        .map(|p| {
            let (unit, scale) = match p.kind {
                k if k.is_rate() => ("Hz", 1.0 / TAU),
                ParamKind::Angle | ParamKind::AngleOffset | ParamKind::AngleStep => ("rad", 1.0),
                ParamKind::ExtAmplitude => ("SN", 1.0),
                _ => ("1", 1.0),
            };
            ParamRow {
                name: p.name.clone(),
                unit,
                value: p.value * scale,
                standard_error: p.standard_error.map(|s| s * scale),
                free: p.free,
            }
        })
        .collect()
}

fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base.and_then(Path::parent) {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn fit(cfg: &RunConfig) -> Result<i32> {
    let c: FitConfig = read_config(cfg)?;
    let path = match (&cfg.input, &c.data) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => resolve(cfg.config.as_deref(), p),
        (None, None) => return Err(Error::Config("fit needs --input or a `data` path".into())),
    };
    let file = fs::File::open(&path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let data = read_dataset_csv(file)?;
    let mut problem = FitProblem::new(data, c.model.to_model()?)?
        .with_angle_mode(c.angle_mode)
        .with_response_correction(
            c.response_correction
                .as_ref()
                .map(|r| r.to_correction())
                .transpose()?,
        );
    if let Some(n) = c.max_iterations {
        problem = problem.with_max_iterations(n);
    }
    let f = &c.free;
    for (kind, free) in [
        (ParamKind::Omega, f.omega),
        (ParamKind::GammaMeas, f.gamma_meas),
        (ParamKind::Zeta, f.zeta),
        (ParamKind::Gamma0, f.gamma0),
        (ParamKind::Angle, f.angles),
        (ParamKind::AngleOffset, f.angles),
        (ParamKind::AngleStep, f.angles),
        (ParamKind::ExtAmplitude, f.extraneous),
        (ParamKind::ExtWidth, f.extraneous),
    ] {
        problem.set_free_kind(kind, free);
    }
    let result = global_fit(&problem)?;
    let params = param_rows(&result);
    let bytes = match cfg.format {
        Format::Csv => csv_bytes(&params)?,
        Format::Json => json_bytes(&FitReport {
            converged: result.converged,
            termination: result.termination,
            iterations: result.iterations,
            cost: result.cost,
            initial_cost: result.initial_cost,
            n_points: result.n_points,
            n_free: result.n_free,
            parameters: params,
            angles_rad: result.angles.clone(),
            per_trace_residuals: result.per_trace_residuals.clone(),
            model: ModelFile::from_model(&result.model),
        })?,
    };
    emit(cfg, bytes)?;
    if result.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "spinsqz: fit stopped after {} iterations without converging",
            result.iterations
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

#[derive(Debug, Serialize)]
struct BipRow {
    eta: f64,
    s_pp_ext_sn: f64,
    zeta: f64,
    c_q: Option<f64>,
    bip: f64,
}

fn bip(cfg: &RunConfig) -> Result<i32> {
    let c: BipConfig = read_config(cfg)?;
    let rows = c
        .cases()
        .iter()
        .map(|k| {
            Ok(BipRow {
                eta: k.eta,
                s_pp_ext_sn: k.s_pp_ext_sn,
                zeta: k.zeta,
                c_q: k.c_q,
                bip: backaction_imprecision_product(
                    k.eta,
                    k.s_pp_ext_sn,
                    k.zeta,
                    k.c_q.unwrap_or(f64::INFINITY),
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_table(cfg, &rows)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct DesignMm {
    w_in_mm: f64,
    fan_angle_rad: f64,
    f1_mm: f64,
    f2_mm: f64,
    big_f1_mm: f64,
    big_f2_mm: f64,
    l1_mm: f64,
    l2_mm: f64,
    l3_mm: f64,
    inverted: bool,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct RayRowMm {
    setup: &'static str,
    element: &'static str,
    z_mm: f64,
    height_mm: f64,
    slope_rad: f64,
}

#[derive(Debug, Serialize)]
struct TophatReport {
    design: DesignMm,
    rays: Vec<RayRowMm>,
}

fn design_tophat(cfg: &RunConfig) -> Result<i32> {
    let c: TophatConfig = read_config(cfg)?;
    let mm = 1e-3;
    let f2 = match c.f2_mm {
        Some(f2) => f2 * mm,
        None => collimating_negative_lens(c.w_in_mm * mm, c.fan_angle_rad, c.f1_mm * mm)?,
    };
    let d: TophatDesign = solve_equivalent_setup(
        c.w_in_mm * mm,
        c.fan_angle_rad,
        c.f1_mm * mm,
        f2,
        c.big_f1_mm * mm,
        c.big_f2_mm * mm,
        c.inverted,
    )?;
    let rays: Vec<RayRowMm> = d
        .ray_table()?
        .into_iter()
        .map(|r| RayRowMm {
            setup: r.setup,
            element: r.element,
            z_mm: r.z / mm,
            height_mm: r.height / mm,
            slope_rad: r.slope,
        })
        .collect();
    let bytes = match cfg.format {
        Format::Csv => csv_bytes(&rays)?,
        Format::Json => json_bytes(&TophatReport {
            design: DesignMm {
                w_in_mm: d.w_in / mm,
                fan_angle_rad: d.fan_angle,
                f1_mm: d.f1 / mm,
                f2_mm: d.f2 / mm,
                big_f1_mm: d.big_f1 / mm,
                big_f2_mm: d.big_f2 / mm,
                l1_mm: d.l1 / mm,
                l2_mm: d.l2 / mm,
                l3_mm: d.l3 / mm,
                inverted: d.inverted,
                residual: d.residual,
            },
            rays,
        })?,
    };
    emit(cfg, bytes)?;
    Ok(EXIT_OK)
}

fn ensemble(cfg: &RunConfig) -> Result<i32> {
    let c: LevelSpecFile = read_config(cfg)?;
    let model = build_cesium_ensemble(&c.to_spec())?.with_eta(c.eta)?;
    let file = ModelFile::from_model(&model);
    let bytes = match cfg.format {
        Format::Csv => csv_bytes(&file.modes)?,
        Format::Json => json_bytes(&file)?,
    };
    emit(cfg, bytes)?;
    Ok(EXIT_OK)
}
