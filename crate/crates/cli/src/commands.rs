//! One function per subcommand. Each writes its files under the output
//! directory and returns the exit code it ends with.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;

use semispec::classical::predicted_density;
use semispec::detector::{
    density_from_quantum, default_density_centers, detect_levels, fit_samples, invert, recover_hessian_spectrum,
    summary_table, sweep_samples, CriticalReport, DensitySample, FitOutcome, HessianFit, InvertParams,
    LevelVerdict,
};
use semispec::invariants::exponent_table_csv;
use semispec::quantum::{count_eigenvalues, liouville_volume, spectrum_for, GridInfo, Window};
use semispec::specdist::{e_scan, h_sweep};
use semispec::SeedGrid;

use crate::config::RunConfig;
use crate::output::{num, OutDir, Provenance};
use crate::plots::{script, Axes, Curve, Plot};
use crate::{CliError, EXIT_INCONCLUSIVE, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Scan,
    Sweep,
    Detect,
    Density,
    Invert,
    Tables,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Scan => "scan",
            Command::Sweep => "sweep",
            Command::Detect => "detect",
            Command::Density => "density",
            Command::Invert => "invert",
            Command::Tables => "tables",
        }
    }

    pub fn needs_config(&self) -> bool {
        *self != Command::Tables
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub files: Vec<PathBuf>,
    /// Lines for stderr: warnings and short summaries.
    pub messages: Vec<String>,
}

pub fn run(cmd: Command, cfg: Option<&RunConfig>, out: &Path) -> Result<Outcome, CliError> {
    let mut dir = OutDir::new(out)?;
    let mut messages = Vec::new();
    let code = match (cmd, cfg) {
        (Command::Tables, cfg) => tables(cfg, &mut dir)?,
        (_, None) => return Err(CliError::config("cli", format!("`{}` needs --config", cmd.name()))),
        (Command::Spectrum, Some(c)) => spectrum(c, &mut dir, &mut messages)?,
        (Command::Scan, Some(c)) => scan(c, &mut dir, &mut messages)?,
        (Command::Sweep, Some(c)) => sweep(c, &mut dir, &mut messages)?,
        (Command::Detect, Some(c)) => detect(c, &mut dir, &mut messages)?,
        (Command::Density, Some(c)) => density(c, &mut dir, &mut messages)?,
        (Command::Invert, Some(c)) => invert_levels(c, &mut dir, &mut messages)?,
    };
    Ok(Outcome { code, files: dir.written().to_vec(), messages })
}

fn plot(dir: &mut OutDir, data: &Path, name: &str, plot: &Plot) -> Result<(), CliError> {
    let s = script(data, plot)?;
    dir.text(name, &s)?;
    Ok(())
}

#[derive(Serialize)]
struct SpectrumData {
    h: f64,
    window: Window,
    eigenvalues: Vec<f64>,
    convergence: Vec<f64>,
    first_index: Option<usize>,
    in_window: usize,
    weyl_estimate: Option<f64>,
    grid: GridInfo,
}

fn spectrum(cfg: &RunConfig, dir: &mut OutDir, messages: &mut Vec<String>) -> Result<i32, CliError> {
    let pot = cfg.build_potential()?;
    let (e1, e2) = cfg.window()?;
    let h = cfg.spectrum.h.ok_or_else(|| CliError::config("cli", "`spectrum.h` is required"))?;
    let window = Window::new(e1, e2, cfg.eps()?)?;
    let spec = spectrum_for(&pot, h, &window, &cfg.solver)?;
    let in_window = count_eigenvalues(&spec, e1, e2)?;
    let weyl = liouville_volume(&pot, e1, e2).ok().map(|v| v.value / (2.0 * PI * h));
    messages.push(format!("{in_window} eigenvalues in [{e1}, {e2}] at h = {h}"));
    let prov = Provenance::new("spectrum", Some(cfg)).with_h_list(&[h]);
    let data = dir.csv("spectrum.csv", &prov, &spec.to_csv())?;
    dir.json(
        "spectrum.json",
        &prov,
        &SpectrumData {
            h,
            window,
            eigenvalues: spec.eigenvalues.clone(),
            convergence: spec.convergence.clone(),
            first_index: spec.indices.first().copied(),
            in_window,
            weyl_estimate: weyl,
            grid: spec.grid,
        },
    )?;
    let p = Plot {
        title: format!("eigenvalues at h = {h}"),
        xlabel: "j".into(),
        ylabel: "lambda_j".into(),
        axes: Axes::Linear,
        curves: vec![Curve::points(1, 2, "lambda")],
    };
    plot(dir, &data, "spectrum.gp", &p)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ScanData {
    h: f64,
    peaks: Vec<f64>,
    warnings: Vec<String>,
}

fn scan(cfg: &RunConfig, dir: &mut OutDir, messages: &mut Vec<String>) -> Result<i32, CliError> {
    let pot = cfg.build_potential()?;
    let tf = cfg.build_test_function()?;
    let energies = cfg.energy_grid(cfg.scan.points)?;
    let profile = e_scan(&pot, cfg.scan.h, &tf, &energies, &cfg.sweep_params())?;
    messages.extend(profile.warnings.iter().map(|w| format!("warning: {w}")));
    let peaks = profile.peak_energies();
    messages.push(format!("{} peaks: {:?}", peaks.len(), peaks));
    let prov = Provenance::new("scan", Some(cfg))
        .with_test_function(tf.describe())
        .with_h_list(&[cfg.scan.h])
        .with_tail_bounds(profile.tail_bounds.iter().copied());
    let data = dir.csv("scan.csv", &prov, &profile.to_csv())?;
    dir.json("scan.json", &prov, &ScanData { h: cfg.scan.h, peaks, warnings: profile.warnings.clone() })?;
    let p = Plot {
        title: format!("E-scan at h = {}", cfg.scan.h),
        xlabel: "E".into(),
        ylabel: "|Upsilon|".into(),
        axes: Axes::Linear,
        curves: vec![Curve::line(1, 4, "|Upsilon|"), Curve::line(1, 5, "tail bound")],
    };
    plot(dir, &data, "scan.gp", &p)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SweepData {
    energy: f64,
    fit: FitOutcome,
    errors: Vec<(f64, String)>,
}

fn sweep(cfg: &RunConfig, dir: &mut OutDir, messages: &mut Vec<String>) -> Result<i32, CliError> {
    let pot = cfg.build_potential()?;
    let tf = cfg.build_test_function()?;
    let energy = cfg.sweep.energy.ok_or_else(|| CliError::config("cli", "`sweep.energy` is required"))?;
    let hs = cfg.h_list()?;
    let result = h_sweep(&pot, energy, &tf, &hs, &cfg.sweep_params())?;
    let errors: Vec<(f64, String)> =
        result.points.iter().filter_map(|p| p.error.clone().map(|e| (p.h, e))).collect();
    if errors.len() == result.points.len() {
        return Err(CliError::solver("specdist", format!("every h failed; first: {}", errors[0].1)));
    }
    for (h, e) in &errors {
        messages.push(format!("warning: h = {h} dropped: {e}"));
    }
    let fit = fit_samples(&sweep_samples(&result))?;
    match fit.fit() {
        Some(f) => messages.push(format!("alpha = {:.4}, log power = {}", f.alpha, f.log_power)),
        None => messages.push("sweep is numerically zero".into()),
    }
    let prov = Provenance::new("sweep", Some(cfg))
        .with_test_function(tf.describe())
        .with_h_list(&hs)
        .with_tail_bounds(result.points.iter().map(|p| p.tail_bound));
    let data = dir.csv("sweep.csv", &prov, &result.to_csv())?;
    dir.json("sweep.json", &prov, &SweepData { energy, fit, errors })?;
    let p = Plot {
        title: format!("h-sweep at E = {energy}"),
        xlabel: "h".into(),
        ylabel: "|Upsilon|".into(),
        axes: Axes::LogLog,
        curves: vec![Curve::points(1, 4, "|Upsilon|"), Curve::line(1, 5, "tail bound")],
    };
    plot(dir, &data, "sweep.gp", &p)?;
    Ok(EXIT_OK)
}

fn all_inconclusive(verdicts: &[LevelVerdict]) -> bool {
    !verdicts.is_empty() && verdicts.iter().all(|v| *v == LevelVerdict::Inconclusive)
}

fn detect(cfg: &RunConfig, dir: &mut OutDir, messages: &mut Vec<String>) -> Result<i32, CliError> {
    let pot = cfg.build_potential()?;
    let tf = cfg.build_test_function()?;
    let energies = cfg.energy_grid(cfg.detect.points)?;
    let params = cfg.classify_params()?;
    let report = detect_levels(&pot, &energies, cfg.detect.h, &tf, &params)?;
    messages.extend(report.scan.warnings.iter().map(|w| format!("warning: {w}")));
    let mut rows = String::from("scan_energy,critical_value,verdict,mode,alpha,log_power,residual_rms\n");
    for l in &report.levels {
        let fit = l.level.primary_fit();
        rows.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            num(l.scan_energy),
            l.critical_value.map_or_else(String::new, num),
            l.level.verdict.as_str(),
            serde_json::to_string(&l.level.mode).expect("mode serializes").trim_matches('"'),
            fit.map_or_else(String::new, |f| num(f.alpha)),
            l.level.log_power(),
            fit.map_or_else(String::new, |f| num(f.residual_rms)),
        ));
        messages.push(format!("level {:.6}: {}", l.level.energy, l.level.verdict.as_str()));
    }
    let prov = Provenance::new("detect", Some(cfg))
        .with_test_function(tf.describe())
        .with_h_list(&params.h_list)
        .with_tail_bounds(report.scan.tail_bounds.iter().copied())
        .with_tail_bounds(report.levels.iter().flat_map(|l| l.level.sweep.points.iter().map(|p| p.tail_bound)));
    let data = dir.csv("detect_scan.csv", &prov, &report.scan.to_csv())?;
    dir.csv("levels.csv", &prov, &rows)?;
    dir.json("detect.json", &prov, &report)?;
    let p = Plot {
        title: format!("E-scan at h = {}", cfg.detect.h),
        xlabel: "E".into(),
        ylabel: "|Upsilon|".into(),
        axes: Axes::Linear,
        curves: vec![Curve::line(1, 4, "|Upsilon|")],
    };
    plot(dir, &data, "detect_scan.gp", &p)?;
    let verdicts: Vec<LevelVerdict> = report.levels.iter().map(|l| l.level.verdict).collect();
    Ok(if all_inconclusive(&verdicts) { EXIT_INCONCLUSIVE } else { EXIT_OK })
}

#[derive(Serialize)]
struct DensityData {
    energy: f64,
    location: Vec<f64>,
    hessian_eigenvalues: Vec<f64>,
    samples: Vec<DensitySample>,
    recovered: Option<HessianFit>,
    recovery_error: Option<String>,
}

fn density(cfg: &RunConfig, dir: &mut OutDir, messages: &mut Vec<String>) -> Result<i32, CliError> {
    let pot = cfg.build_potential()?;
    let d = &cfg.density;
    let energy = d.energy.ok_or_else(|| CliError::config("cli", "`density.energy` is required"))?;
    let info = match &d.location {
        Some(x0) => {
            if x0.len() != pot.dim() {
                return Err(CliError::config("cli", format!("`density.location` needs {} coordinates", pot.dim())));
            }
            pot.analyze_critical_point(x0)
        }
        None => pot.critical_point_at(energy, 1e-6)?,
    };
    let centers = match &d.centers {
        Some(c) => c.clone(),
        None => default_density_centers(&pot, &info.location, d.count),
    };
    let params = cfg.density_params()?;
    let samples = density_from_quantum(&pot, &info.location, energy, &centers, &params)?;
    let pairs: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.value.is_finite()).map(|s| (s.t, s.value)).collect();
    let (recovered, recovery_error) = match recover_hessian_spectrum(&pairs, pot.dim()) {
        Ok(fit) => {
            messages.push(format!("recovered Hessian eigenvalues {:?}", fit.hessian_eigenvalues));
            (Some(fit), None)
        }
        Err(e) => {
            messages.push(format!("warning: Hessian recovery failed: {e}"));
            (None, Some(e.to_string()))
        }
    };
    let mut rows = String::from("t,value,predicted,alpha,phase,support_lo,support_hi\n");
    for s in &samples {
        let pred = predicted_density(&info.hessian_eigenvalues, s.t).unwrap_or(f64::NAN);
        rows.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            num(s.t),
            num(s.value),
            num(pred),
            num(s.alpha),
            num(s.phase),
            num(s.support.0),
            num(s.support.1)
        ));
    }
    let prov = Provenance::new("density", Some(cfg)).with_h_list(&params.h_list);
    let data = dir.csv("density.csv", &prov, &rows)?;
    dir.json(
        "density.json",
        &prov,
        &DensityData {
            energy,
            location: info.location.clone(),
            hessian_eigenvalues: info.hessian_eigenvalues.clone(),
            samples,
            recovered,
            recovery_error,
        },
    )?;
    let p = Plot {
        title: format!("density at E = {energy}"),
        xlabel: "t".into(),
        ylabel: "|det(dPhi_t - I)|^(-1/2)".into(),
        axes: Axes::Linear,
        curves: vec![Curve::points(1, 2, "from spectrum"), Curve::line(1, 3, "from Hessian")],
    };
    plot(dir, &data, "density.gp", &p)?;
    Ok(EXIT_OK)
}

fn critical_values_in(cfg: &RunConfig, pot: &semispec::Potential) -> Result<Vec<f64>, CliError> {
    let (e1, e2) = cfg.window()?;
    let mut values: Vec<f64> = pot
        .find_critical_points(&SeedGrid::default())
        .iter()
        .map(|c| c.value)
        .filter(|v| (e1..=e2).contains(v))
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(values)
}

fn invert_levels(cfg: &RunConfig, dir: &mut OutDir, messages: &mut Vec<String>) -> Result<i32, CliError> {
    let pot = cfg.build_potential()?;
    let tf = cfg.build_test_function()?;
    let energies =
        if cfg.invert.energies.is_empty() { critical_values_in(cfg, &pot)? } else { cfg.invert.energies.clone() };
    if energies.is_empty() {
        return Err(CliError::config("cli", "no levels to invert: set `invert.energies` or widen the window"));
    }
    let params = InvertParams {
        classify: cfg.classify_params()?,
        density: cfg.density_params()?,
        density_times: cfg.density.centers.clone().unwrap_or_default(),
        calibrate: cfg.invert.calibrate,
    };
    let reports: Vec<CriticalReport> =
        energies.iter().map(|&e| invert(&pot, e, &tf, &params)).collect::<Result<_, _>>()?;
    for r in &reports {
        messages.push(format!("E = {}: {} {}", r.energy, r.verdict.as_str(), r.extremum.as_str()));
    }
    let prov = Provenance::new("invert", Some(cfg))
        .with_test_function(tf.describe())
        .with_h_list(&params.classify.h_list)
        .with_tail_bounds(reports.iter().flat_map(|r| r.level.sweep.points.iter().map(|p| p.tail_bound)));
    dir.json("report.json", &prov, &reports)?;
    dir.text("summary.txt", &summary_table(&reports))?;
    let verdicts: Vec<LevelVerdict> = reports.iter().map(|r| r.verdict).collect();
    Ok(if all_inconclusive(&verdicts) { EXIT_INCONCLUSIVE } else { EXIT_OK })
}

fn tables(cfg: Option<&RunConfig>, dir: &mut OutDir) -> Result<i32, CliError> {
    let t = cfg.map(|c| c.tables.clone()).unwrap_or_default();
    if t.n_max == 0 || t.k_max == 0 {
        return Err(CliError::config("cli", "`tables.n_max` and `tables.k_max` must be positive"));
    }
    let prov = Provenance::new("tables", cfg);
    dir.csv("exponents.csv", &prov, &exponent_table_csv(t.n_max, t.k_max))?;
    Ok(EXIT_OK)
}
