//! Run configuration: one file describes the potential, the test function,
//! the solver and the options of every command.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use semispec::detector::{default_probe, ClassifyParams, DensityParams};
use semispec::quantum::SolverParams;
use semispec::specdist::{default_h_list, geometric_h_list, SweepParams};
use semispec::testfn::{TestFunction, TestFunctionSpec};
use semispec::{Potential, PotentialSpec};

use crate::CliError;

/// Either an explicit list or a geometric progression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HList {
    Explicit(Vec<f64>),
    Geometric { max: f64, min: f64, count: usize },
}

impl HList {
    pub fn values(&self) -> Vec<f64> {
        match self {
            HList::Explicit(v) => v.clone(),
            HList::Geometric { max, min, count } => geometric_h_list(*max, *min, *count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumOptions {
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    pub h: f64,
    /// Energies on a uniform grid over the window.
    pub points: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { h: 0.01, points: 201 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub energy: Option<f64>,
}

/// Thresholds of the level classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub regular_slope: f64,
    pub weak_slope: f64,
    pub max_residual: f64,
    pub period_band: f64,
    pub log_probe: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        let c = ClassifyParams::default();
        Self {
            regular_slope: c.regular_slope,
            weak_slope: c.weak_slope,
            max_residual: c.max_residual,
            period_band: c.period_band,
            log_probe: c.log_probe,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityOptions {
    pub energy: Option<f64>,
    /// Critical point; found from the energy when absent.
    pub location: Option<Vec<f64>>,
    pub centers: Option<Vec<f64>>,
    pub count: usize,
    pub h_list: Option<HList>,
    pub half_width: Option<f64>,
    pub s_max: Option<f64>,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self { energy: None, location: None, centers: None, count: 16, h_list: None, half_width: None, s_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvertOptions {
    /// Levels to analyse; the critical values inside the window when empty.
    pub energies: Vec<f64>,
    pub calibrate: bool,
}

impl Default for InvertOptions {
    fn default() -> Self {
        Self { energies: Vec::new(), calibrate: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TablesOptions {
    pub n_max: u32,
    pub k_max: u32,
}

impl Default for TablesOptions {
    fn default() -> Self {
        Self { n_max: 4, k_max: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    /// Margin of the spectral window; 0.1 (E2 - E1) when absent.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Defaults to the one-sided probe on [0.1, 1].
    #[serde(default)]
    pub test_function: Option<TestFunctionSpec>,
    #[serde(default)]
    pub h_list: Option<HList>,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default = "default_min_eps")]
    pub min_eps: f64,
    /// Worker threads; results do not depend on it.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub spectrum: SpectrumOptions,
    #[serde(default)]
    pub scan: ScanOptions,
    #[serde(default)]
    pub sweep: SweepOptions,
    #[serde(default)]
    pub detect: ScanOptions,
    #[serde(default)]
    pub density: DensityOptions,
    #[serde(default)]
    pub invert: InvertOptions,
    #[serde(default)]
    pub tables: TablesOptions,
}

fn default_min_eps() -> f64 {
    SweepParams::default().min_eps
}

impl RunConfig {
    /// Reads JSON, or TOML when the extension is `.toml`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("cli", format!("cannot read config {}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        let parsed = if is_toml {
            toml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::config("cli", format!("config {}: {e}", path.display())))
    }

    /// SHA-256 of the canonical JSON form, ignoring the worker count.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn build_potential(&self) -> Result<Potential, CliError> {
        self.potential.build().map_err(CliError::from)
    }

    pub fn build_test_function(&self) -> Result<TestFunction, CliError> {
        match &self.test_function {
            Some(spec) => spec.build().map_err(CliError::from),
            None => default_probe().map_err(CliError::from),
        }
    }

    pub fn window(&self) -> Result<(f64, f64), CliError> {
        let [e1, e2] = self.window.ok_or_else(|| CliError::config("cli", "`window` [E1, E2] is required"))?;
        if !(e1.is_finite() && e2.is_finite() && e1 <= e2) {
            return Err(CliError::config("cli", format!("window [{e1}, {e2}] must satisfy E1 <= E2")));
        }
        Ok((e1, e2))
    }

    pub fn eps(&self) -> Result<f64, CliError> {
        let (e1, e2) = self.window()?;
        let eps = self.eps.unwrap_or(0.1 * (e2 - e1));
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(CliError::config("cli", format!("eps = {eps} must be nonnegative")));
        }
        Ok(eps)
    }

    pub fn h_list(&self) -> Result<Vec<f64>, CliError> {
        let hs = self.h_list.as_ref().map(HList::values).unwrap_or_else(default_h_list);
        check_h_list(&hs, "h_list")?;
        Ok(hs)
    }

    pub fn sweep_params(&self) -> SweepParams {
        SweepParams { solver: self.solver, min_eps: self.min_eps }
    }

    pub fn classify_params(&self) -> Result<ClassifyParams, CliError> {
        let t = &self.thresholds;
        Ok(ClassifyParams {
            sweep: self.sweep_params(),
            h_list: self.h_list()?,
            regular_slope: t.regular_slope,
            weak_slope: t.weak_slope,
            max_residual: t.max_residual,
            period_band: t.period_band,
            log_probe: t.log_probe,
        })
    }

    pub fn density_params(&self) -> Result<DensityParams, CliError> {
        let d = &self.density;
        let mut p = DensityParams { sweep: self.sweep_params(), ..DensityParams::default() };
        if let Some(hs) = &d.h_list {
            p.h_list = hs.values();
            check_h_list(&p.h_list, "density.h_list")?;
        }
        if let Some(w) = d.half_width {
            p.half_width = w;
        }
        if let Some(s) = d.s_max {
            p.s_max = s;
        }
        Ok(p)
    }

    /// Uniform grid of `points` energies over the window.
    pub fn energy_grid(&self, points: usize) -> Result<Vec<f64>, CliError> {
        let (e1, e2) = self.window()?;
        if points < 2 {
            return Err(CliError::config("cli", format!("an energy grid needs at least 2 points, got {points}")));
        }
        Ok((0..points).map(|i| e1 + (e2 - e1) * i as f64 / (points - 1) as f64).collect())
    }
}

fn check_h_list(hs: &[f64], name: &str) -> Result<(), CliError> {
    if hs.is_empty() {
        return Err(CliError::config("cli", format!("`{name}` is empty")));
    }
    if hs.iter().any(|h| !(*h > 0.0 && h.is_finite())) || hs.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(CliError::config("cli", format!("`{name}` must be positive and strictly decreasing")));
    }
    Ok(())
}
