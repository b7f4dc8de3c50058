//! Output files. CSV files start with `#` provenance lines; JSON files are
//! `{ "provenance": ..., "data": ... }`. Nothing time-dependent is written,
//! so identical inputs give identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use semispec::quantum::SolverParams;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub solver: SolverParams,
    pub min_eps: f64,
    pub test_function: Option<String>,
    pub h_list: Vec<f64>,
    /// Largest certified truncation bound among the reported values.
    pub max_tail_bound: Option<f64>,
}

impl Provenance {
    pub fn new(command: &str, cfg: Option<&RunConfig>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: cfg.map_or_else(|| "none".into(), RunConfig::hash),
            solver: cfg.map_or_else(SolverParams::default, |c| c.solver),
            min_eps: cfg.map_or(semispec::specdist::SweepParams::default().min_eps, |c| c.min_eps),
            test_function: None,
            h_list: Vec::new(),
            max_tail_bound: None,
        }
    }

    pub fn with_test_function(mut self, describe: String) -> Self {
        self.test_function = Some(describe);
        self
    }

    pub fn with_h_list(mut self, hs: &[f64]) -> Self {
        self.h_list = hs.to_vec();
        self
    }

    /// Folds tail bounds into the maximum; NaN entries are skipped.
    pub fn with_tail_bounds(mut self, bounds: impl IntoIterator<Item = f64>) -> Self {
        for b in bounds.into_iter().filter(|b| b.is_finite()) {
            self.max_tail_bound = Some(self.max_tail_bound.map_or(b, |m: f64| m.max(b)));
        }
        self
    }

    fn comment_lines(&self) -> String {
        let mut s = format!("# {} {} {}\n", self.tool, self.version, self.command);
        s.push_str(&format!("# config_sha256 {}\n", self.config_sha256));
        s.push_str(&format!("# solver {}\n", serde_json::to_string(&self.solver).expect("solver serializes")));
        s.push_str(&format!("# min_eps {}\n", self.min_eps));
        if let Some(tf) = &self.test_function {
            s.push_str(&format!("# test_function {tf}\n"));
        }
        if !self.h_list.is_empty() {
            let hs: Vec<String> = self.h_list.iter().map(|h| format!("{h}")).collect();
            s.push_str(&format!("# h_list {}\n", hs.join(" ")));
        }
        if let Some(t) = self.max_tail_bound {
            s.push_str(&format!("# max_tail_bound {t:e}\n"));
        }
        s
    }
}

/// Output directory, created on first use.
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn new(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn csv(&mut self, name: &str, prov: &Provenance, body: &str) -> Result<PathBuf, CliError> {
        let mut s = prov.comment_lines();
        s.push_str(body);
        self.text(name, &s)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, prov: &Provenance, data: &T) -> Result<PathBuf, CliError> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            provenance: &'a Provenance,
            data: &'a T,
        }
        let mut s = serde_json::to_string_pretty(&Doc { provenance: prov, data })
            .map_err(|e| CliError::solver("cli", format!("cannot serialize {name}: {e}")))?;
        s.push('\n');
        self.text(name, &s)
    }
}

/// `f64` formatted for CSV; NaN stays `NaN`.
pub fn num(v: f64) -> String {
    format!("{v:.15e}")
}
