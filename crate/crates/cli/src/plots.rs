//! Gnuplot scripts for the CSV outputs.

use std::fs;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axes {
    Linear,
    LogLog,
}

/// One curve: 1-based CSV columns and a legend.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub x: usize,
    pub y: usize,
    pub title: String,
    pub points: bool,
}

impl Curve {
    pub fn line(x: usize, y: usize, title: &str) -> Self {
        Self { x, y, title: title.into(), points: false }
    }

    pub fn points(x: usize, y: usize, title: &str) -> Self {
        Self { x, y, title: title.into(), points: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub axes: Axes,
    pub curves: Vec<Curve>,
}

fn data_rows(csv: &str) -> usize {
    csv.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).count().saturating_sub(1)
}

/// Script plotting `data` (a CSV written next to it). The data file must
/// exist; an empty one still gets a script, marked as such.
pub fn script(data: &Path, plot: &Plot) -> Result<String, CliError> {
    let csv = fs::read_to_string(data)
        .map_err(|e| CliError::solver("cli", format!("plot data {} missing: {e}", data.display())))?;
    let name = data.file_name().and_then(|n| n.to_str()).unwrap_or("data.csv");
    let stem = name.trim_end_matches(".csv");
    let mut s = String::new();
    if data_rows(&csv) == 0 {
        s.push_str("# empty dataset: nothing to plot\n");
    }
    s.push_str("set datafile separator ','\n");
    s.push_str("set datafile commentschars '#'\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str(&format!("set output '{stem}.png'\n"));
    s.push_str(&format!("set title '{}'\n", plot.title));
    s.push_str(&format!("set xlabel '{}'\n", plot.xlabel));
    s.push_str(&format!("set ylabel '{}'\n", plot.ylabel));
    if plot.axes == Axes::LogLog {
        s.push_str("set logscale xy\n");
    }
    s.push_str("set grid\n");
    if data_rows(&csv) == 0 {
        return Ok(s);
    }
    let parts: Vec<String> = plot
        .curves
        .iter()
        .map(|c| {
            let style = if c.points { "linespoints pt 7" } else { "lines" };
            format!("'{name}' using {}:{} with {style} title '{}'", c.x, c.y, c.title)
        })
        .collect();
    s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    Ok(s)
}
