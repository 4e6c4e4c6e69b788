//! Reproduction configs: one TOML file per figure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::args::Format;
use crate::commands::{self, NumericOpts, Outcome, RgOpts, SimulateOpts, SweepOpts};
use crate::error::CliError;
use crate::model::ModelSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classify,
    Simulate,
    Rg,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub command: Task,
    pub model: Option<String>,
    /// Model file, relative to the config's directory.
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub seeds: Vec<[f64; 2]>,
    pub tol: Option<f64>,
    pub t_end: Option<f64>,
    #[serde(default)]
    pub confirm: bool,
    pub lambda: Option<f64>,
    #[serde(default)]
    pub compare: bool,
    pub amplitude: Option<f64>,
    pub axes: Option<String>,
    pub format: Option<Format>,
}

impl FigureConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: FigureConfig =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if cfg.name.is_empty() || cfg.name.contains(['/', '\\']) {
            return Err(CliError::Usage(format!("{}: name must be a plain file stem", path.display())));
        }
        Ok(cfg)
    }

    fn source(&self, base: &Path) -> Result<ModelSource, CliError> {
        let file = self.file.as_ref().map(|f| base.join(f));
        ModelSource::new(self.model.as_deref(), file.as_deref(), self.params.clone())
    }

    /// Runs the config and stores its report next to the other outputs.
    pub fn run(&self, base: &Path, out: &Path, threads: Option<usize>) -> Result<Outcome, CliError> {
        let format = self.format.unwrap_or(Format::Both);
        let numeric = NumericOpts {
            seeds: self.seeds.clone(),
            tol: self.tol,
        };
        let mut outcome = match self.command {
            Task::Classify => commands::classify(&self.source(base)?, self.confirm, &numeric)?,
            Task::Simulate => commands::simulate(
                &self.source(base)?,
                &SimulateOpts {
                    numeric: &numeric,
                    t_end: self.t_end.unwrap_or(100.0),
                    out,
                    format,
                    stem: &self.name,
                },
            )?,
            Task::Rg => commands::rg(
                &self.source(base)?,
                &RgOpts {
                    lambda: self.lambda.unwrap_or(lienard_lab::rg::DEFAULT_LAMBDA),
                    compare: self.compare,
                    amplitude: self.amplitude.unwrap_or(0.1),
                    tol: self.tol,
                },
            )?,
            Task::Sweep => {
                let family = self
                    .model
                    .as_deref()
                    .ok_or_else(|| CliError::Usage(format!("{}: sweep needs a built-in model", self.name)))?
                    .parse()?;
                let axes = self
                    .axes
                    .as_deref()
                    .ok_or_else(|| CliError::Usage(format!("{}: sweep needs `axes`", self.name)))?;
                commands::sweep(
                    family,
                    &self.params,
                    &SweepOpts {
                        axes,
                        out,
                        format,
                        threads,
                    },
                )?
            }
        };
        if !self.description.is_empty() {
            outcome.report = format!("# {}\n{}", self.description, outcome.report);
        }
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let path = out.join(format!("{}_report.txt", self.name));
        fs::write(&path, &outcome.report).map_err(|e| CliError::io(&path, e))?;
        outcome.files.push(path);
        Ok(outcome)
    }
}

/// `*.toml` files of a directory in name order.
pub fn config_paths(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no *.toml configs in {}", dir.display())));
    }
    Ok(paths)
}
