//! Model ingestion. Presets and model files go through the same reduction.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lienard_lab::lienard::{auto_transform, reduce, steady_states, LienardForm, TransformSpec};
use lienard_lab::models::{verify_reduction, ModelFamily};
use lienard_lab::parse_model;
use lienard_lab::sim::State;
use lienard_lab::PolyVectorField;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Preset {
        family: ModelFamily,
        params: BTreeMap<String, f64>,
    },
    File(PathBuf),
}

impl ModelSource {
    pub fn new(
        model: Option<&str>,
        file: Option<&Path>,
        params: BTreeMap<String, f64>,
    ) -> Result<Self, CliError> {
        match (model, file) {
            (Some(name), None) => Ok(ModelSource::Preset {
                family: name.parse()?,
                params,
            }),
            (None, Some(path)) if params.is_empty() => Ok(ModelSource::File(path.to_path_buf())),
            (None, Some(_)) => Err(CliError::Usage("--param applies to built-in models only".into())),
            (Some(_), Some(_)) => Err(CliError::Usage("give either --model or --file, not both".into())),
            (None, None) => Err(CliError::Usage("a model is required: --model <preset> or --file <path>".into())),
        }
    }
}

pub struct LoadedModel {
    pub label: String,
    pub field: PolyVectorField,
    pub transform: TransformSpec,
    pub form: LienardForm,
    /// Steady states of the reduced equation. For presets only the one
    /// matching the closed form.
    pub steady: Vec<f64>,
    /// Largest relative error of the generic reduction against the closed
    /// form (presets only).
    pub closed_check: Option<f64>,
}

impl LoadedModel {
    pub fn load(src: &ModelSource) -> Result<Self, CliError> {
        match src {
            ModelSource::Preset { family, params } => {
                let full = family.params(params)?;
                let m = family.build(params)?;
                let check = verify_reduction(&m)?;
                let listed: Vec<String> = full.iter().map(|(k, v)| format!("{k}={v}")).collect();
                Ok(Self {
                    label: format!("{family} ({})", listed.join(", ")),
                    steady: vec![m.closed.z_s],
                    form: check.form,
                    closed_check: Some(check.max_rel_err),
                    field: m.field,
                    transform: m.transform,
                })
            }
            ModelSource::File(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let field = parse_model(&text).map_err(|e| CliError::Usage(format!("{}:{e}", path.display())))?;
                let transform = auto_transform(&field)?;
                let form = reduce(&field, &transform, field.max_degree())?;
                let steady = steady_states(&form)?;
                let label = field
                    .name()
                    .map(str::to_string)
                    .unwrap_or_else(|| path.display().to_string());
                Ok(Self {
                    label,
                    field,
                    transform,
                    form,
                    steady,
                    closed_check: None,
                })
            }
        }
    }

    pub fn fixed_point(&self, z_s: f64) -> State {
        let (x, y) = self.transform.to_xy(z_s, 0.0);
        [x, y]
    }

    /// Section direction: the axis along which `xi` varies.
    pub fn direction(&self) -> State {
        self.transform.xi_direction()
    }
}
