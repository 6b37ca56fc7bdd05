//! The run configuration document (TOML).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use screening_core::{Income, ModelConfig, UtilitySpec};

use crate::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub model: ModelSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub deltas: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    #[serde(rename = "R")]
    pub rate: f64,
    pub income: Income,
    pub utility: UtilitySpec,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RunSection {
    pub section: Option<u8>,
    /// One-based.
    pub delta1_index: Option<usize>,
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Sweep {
    pub t_min: Option<usize>,
    pub t_max: Option<usize>,
    pub n_list: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

impl Document {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.message().trim().to_string();
            if path == "." {
                msg
            } else {
                format!("at `{path}`: {msg}")
            }
        })
    }

    pub fn model(&self) -> ModelConfig {
        let m = &self.model;
        ModelConfig {
            horizon: m.horizon,
            deltas: m.deltas.clone(),
            p: m.p.clone(),
            q: m.q.clone(),
            rate: m.rate,
            income: m.income,
            utility: m.utility,
        }
    }

    /// Checks `run.section` against the section a command needs.
    pub fn expect_section(&self, wanted: u8) -> Result<(), Failure> {
        match self.run.section {
            None => Ok(()),
            Some(s) if s == wanted => Ok(()),
            Some(s) if s == 3 || s == 4 => Err(Failure::Validation(format!(
                "run.section is {s} but this command solves section {wanted}"
            ))),
            Some(s) => Err(Failure::Validation(format!("at `run.section`: expected 3 or 4, got {s}"))),
        }
    }

    /// Zero-based initial type from `run.delta1Index`.
    pub fn delta1(&self) -> Result<Option<usize>, Failure> {
        match self.run.delta1_index {
            None => Ok(None),
            Some(k) if k >= 1 && k <= self.model.deltas.len() => Ok(Some(k - 1)),
            Some(k) => Err(Failure::Validation(format!(
                "at `run.delta1Index`: {k} is outside 1..={}",
                self.model.deltas.len()
            ))),
        }
    }

    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn formats(&self, flag: &[Format]) -> Vec<Format> {
        if !flag.is_empty() {
            return flag.to_vec();
        }
        self.output.formats.clone().unwrap_or_else(|| vec![Format::Csv, Format::Json])
    }
}
