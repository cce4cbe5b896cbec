use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HardClass, LinearClass, TabularClass};
use crate::error::{config, Result};
use crate::model::{ModelClass, Shape};
use crate::multitype::TabularMultiTypeClass;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassHeader {
    pub schema_version: u32,
    #[serde(rename = "H")]
    pub horizon: usize,
    #[serde(rename = "S")]
    pub states: usize,
    #[serde(rename = "A")]
    pub actions: usize,
    pub kind: String,
    pub seed: Option<u64>,
}

/// Any generated class, with its full parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratedClass {
    Linear(LinearClass),
    Tabular(TabularClass),
    Hard(HardClass),
    /// Stored in typed form; `build` returns the lifted single-type class.
    MultiType(TabularMultiTypeClass),
}

/// The `.mfgclass.json` container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassFile {
    pub header: ClassHeader,
    pub body: GeneratedClass,
}

impl GeneratedClass {
    pub fn kind(&self) -> &'static str {
        match self {
            GeneratedClass::Linear(_) => "linear",
            GeneratedClass::Tabular(_) => "tabular",
            GeneratedClass::Hard(_) => "hard",
            GeneratedClass::MultiType(_) => "multitype",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            GeneratedClass::Linear(c) => Some(c.spec.seed),
            GeneratedClass::Tabular(c) => Some(c.spec.seed),
            GeneratedClass::Hard(_) => None,
            GeneratedClass::MultiType(c) => Some(c.spec.seed),
        }
    }

    pub fn build(&self) -> Result<ModelClass> {
        match self {
            GeneratedClass::Linear(c) => c.build(),
            GeneratedClass::Tabular(c) => c.build(),
            GeneratedClass::Hard(c) => c.build(),
            GeneratedClass::MultiType(c) => c.build_lifted_class(),
        }
    }

    pub fn into_file(self) -> Result<ClassFile> {
        let shape: Shape = self.build()?.shape();
        Ok(ClassFile {
            header: ClassHeader {
                schema_version: SCHEMA_VERSION,
                horizon: shape.horizon,
                states: shape.states,
                actions: shape.actions,
                kind: self.kind().to_string(),
                seed: self.seed(),
            },
            body: self,
        })
    }
}

pub fn save_class(path: &Path, class: &GeneratedClass) -> Result<()> {
    let file = class.clone().into_file()?;
    fs::write(path, serde_json::to_vec(&file)?)?;
    Ok(())
}

pub fn load_class(path: &Path) -> Result<GeneratedClass> {
    let bytes = fs::read(path)?;
    let file: ClassFile = serde_json::from_slice(&bytes)?;
    if file.header.schema_version != SCHEMA_VERSION {
        return config(format!("unsupported schema version {}", file.header.schema_version));
    }
    if file.header.kind != file.body.kind() {
        return config("header kind does not match body");
    }
    Ok(file.body)
}
