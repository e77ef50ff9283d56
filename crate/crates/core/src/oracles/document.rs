//! JSON instance documents.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{make_exemplar_1d, ConstrainedProblem, FairnessSpec, FccoSpec, ProblemConstants, QuadraticSpec};
use crate::{Error, Result};

pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

/// Generator recipe for a catalog instance. Rebuilding from the recipe is
/// bit-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    Exemplar1d { noise: f64 },
    Quadratic(QuadraticSpec),
    Fcco(FccoSpec),
    Fairness(FairnessSpec),
}

impl InstanceSpec {
    pub fn build(&self) -> Result<ConstrainedProblem> {
        match self {
            InstanceSpec::Exemplar1d { noise } => Ok(make_exemplar_1d(*noise)),
            InstanceSpec::Quadratic(s) => s.build(),
            InstanceSpec::Fcco(s) => s.build(),
            InstanceSpec::Fairness(s) => s.build(),
        }
    }
}

/// Serialised instance: recipe plus the derived metadata it must reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub schema_version: u32,
    pub instance: InstanceSpec,
    pub dimension: usize,
    pub constraints: usize,
    pub constants: ProblemConstants,
}

impl InstanceDocument {
    pub fn from_problem(problem: &ConstrainedProblem) -> Result<Self> {
        let instance = problem
            .spec
            .clone()
            .ok_or_else(|| Error::InstanceMismatch(format!("problem `{}` has no generator recipe", problem.name)))?;
        Ok(Self {
            schema_version: INSTANCE_SCHEMA_VERSION,
            instance,
            dimension: problem.dim(),
            constraints: problem.m(),
            constants: problem.constants,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.schema_version != INSTANCE_SCHEMA_VERSION {
            return Err(Error::InstanceMismatch(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    /// Rebuilds the instance and checks it against the recorded metadata.
    pub fn build(&self) -> Result<ConstrainedProblem> {
        let p = self.instance.build()?;
        if p.dim() != self.dimension || p.m() != self.constraints {
            return Err(Error::InstanceMismatch(format!(
                "recorded shape {}x{}, rebuilt {}x{}",
                self.dimension,
                self.constraints,
                p.dim(),
                p.m()
            )));
        }
        if p.constants != self.constants {
            return Err(Error::InstanceMismatch(
                "recorded constants differ from rebuilt instance".into(),
            ));
        }
        Ok(p)
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("instance documents serialise");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
