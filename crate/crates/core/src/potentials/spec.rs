use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::chain::{chain_potential, ChainParams};
use super::polynomial::{double_well, rotated_two_particle, PolynomialDoc, PolynomialPotential};
use super::PotentialModel;
use crate::error::{invalid, Result};

/// A reference to a potential: a built-in family with parameters, or an
/// explicit polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec {
    Chain {
        #[serde(rename = "N")]
        n: usize,
        gamma: f64,
    },
    Rotated2 {
        gamma: f64,
    },
    DoubleWell,
    Polynomial(PolynomialDoc),
}

impl PotentialSpec {
    /// Resolve a built-in family name with a parameter map.
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |k: &str| {
            params
                .get(k)
                .copied()
                .ok_or_else(|| invalid(format!("potential '{name}' needs parameter '{k}'")))
        };
        match name {
            "chain" => {
                let n = get("N")?;
                if n.fract() != 0.0 || n < 2.0 {
                    return Err(invalid(format!("chain N must be an integer ≥ 2, got {n}")));
                }
                Ok(PotentialSpec::Chain {
                    n: n as usize,
                    gamma: get("gamma")?,
                })
            }
            "rotated2" => Ok(PotentialSpec::Rotated2 { gamma: get("gamma")? }),
            "double-well" | "double_well" => Ok(PotentialSpec::DoubleWell),
            other => Err(invalid(format!("unknown potential family '{other}'"))),
        }
    }

    pub fn build(&self) -> Result<PotentialModel> {
        Ok(match self {
            PotentialSpec::Chain { n, gamma } => chain_potential(ChainParams { n: *n, gamma: *gamma })?,
            PotentialSpec::Rotated2 { gamma } => {
                rotated_two_particle(*gamma).into_model(format!("rotated2(gamma={gamma})")).confining()
            }
            PotentialSpec::DoubleWell => double_well().into_model("double-well").confining(),
            PotentialSpec::Polynomial(doc) => PolynomialPotential::from_doc(doc)?.into_model("polynomial"),
        })
    }
}

/// Load a potential file: either a polynomial document
/// `{"dimension": d, "terms": [...]}` or a tagged built-in
/// `{"family": "chain", "N": 3, "gamma": 0.6}`.
pub fn load_potential_file(path: &Path) -> Result<PotentialSpec> {
    let text = std::fs::read_to_string(path)?;
    let raw: serde_json::Value = serde_json::from_str(&text)?;
    if raw.get("family").is_some() {
        Ok(serde_json::from_value(raw)?)
    } else {
        let doc: PolynomialDoc = serde_json::from_value(raw)?;
        PolynomialPotential::from_doc(&doc)?;
        Ok(PotentialSpec::Polynomial(doc))
    }
}
