use serde::{Deserialize, Serialize};

use super::{BoxSpec, CapacityEstimate, CapacityGrid, CapacityMethod};
use crate::error::Result;
use crate::kramers::{rate_for, saddle_spec_for, MinimumSpec};
use crate::landscape::{ClassifyOptions, StationaryPoint};
use crate::potentials::PotentialModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub capacity: f64,
    pub regime_tag: String,
}

/// Leading-order capacity of a classified saddle, from the formula matching its class.
pub fn closed_form_capacity(
    model: &PotentialModel,
    saddle: &StationaryPoint,
    eps: f64,
    opts: &ClassifyOptions,
) -> Result<ClosedForm> {
    let spec = saddle_spec_for(model, saddle, opts)?;
    // The capacity does not depend on the minimum; any admissible one will do.
    let min = MinimumSpec::new(saddle.value, 1.0)?;
    let rate = rate_for(&min, &spec, eps)?;
    Ok(ClosedForm {
        capacity: rate.capacity,
        regime_tag: rate.regime_tag,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub method: CapacityMethod,
    pub eps: f64,
    pub value: f64,
    pub closed_form: f64,
    pub ratio: f64,
    #[serde(rename = "box")]
    pub box_spec: Option<BoxSpec>,
    pub grid: Option<CapacityGrid>,
    pub warnings: Vec<String>,
}

pub fn verification_report(est: &CapacityEstimate, closed_form: f64) -> VerificationReport {
    VerificationReport {
        method: est.method,
        eps: est.eps,
        value: est.value,
        closed_form,
        ratio: est.value / closed_form,
        box_spec: est.box_spec.clone(),
        grid: est.grid,
        warnings: est.warnings.clone(),
    }
}
