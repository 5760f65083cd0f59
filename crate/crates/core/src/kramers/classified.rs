use super::{
    ek_classical, ek_codim2, ek_flat_stable, ek_flat_unstable, AngularProfile, MinimumSpec, RateResult, SaddleRegime,
    SaddleSpec,
};
use crate::error::{invalid, Result};
use crate::landscape::{classify, ClassDetail, ClassifyOptions, StationaryPoint, Tag, Verdict};
use crate::potentials::PotentialModel;

/// Minimum data from a stationary point whose Hessian is positive definite.
pub fn minimum_spec_for(point: &StationaryPoint) -> Result<MinimumSpec> {
    if !point.zero_indices.is_empty() || !point.negative_indices().is_empty() {
        return Err(invalid(format!(
            "point {:?} is not a non-degenerate minimum (eigenvalues {:?})",
            point.location, point.eigenvalues
        )));
    }
    MinimumSpec::from_eigenvalues(point.value, &point.eigenvalues)
}

/// Saddle data for the formula matching the point's class: quadratic,
/// quartic unstable, quartic stable, or a quartic double zero.
pub fn saddle_spec_for(model: &PotentialModel, point: &StationaryPoint, opts: &ClassifyOptions) -> Result<SaddleSpec> {
    let class = classify(model, point, opts)?;
    if class.verdict != Verdict::Saddle {
        return Err(invalid(format!("point classified as {:?} / {:?}, not a saddle", class.tag, class.verdict)));
    }
    let positives: Vec<f64> = point.positive_indices().iter().map(|&i| point.eigenvalues[i]).collect();
    let negative = point.negative_indices().first().map(|&i| point.eigenvalues[i].abs());
    let spec = match (class.tag, &class.detail) {
        (Tag::NondegenerateSaddle, _) => {
            SaddleSpec::quadratic(point.value, negative.ok_or_else(|| invalid("no negative eigenvalue"))?, positives)
        }
        (Tag::Codim1, Some(ClassDetail::Codim1(nf))) => match negative {
            Some(l1) => SaddleSpec {
                value: point.value,
                unstable_eigenvalue: Some(l1),
                stable_eigenvalues: positives,
                regime: SaddleRegime::FlatStable { p: 2, c: nf.c4 },
            },
            None => SaddleSpec {
                value: point.value,
                unstable_eigenvalue: None,
                stable_eigenvalues: positives,
                regime: SaddleRegime::FlatUnstable { p: 2, c: -nf.c4 },
            },
        },
        (Tag::Codim2, Some(ClassDetail::Codim2(nf))) if nf.order == 4 => SaddleSpec {
            value: point.value,
            unstable_eigenvalue: negative,
            stable_eigenvalues: positives,
            regime: SaddleRegime::Codim2 {
                k: AngularProfile::Quartic(nf.quartic),
                p: 2,
            },
        },
        (tag, _) => return Err(invalid(format!("no closed-form rate for class {tag:?}"))),
    };
    Ok(spec)
}

/// Dispatch on the saddle regime.
pub fn rate_for(min: &MinimumSpec, saddle: &SaddleSpec, eps: f64) -> Result<RateResult> {
    match &saddle.regime {
        SaddleRegime::Quadratic => ek_classical(min, saddle, eps),
        SaddleRegime::FlatUnstable { .. } => ek_flat_unstable(min, saddle, eps),
        SaddleRegime::FlatStable { .. } => ek_flat_stable(min, saddle, eps),
        SaddleRegime::Codim2 { .. } => ek_codim2(min, saddle, eps),
    }
}
