//! Single-source Bayesian quadrature on the primary alone.

use crate::acquisition::{run_loop, AcquisitionKind, BlackBox, CostModel, LoopConfig, LoopOutcome};
use crate::error::{Error, Result};
use crate::kernels::IntegrationMeasure;
use crate::msgp::Dataset;

/// Cost-free counterpart of `kind`, used to pick queries when only the
/// primary is available.
pub fn cost_free(kind: AcquisitionKind) -> AcquisitionKind {
    match kind {
        AcquisitionKind::Ivr | AcquisitionKind::IvrNoCost => AcquisitionKind::IvrNoCost,
        _ => AcquisitionKind::MiNoCost,
    }
}

/// Vanilla BQ: the active loop on `f_1` only. Queries are chosen by the
/// cost-free version of `config.acquisition` (with one source every
/// acquisition orders locations identically) while the budget is charged
/// with `primary_cost`.
pub fn vanilla_bq_baseline(
    f1: &dyn BlackBox,
    measure: &IntegrationMeasure,
    primary_cost: &CostModel,
    config: &LoopConfig,
    initial: &Dataset,
) -> Result<LoopOutcome> {
    if primary_cost.n_sources() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: primary_cost.n_sources() });
    }
    let config = LoopConfig {
        acquisition: cost_free(config.acquisition),
        allow_pathological: true,
        noise: config.noise.as_ref().map(|n| n[..1].to_vec()),
        ..config.clone()
    };
    run_loop(&[f1], measure, primary_cost, &config, initial)
}
