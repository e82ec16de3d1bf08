//! Cost models, acquisition rates, myopic selection and the active-learning
//! loop.

mod cost;
mod optimize;
mod rates;
mod run_loop;

pub use cost::{CostFn, CostModel};
pub use optimize::{grid_argmax, optimize_myopic, optimize_rate, AcquisitionOptions, Selection};
pub use rates::{rate_ip, rate_ivr, rate_mi, AcquisitionKind, PERFECT_STEP};
pub use run_loop::{run_loop, BlackBox, LoopConfig, LoopOutcome, LoopRecord, RecordKind, Termination};
