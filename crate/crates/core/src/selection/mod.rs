//! Feature selection: iterative VIF elimination, Boruta, stepwise AIC.

mod boruta;
mod stepwise;
mod vif;

pub use boruta::{boruta_select, BorutaFeature, BorutaParams, BorutaResult, BorutaStatus};
pub use stepwise::{aic, stepwise_aic, StepwiseResult};
pub use vif::{vif_eliminate, vif_scores, VifReport, VifScore, VifStep, VIF_CAP};
