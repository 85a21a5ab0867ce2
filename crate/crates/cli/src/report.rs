//! JSON documents printed on stdout. Key names are part of the public
//! output contract; see the README before renaming anything.

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct CompareEnvironment {
    pub seed: u64,
    pub ridge: f64,
    pub alpha: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareRecord {
    pub method: String,
    pub rotation_seed: Option<u64>,
    pub expected_content_cost: f64,
    pub eq2_residual: f64,
    pub content_loss: f64,
    pub style_loss: f64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub environment: CompareEnvironment,
    pub records: Vec<CompareRecord>,
}

#[derive(Debug, Serialize)]
pub struct WhitenEnvironment {
    pub ridge: f64,
}

#[derive(Debug, Serialize)]
pub struct WhitenRecord {
    pub method: String,
    pub whitening_residual: f64,
    pub displacement: f64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct WhitenReport {
    pub environment: WhitenEnvironment,
    pub records: Vec<WhitenRecord>,
}

#[derive(Debug, Serialize)]
pub struct LayerLoss {
    pub layer: String,
    pub style_loss: f64,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub content_loss: f64,
    pub style_loss: f64,
    pub style_losses: Vec<LayerLoss>,
}

#[derive(Debug, Serialize)]
pub struct ErrorLine<'a> {
    pub error: &'a str,
    pub message: String,
}
