use serde::{Deserialize, Serialize};

/// Result of one norm evaluation: the value, the tent that attained the sup,
/// and the discretization it was computed on. Serializes to a flat JSON
/// object.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub family: String,
    pub param: f64,
    pub value: f64,
    pub argmax_center: Vec<f64>,
    pub argmax_radius: f64,
    pub grid_n: usize,
    pub time_nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Norm increment from extrapolating the below-cutoff time integral as a
    /// pure power (singular-weight families only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_estimate: Option<f64>,
    /// Scale proxy for the excluded diagonal cell (Slobodeckij family only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagonal_removed_estimate: Option<f64>,
}

impl NormReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("norm report serializes")
    }
}

/// One evaluated tent: a ball and the value of the normalized integral over
/// its tent.
#[derive(Debug, Clone)]
pub struct BallValue {
    pub center: Vec<f64>,
    pub radius: f64,
    pub value: f64,
}
