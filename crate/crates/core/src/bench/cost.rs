use serde::{Deserialize, Serialize};

/// Inference-cost proxy `fixed + linear * T + quadratic * T^2` in arbitrary
/// units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub coeff_linear: f64,
    pub coeff_quadratic: f64,
    pub fixed_overhead: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            coeff_linear: 8.5e-3,
            coeff_quadratic: 1.0e-6,
            fixed_overhead: 3.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> crate::Result<()> {
        let c = [self.coeff_linear, self.coeff_quadratic, self.fixed_overhead];
        if c.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || c.iter().all(|v| *v == 0.0) {
            return Err(crate::Error::Config(
                "cost coefficients must be finite, non-negative and not all zero".into(),
            ));
        }
        Ok(())
    }
}

pub fn estimate_cost(frames: usize, model: &CostModel) -> f64 {
    let t = frames as f64;
    model.fixed_overhead + model.coeff_linear * t + model.coeff_quadratic * t * t
}

/// Measured TFLOPs of a 7B speech-language model at a 750-frame window and
/// at targets 400/200/100. Printed beside the proxy for orientation only;
/// the proxy does not reproduce them.
pub const REFERENCE_TFLOPS: [(usize, f64); 4] = [(750, 9.79), (400, 8.54), (200, 5.64), (100, 4.17)];
