//! The minimal differentiable toolkit the model needs. Every layer has an
//! explicit `forward` that returns a cache and a `backward` that consumes it,
//! accumulating parameter gradients in place and returning input gradients.

mod adam;
mod attention;
mod gradcheck;
mod gru;
mod linear;
mod tensor;
mod time;

pub use adam::{Adam, AdamConfig};
pub use attention::{
    scaled_dot_attention, scaled_dot_attention_backward, AttentionCache, TemporalAttention,
    TemporalAttentionCache,
};
pub use gradcheck::{collect_grads, grad_check, relative_error, GradCheckReport, GradFailure, REL_FLOOR};
pub use gru::{GruCache, GruCell};
pub use linear::{Linear, Mlp, MlpCache, MlpShape};
pub use tensor::Tensor;
pub use time::TimeEncoder;

/// Anything owning trainable tensors, visited in a fixed order.
pub trait Module {
    fn parameters(&self) -> Vec<&Tensor>;
    fn parameters_mut(&mut self) -> Vec<&mut Tensor>;

    fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    fn num_parameters(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }
}

impl Module for Vec<Tensor> {
    fn parameters(&self) -> Vec<&Tensor> {
        self.iter().collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.iter_mut().collect()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(logit)` against `label`, computed
/// stably from the logit. Its derivative w.r.t. the logit is
/// `sigmoid(logit) − label`.
pub fn bce_with_logits(logit: f64, label: f64) -> f64 {
    logit.max(0.0) - logit * label + (-logit.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_at_zero_logit_is_ln2() {
        assert!((bce_with_logits(0.0, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((bce_with_logits(0.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn bce_matches_probability_form() {
        for &l in &[-3.0, -0.2, 0.7, 4.0] {
            let p = sigmoid(l);
            assert!((bce_with_logits(l, 1.0) + p.ln()).abs() < 1e-12);
            assert!((bce_with_logits(l, 0.0) + (1.0 - p).ln()).abs() < 1e-12);
        }
    }
}
