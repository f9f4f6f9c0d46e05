//! Central finite-difference verification of analytic gradients.

use serde::{Deserialize, Serialize};

use super::Module;

/// Denominator floor of [`relative_error`]; below it the check is absolute.
pub const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradFailure {
    pub tensor: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub failures: Vec<GradFailure>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Current gradient buffers of `model`, zeros where none was allocated.
pub fn collect_grads<M: Module + ?Sized>(model: &M) -> Vec<Vec<f64>> {
    model
        .parameters()
        .iter()
        .map(|p| p.grad().map_or_else(|| vec![0.0; p.len()], <[f64]>::to_vec))
        .collect()
}

/// Compare `analytic` (one buffer per parameter tensor of `model`) against
/// `(f(θ+ε) − f(θ−ε)) / 2ε` for every coordinate. `model` is restored.
pub fn grad_check<M: Module + ?Sized>(
    model: &mut M,
    analytic: &[Vec<f64>],
    mut f: impl FnMut(&M) -> f64,
    eps: f64,
    tolerance: f64,
) -> GradCheckReport {
    let sizes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    assert_eq!(sizes.len(), analytic.len(), "one analytic buffer per tensor");
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        tolerance,
        failures: Vec::new(),
    };
    for (t, &n) in sizes.iter().enumerate() {
        assert_eq!(analytic[t].len(), n, "analytic buffer {t} length");
        for i in 0..n {
            let orig = model.parameters()[t].values()[i];
            model.parameters_mut()[t].values_mut()[i] = orig + eps;
            let plus = f(model);
            model.parameters_mut()[t].values_mut()[i] = orig - eps;
            let minus = f(model);
            model.parameters_mut()[t].values_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[t][i];
            let rel = relative_error(a, numeric);
            report.checked += 1;
            if rel > report.max_rel_error || rel.is_nan() {
                report.max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
            }
            if !(rel < tolerance) {
                report.failures.push(GradFailure {
                    tensor: t,
                    index: i,
                    analytic: a,
                    numeric,
                    rel_error: rel,
                });
            }
        }
    }
    report
}
