use crate::error::{Error, Result};

pub const FD_STEP: f64 = 1e-5;

/// Compare an analytic gradient against central finite differences.
///
/// Returns `max_k |analytic_k − fd_k| / max(1, |fd_k|)`.
pub fn grad_check<F, G>(f: F, grad: G, theta: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let f0 = f(theta);
    if !f0.is_finite() {
        return Err(Error::Numeric(format!("f(theta) = {f0}")));
    }
    let analytic = grad(theta);
    if analytic.len() != theta.len() {
        return Err(Error::Shape(format!(
            "gradient has {} entries for {} parameters",
            analytic.len(),
            theta.len()
        )));
    }
    let mut probe = theta.to_vec();
    let mut worst = 0.0f64;
    for k in 0..theta.len() {
        let orig = probe[k];
        probe[k] = orig + FD_STEP;
        let fp = f(&probe);
        probe[k] = orig - FD_STEP;
        let fm = f(&probe);
        probe[k] = orig;
        let fd = (fp - fm) / (2.0 * FD_STEP);
        if !fd.is_finite() || !analytic[k].is_finite() {
            return Err(Error::Numeric(format!("coordinate {k}: fd {fd}, analytic {}", analytic[k])));
        }
        worst = worst.max((analytic[k] - fd).abs() / fd.abs().max(1.0));
    }
    Ok(worst)
}
