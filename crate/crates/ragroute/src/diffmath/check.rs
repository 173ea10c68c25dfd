//! Finite-difference gradient verification.

use crate::error::{Error, Result};

/// Compares an analytic gradient against central finite differences of
/// `loss` over a flat parameter vector. Returns the maximum relative
/// error, with denominator `max(|analytic|, |numeric|, 1e-8)`.
pub fn finite_diff_check<F>(
    mut loss: F,
    params: &[f64],
    analytic: &[f64],
    eps: f64,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(1e-6..=1e-3).contains(&eps) {
        return Err(Error::Invalid(format!("eps must lie in [1e-6, 1e-3], got {eps}")));
    }
    if params.len() != analytic.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameters vs {} analytic gradient entries",
            params.len(),
            analytic.len()
        )));
    }
    let mut work = params.to_vec();
    let mut max_rel = 0.0f64;
    for i in 0..params.len() {
        let orig = work[i];
        work[i] = orig + eps;
        let up = loss(&work)?;
        work[i] = orig - eps;
        let down = loss(&work)?;
        work[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss not finite while perturbing parameter {i}"
            )));
        }
        let numeric = (up - down) / (2.0 * eps);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max((analytic[i] - numeric).abs() / denom);
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_exact() {
        // loss = 0.5 |p|^2, grad = p.
        let params = vec![0.3, -1.2, 2.5, 0.0];
        let analytic = params.clone();
        let max_rel = finite_diff_check(
            |p| Ok(0.5 * p.iter().map(|v| v * v).sum::<f64>()),
            &params,
            &analytic,
            1e-4,
        )
        .unwrap();
        assert!(max_rel < 1e-9, "max rel {max_rel}");
    }

    #[test]
    fn unused_parameter_has_zero_gradient() {
        // loss depends only on p[0]; both sides of the check agree at ~0
        // for p[1].
        let params = vec![1.0, 5.0];
        let analytic = vec![2.0, 0.0];
        let max_rel =
            finite_diff_check(|p| Ok(p[0] * p[0]), &params, &analytic, 1e-4).unwrap();
        assert!(max_rel < 1e-9, "max rel {max_rel}");
    }

    #[test]
    fn eps_outside_supported_band_rejected() {
        assert!(finite_diff_check(|_| Ok(0.0), &[1.0], &[0.0], 1e-2).is_err());
        assert!(finite_diff_check(|_| Ok(0.0), &[1.0], &[0.0], 1e-7).is_err());
    }

    #[test]
    fn wrong_gradient_is_flagged() {
        let params = vec![1.0];
        let max_rel = finite_diff_check(|p| Ok(p[0] * p[0]), &params, &[1.0], 1e-4).unwrap();
        assert!(max_rel > 0.4, "max rel {max_rel}");
    }
}
