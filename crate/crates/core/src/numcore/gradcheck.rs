use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Outcome of a finite-difference comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index of the entry with the worst error.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub n_entries: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error <= tol
    }
}

/// `|a - n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Compares `analytic` against central differences of `f` around `params`.
///
/// `f` must be deterministic; it is evaluated twice at `params` and any
/// disagreement is a contract error.
pub fn finite_diff_check<F>(mut f: F, params: &[f64], analytic: &[f64], eps: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::Contract(format!("finite-difference step must be positive, got {eps}")));
    }
    if analytic.len() != params.len() {
        return Err(Error::shape("finite_diff_check", &[params.len()], &[analytic.len()]));
    }
    let first = f(params)?;
    let second = f(params)?;
    if first.to_bits() != second.to_bits() {
        return Err(Error::Contract(format!(
            "function is not deterministic: {first} vs {second}"
        )));
    }
    let mut p: Vec<f64> = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: analytic.first().copied().unwrap_or(0.0),
        numeric: 0.0,
        n_entries: params.len(),
    };
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let plus = f(&p)?;
        p[i] = orig - eps;
        let minus = f(&p)?;
        p[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let err = relative_error(analytic[i], numeric);
        if i == 0 || err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = i;
            report.analytic = analytic[i];
            report.numeric = numeric;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact_up_to_rounding() {
        let a = [0.7, -1.3, 2.2, 0.4];
        let w = [0.1, 0.2, -0.3, 0.9];
        let f = |p: &[f64]| Ok(p.iter().zip(&a).map(|(x, y)| x * y).sum());
        let r = finite_diff_check(f, &w, &a, 1e-5).unwrap();
        assert!(r.max_rel_error <= 1e-9, "{r:?}");
    }

    #[test]
    fn tanh_derivative() {
        let w = [0.37];
        let analytic = [1.0 - libm::tanh(0.37) * libm::tanh(0.37)];
        let r = finite_diff_check(|p: &[f64]| Ok(libm::tanh(p[0])), &w, &analytic, 1e-5).unwrap();
        assert!(r.max_rel_error <= 1e-6, "{r:?}");
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let w = [0.37, -0.8];
        let good: Vec<f64> = w.iter().map(|x| 2.0 * x).collect();
        let bad: Vec<f64> = good.iter().map(|g| 2.0 * g).collect();
        let f = |p: &[f64]| Ok(p.iter().map(|x| x * x).sum());
        let r = finite_diff_check(f, &w, &bad, 1e-5).unwrap();
        assert!(r.max_rel_error > 1e-3);
        assert!((r.max_rel_error - 0.5).abs() < 1e-6);
    }

    #[test]
    fn nondeterministic_function_is_rejected() {
        let mut calls = 0u32;
        let f = |_: &[f64]| {
            calls += 1;
            Ok(calls as f64)
        };
        assert!(matches!(
            finite_diff_check(f, &[1.0], &[0.0], 1e-5),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn non_positive_step_is_rejected() {
        let f = |_: &[f64]| Ok(0.0);
        assert!(finite_diff_check(f, &[1.0], &[0.0], 0.0).is_err());
        assert!(finite_diff_check(f, &[1.0], &[0.0], -1.0).is_err());
    }
}
