//! Central finite-difference gradient checking.

use crate::error::{Error, Result};
use crate::numeric::params::ParamSet;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate attaining `max_rel_error`.
    pub worst: Option<(String, usize)>,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub coordinates: usize,
}

/// `|a - n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares `analytic` against central differences of `loss_fn` around
/// `params`, one coordinate at a time, returning the worst relative error.
pub fn finite_diff_check<F>(
    mut loss_fn: F,
    params: &ParamSet,
    analytic: &ParamSet,
    eps: f64,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamSet) -> Result<f64>,
{
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(Error::Input(format!(
            "finite-difference eps {eps} outside (0, 1e-2]"
        )));
    }
    params.check_compatible(analytic)?;

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        coordinates: 0,
    };
    let names: Vec<String> = params.names().map(str::to_owned).collect();
    for name in names {
        let n = params.get(&name)?.len();
        for index in 0..n {
            let original = params.get(&name)?.data()[index];

            probe.get_mut(&name)?.data_mut()[index] = original + eps;
            let plus = loss_fn(&probe)?;
            probe.get_mut(&name)?.data_mut()[index] = original - eps;
            let minus = loss_fn(&probe)?;
            probe.get_mut(&name)?.data_mut()[index] = original;

            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::ProbeFailure { name, index });
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic.get(&name)?.data()[index];
            let err = relative_error(a, numeric);
            report.coordinates += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((name.clone(), index));
                report.analytic_at_worst = a;
                report.numeric_at_worst = numeric;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::tensor::Tensor;

    fn theta(v: Vec<f64>) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("theta", Tensor::from_vec(v));
        p
    }

    fn sum_sq(p: &ParamSet) -> Result<f64> {
        Ok(p.get("theta")?.data().iter().map(|x| x * x).sum())
    }

    #[test]
    fn quadratic_exact() {
        let r = finite_diff_check(sum_sq, &theta(vec![1.0, 2.0]), &theta(vec![2.0, 4.0]), 1e-5)
            .unwrap();
        assert!(r.max_rel_error < 1e-8, "{r:?}");
    }

    #[test]
    fn wrong_gradient_is_flagged_at_its_coordinate() {
        let r = finite_diff_check(sum_sq, &theta(vec![1.0, 2.0]), &theta(vec![2.0, 5.0]), 1e-5)
            .unwrap();
        // |5 - 4| / (5 + 4)
        assert!((r.max_rel_error - 1.0 / 9.0).abs() < 1e-8, "{r:?}");
        assert_eq!(r.worst, Some(("theta".to_string(), 1)));
    }

    #[test]
    fn constant_loss_zero_gradient() {
        let r = finite_diff_check(
            |_| Ok(3.25),
            &theta(vec![0.3, -0.7]),
            &theta(vec![0.0, 0.0]),
            1e-5,
        )
        .unwrap();
        assert!(r.max_rel_error < 1e-10);
    }

    #[test]
    fn non_finite_probe_names_coordinate() {
        let err = finite_diff_check(
            |p| {
                let x = p.get("theta")?.data()[1];
                Ok(if x > 2.0 { f64::NAN } else { x })
            },
            &theta(vec![0.0, 2.0]),
            &theta(vec![0.0, 1.0]),
            1e-3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ProbeFailure { ref name, index: 1 } if name == "theta"));
    }

    #[test]
    fn rejects_bad_eps() {
        let p = theta(vec![1.0]);
        assert!(finite_diff_check(sum_sq, &p, &p, 0.0).is_err());
        assert!(finite_diff_check(sum_sq, &p, &p, 0.1).is_err());
    }
}
