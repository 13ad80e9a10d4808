//! Student-t tail probabilities, quantiles, and median helpers.

use statrs::distribution::{ContinuousCDF, StudentsT};

fn student(dof: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom")
}

/// `P(T_dof > t)`.
pub fn t_upper_tail(t: f64, dof: f64) -> f64 {
    if t == f64::INFINITY {
        return 0.0;
    }
    if t == f64::NEG_INFINITY {
        return 1.0;
    }
    student(dof).sf(t).clamp(0.0, 1.0)
}

/// Quantile `q` of the standard t distribution with `dof` degrees of freedom.
pub fn t_quantile(q: f64, dof: f64) -> f64 {
    student(dof).inverse_cdf(q)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Standard median; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let v = sorted(values);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Smallest value strictly above the median, or the median if none exists.
pub fn next_distinct_above_median(values: &[f64]) -> f64 {
    let med = median(values);
    sorted(values).into_iter().find(|v| *v > med).unwrap_or(med)
}
