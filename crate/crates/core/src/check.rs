//! Finite-difference gradient checking.
//!
//! These helpers only evaluate the scalar function they are given, so they
//! stay independent of any analytic gradient they are compared against.

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` for every `i`.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `max_i |a_i - n_i| / max(||a||_inf, ||n||_inf)`.
///
/// Normalizing by the largest component rather than per component keeps
/// near-zero entries of an otherwise well-scaled gradient from dominating.
/// Returns 0 when both vectors are identically zero.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let scale = analytic
        .iter()
        .chain(numeric)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let x = [1.0, -2.0, 0.5];
        let g = central_difference(|v| v.iter().map(|a| a * a).sum(), &x, 1e-5);
        let exact: Vec<f64> = x.iter().map(|a| 2.0 * a).collect();
        assert!(max_relative_error(&exact, &g) < 1e-9);
    }

    #[test]
    fn zero_vectors() {
        assert_eq!(max_relative_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
    }
}
