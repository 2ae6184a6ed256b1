//! Built-in test objectives used by the presets and the verification suite.

use crate::engine::ObjectivePort;
use crate::matrix::norm2;

/// `J(x) = ||x - target||^2`, with exact gradient `2 (x - target)`.
pub fn quadratic(target: &[f64]) -> ObjectivePort {
    let t = target.to_vec();
    let tg = target.to_vec();
    ObjectivePort::new(move |x: &[f64]| {
        x.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum()
    })
    .with_gradient(move |x: &[f64]| x.iter().zip(&tg).map(|(a, b)| 2.0 * (a - b)).collect())
}

/// `J(x) = ||x - target + amplitude sin(omega x)||^2` (sin componentwise):
/// a quadratic bowl covered with a grid of ripple-induced local minima.
pub fn rippled_quadratic(target: &[f64], amplitude: f64, omega: f64) -> ObjectivePort {
    let t = target.to_vec();
    let tg = target.to_vec();
    ObjectivePort::new(move |x: &[f64]| {
        x.iter()
            .zip(&t)
            .map(|(a, b)| {
                let v = a - b + amplitude * (omega * a).sin();
                v * v
            })
            .sum()
    })
    .with_gradient(move |x: &[f64]| {
        x.iter()
            .zip(&tg)
            .map(|(a, b)| {
                let v = a - b + amplitude * (omega * a).sin();
                2.0 * v * (1.0 + amplitude * omega * (omega * a).cos())
            })
            .collect()
    })
}

/// `J(x) = ||x||_2`, non-smooth at the minimizer; no gradient oracle.
pub fn euclidean_norm() -> ObjectivePort {
    ObjectivePort::new(|x: &[f64]| norm2(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_value_and_gradient() {
        let mut port = quadratic(&[1.0, 2.0]);
        assert_eq!(port.evaluate(&[1.0, 2.0]), 0.0);
        assert_eq!(port.evaluate(&[2.0, 2.0]), 1.0);
        let g = port.gradient(&[2.0, 4.0]).unwrap();
        assert_eq!(g, vec![2.0, 4.0]);
        assert_eq!(port.eval_count(), 2);
    }

    #[test]
    fn ripple_gradient_matches_fd() {
        let port = rippled_quadratic(&[1.0, 2.0], 0.5, 10.0 * std::f64::consts::PI);
        let mut probe = rippled_quadratic(&[1.0, 2.0], 0.5, 10.0 * std::f64::consts::PI);
        let x = [0.37, 1.61];
        let g = port.gradient(&x).unwrap();
        let h = 1e-7;
        for i in 0..2 {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let fd = (probe.evaluate(&xp) - probe.evaluate(&xm)) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-5, "component {i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn norm_objective() {
        let mut port = euclidean_norm();
        assert_eq!(port.evaluate(&[3.0, 4.0]), 5.0);
        assert!(!port.has_gradient());
    }
}
