//! Catalog of admissible target matrices `T_d`.
//!
//! Skew-symmetric templates (H1-H7) pair with the zero-`c1` map setting;
//! the normal templates (E1, E2, TdE) require `c1 != 0` together with
//! positive definiteness of `c1 (T_d + T_d^T)`. Targets outside this
//! catalog are rejected rather than attempted.

use super::{MapParameters, SequenceError};
use crate::matrix::Mat;
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetFamily {
    /// `[[0, -I], [I, 0]]`
    H1,
    /// `[[aQ, -I], [I, bQ]]`
    H2,
    /// `[[aQ, -I], [I, -bQ]]`
    H3,
    /// `[[Q, -I], [I, 0]]`
    H4,
    /// `[[0, -I], [I, Q]]`
    H5,
    /// `[[0, -I-Q], [I-Q, 0]]`
    H6,
    /// `[[aQ, -I-cQ], [I-cQ, bQ]]`
    H7,
    /// `[[aI, -I], [I, aI]]`
    E1,
    /// `[[Q, -I], [I, Q]]` with `Q` normal
    E2,
    /// `[[diag(gamma), -I], [I, diag(gamma)]]`
    TdE,
}

impl TargetFamily {
    pub fn is_skew(&self) -> bool {
        matches!(
            self,
            TargetFamily::H1
                | TargetFamily::H2
                | TargetFamily::H3
                | TargetFamily::H4
                | TargetFamily::H5
                | TargetFamily::H6
                | TargetFamily::H7
        )
    }

    pub fn tag(&self) -> &'static str {
        match self {
            TargetFamily::H1 => "h1",
            TargetFamily::H2 => "h2",
            TargetFamily::H3 => "h3",
            TargetFamily::H4 => "h4",
            TargetFamily::H5 => "h5",
            TargetFamily::H6 => "h6",
            TargetFamily::H7 => "h7",
            TargetFamily::E1 => "e1",
            TargetFamily::E2 => "e2",
            TargetFamily::TdE => "td_e",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "h1" => TargetFamily::H1,
            "h2" => TargetFamily::H2,
            "h3" => TargetFamily::H3,
            "h4" => TargetFamily::H4,
            "h5" => TargetFamily::H5,
            "h6" => TargetFamily::H6,
            "h7" => TargetFamily::H7,
            "e1" => TargetFamily::E1,
            "e2" => TargetFamily::E2,
            "td_e" | "tde" => TargetFamily::TdE,
            _ => return None,
        })
    }
}

/// A target template plus its scalar parameters and dimension.
#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub family: TargetFamily,
    pub n: usize,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    /// Skew ingredient for H2-H7, normal ingredient for E2 (n x n).
    pub q_matrix: Option<Mat>,
    /// Diagonal values for the TdE template.
    pub gammas: Option<Vec<f64>>,
}

impl TargetSpec {
    pub fn new(family: TargetFamily, n: usize) -> Self {
        Self {
            family,
            n,
            a: None,
            b: None,
            c: None,
            q_matrix: None,
            gammas: None,
        }
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = Some(a);
        self
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = Some(b);
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = Some(c);
        self
    }

    pub fn with_q(mut self, q: Mat) -> Self {
        self.q_matrix = Some(q);
        self
    }

    pub fn with_gammas(mut self, gammas: Vec<f64>) -> Self {
        self.gammas = Some(gammas);
        self
    }

    fn q_or_zero(&self) -> Result<Mat, SequenceError> {
        match &self.q_matrix {
            None => Ok(Mat::zeros(self.n, self.n)),
            Some(q) => {
                if q.rows() != self.n || q.cols() != self.n {
                    return Err(SequenceError::IncompatibleParams {
                        detail: format!(
                            "Q must be {0}x{0}, got {1}x{2}",
                            self.n,
                            q.rows(),
                            q.cols()
                        ),
                    });
                }
                Ok(q.clone())
            }
        }
    }

    fn skew_q(&self) -> Result<Mat, SequenceError> {
        let q = self.q_or_zero()?;
        let defect = q.add(&q.transpose()).max_abs();
        if defect > 1e-12 * q.max_abs().max(1.0) {
            return Err(SequenceError::IncompatibleParams {
                detail: format!("Q must be skew-symmetric, defect {defect:.3e}"),
            });
        }
        Ok(q.sub(&q.transpose()).scale(0.5))
    }

    fn param(&self, v: Option<f64>, name: &str) -> Result<f64, SequenceError> {
        v.ok_or_else(|| SequenceError::IncompatibleParams {
            detail: format!("family {} requires parameter {name}", self.family.tag()),
        })
    }

    fn positive(&self, v: f64, name: &str) -> Result<f64, SequenceError> {
        if v > 0.0 {
            Ok(v)
        } else {
            Err(SequenceError::IncompatibleParams {
                detail: format!("parameter {name} must be positive, got {v}"),
            })
        }
    }

    /// Build the `2n x 2n` target matrix and validate it against the map
    /// parameters (skew templates must be skew; normal templates need
    /// `c1 (T_d + T_d^T)` positive definite).
    pub fn materialize(&self, params: &MapParameters) -> Result<Mat, SequenceError> {
        let n = self.n;
        if n == 0 {
            return Err(SequenceError::IncompatibleParams {
                detail: "dimension n must be at least 1".into(),
            });
        }
        let eye = Mat::identity(n);
        let neg_eye = eye.scale(-1.0);
        let assemble = |t11: &Mat, t12: &Mat, t21: &Mat, t22: &Mat| {
            let mut t = Mat::zeros(2 * n, 2 * n);
            t.set_block(0, 0, t11);
            t.set_block(0, n, t12);
            t.set_block(n, 0, t21);
            t.set_block(n, n, t22);
            t
        };

        let td = match self.family {
            TargetFamily::H1 => assemble(&Mat::zeros(n, n), &neg_eye, &eye, &Mat::zeros(n, n)),
            TargetFamily::H2 => {
                let q = self.skew_q()?;
                let a = self.positive(self.param(self.a, "a")?, "a")?;
                let b = self.positive(self.param(self.b, "b")?, "b")?;
                assemble(&q.scale(a), &neg_eye, &eye, &q.scale(b))
            }
            TargetFamily::H3 => {
                let q = self.skew_q()?;
                let a = self.positive(self.param(self.a, "a")?, "a")?;
                let b = self.positive(self.param(self.b, "b")?, "b")?;
                assemble(&q.scale(a), &neg_eye, &eye, &q.scale(-b))
            }
            TargetFamily::H4 => {
                let q = self.skew_q()?;
                assemble(&q, &neg_eye, &eye, &Mat::zeros(n, n))
            }
            TargetFamily::H5 => {
                let q = self.skew_q()?;
                assemble(&Mat::zeros(n, n), &neg_eye, &eye, &q)
            }
            TargetFamily::H6 => {
                let q = self.skew_q()?;
                assemble(
                    &Mat::zeros(n, n),
                    &neg_eye.sub(&q),
                    &eye.sub(&q),
                    &Mat::zeros(n, n),
                )
            }
            TargetFamily::H7 => {
                let q = self.skew_q()?;
                let a = self.positive(self.param(self.a, "a")?, "a")?;
                let b = self.positive(self.param(self.b, "b")?, "b")?;
                let c = self.param(self.c, "c")?;
                if a * b <= c * c {
                    return Err(SequenceError::IncompatibleParams {
                        detail: format!("H7 requires a*b > c^2, got a={a} b={b} c={c}"),
                    });
                }
                assemble(
                    &q.scale(a),
                    &neg_eye.sub(&q.scale(c)),
                    &eye.sub(&q.scale(c)),
                    &q.scale(b),
                )
            }
            TargetFamily::E1 => {
                let a = self.param(self.a, "a")?;
                assemble(&eye.scale(a), &neg_eye, &eye, &eye.scale(a))
            }
            TargetFamily::E2 => {
                let q = self.q_or_zero()?;
                let qt = q.transpose();
                let comm = q.matmul(&qt).sub(&qt.matmul(&q)).max_abs();
                if comm > 1e-10 * q.max_abs().max(1.0) {
                    return Err(SequenceError::IncompatibleParams {
                        detail: format!("E2 requires a normal Q, defect {comm:.3e}"),
                    });
                }
                assemble(&q, &neg_eye, &eye, &q)
            }
            TargetFamily::TdE => {
                let gammas = self.gammas.as_ref().ok_or(SequenceError::IncompatibleParams {
                    detail: "TdE requires diagonal gammas (or derive them from sigma)".into(),
                })?;
                if gammas.len() != n {
                    return Err(SequenceError::IncompatibleParams {
                        detail: format!("TdE needs {n} gammas, got {}", gammas.len()),
                    });
                }
                let diag = Mat::from_fn(n, n, |i, j| if i == j { gammas[i] } else { 0.0 });
                assemble(&diag, &neg_eye, &eye, &diag)
            }
        };

        if self.family.is_skew() {
            let defect = td.add(&td.transpose()).max_abs();
            if defect > 1e-12 * td.max_abs().max(1.0) {
                return Err(SequenceError::IncompatibleParams {
                    detail: format!("template produced a non-skew matrix, defect {defect:.3e}"),
                });
            }
        } else {
            // Normal templates: c1 (T_d + T_d^T) must be positive definite.
            let sym = td.add(&td.transpose()).scale(params.c1());
            let (evals, _) = spectral::jacobi_symmetric(&sym)
                .map_err(SequenceError::Spectral)?;
            let min = evals.last().copied().unwrap_or(0.0);
            if min <= 0.0 {
                return Err(SequenceError::IncompatibleParams {
                    detail: format!(
                        "c1 (T_d + T_d^T) is not positive definite (min eigenvalue {min:.3e}, c1 = {})",
                        params.c1()
                    ),
                });
            }
        }
        Ok(td)
    }
}

/// The skew matrix with `+1` on the lower anti-diagonal and `-1` above it
/// (`q_ij = 1` when `i + j = n + 1` and `i > j`, 1-based). For rotation-type
/// targets this choice collapses the target rank and enables the shortest
/// sequence lengths.
pub fn counter_rotation(n: usize) -> Mat {
    Mat::from_fn(n, n, |i, j| {
        // 1-based: q_ij = 1 if i + j = n + 1 and i > j, -1 if i < j.
        let (i1, j1) = (i + 1, j + 1);
        if i1 + j1 == n + 1 {
            if i1 > j1 {
                1.0
            } else if i1 < j1 {
                -1.0
            } else {
                0.0
            }
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h1_template() {
        let td = TargetSpec::new(TargetFamily::H1, 2)
            .materialize(&MapParameters::two_point())
            .unwrap();
        assert_eq!(td[(0, 2)], -1.0);
        assert_eq!(td[(2, 0)], 1.0);
        assert_eq!(td.add(&td.transpose()).max_abs(), 0.0);
    }

    #[test]
    fn h7_constraint() {
        let spec = TargetSpec::new(TargetFamily::H7, 2)
            .with_a(1.0)
            .with_b(1.0)
            .with_c(2.0)
            .with_q(counter_rotation(2));
        assert!(matches!(
            spec.materialize(&MapParameters::two_point()),
            Err(SequenceError::IncompatibleParams { .. })
        ));
    }

    #[test]
    fn tde_definiteness_gate() {
        let spec = TargetSpec::new(TargetFamily::TdE, 2).with_gammas(vec![-0.5, -0.5]);
        // Single point: c1 = -1, c1 * 2 gamma = 1 > 0: accepted.
        assert!(spec.materialize(&MapParameters::single_point()).is_ok());
        // Two point: c1 = 0: rejected.
        assert!(spec.materialize(&MapParameters::two_point()).is_err());
        // Wrong sign gammas: rejected.
        let bad = TargetSpec::new(TargetFamily::TdE, 2).with_gammas(vec![0.5, 0.5]);
        assert!(bad.materialize(&MapParameters::single_point()).is_err());
    }

    #[test]
    fn counter_rotation_shape() {
        let q = counter_rotation(2);
        assert_eq!(q[(0, 1)], -1.0);
        assert_eq!(q[(1, 0)], 1.0);
        let q3 = counter_rotation(3);
        assert_eq!(q3[(0, 2)], -1.0);
        assert_eq!(q3[(2, 0)], 1.0);
        assert_eq!(q3[(1, 1)], 0.0);
        assert_eq!(q3.add(&q3.transpose()).max_abs(), 0.0);
    }

    #[test]
    fn e2_requires_normal_q() {
        let mut q = Mat::zeros(2, 2);
        q[(0, 1)] = 1.0; // nilpotent, not normal
        let spec = TargetSpec::new(TargetFamily::E2, 2).with_q(q);
        assert!(spec.materialize(&MapParameters::single_point()).is_err());
    }
}
