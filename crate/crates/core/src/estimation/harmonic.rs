use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::{Error, Result};

/// Smallest eigenvalue of the unit-diagonal normal matrix below which the
/// design is treated as rank deficient.
const CONDITION_FLOOR: f64 = 1e-10;

/// Weighted least-squares fit of `y = c₀ + c₁ cos ωx + c₂ sin ωx`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicFit {
    pub coefficients: Vector3<f64>,
    /// Inverse of the weighted normal matrix.
    pub covariance: Matrix3<f64>,
    pub chi_squared: f64,
}

impl HarmonicFit {
    pub fn evaluate(&self, omega: f64, x: f64) -> f64 {
        let c = &self.coefficients;
        c[0] + c[1] * (omega * x).cos() + c[2] * (omega * x).sin()
    }
}

/// Fits `(x, y, weight)` triples.
pub(crate) fn fit_harmonic(points: &[(f64, f64, f64)], omega: f64) -> Result<HarmonicFit> {
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for &(x, y, w) in points {
        let row = Vector3::new(1.0, (omega * x).cos(), (omega * x).sin());
        normal += row * row.transpose() * w;
        rhs += row * (w * y);
    }
    let diag = normal.diagonal();
    // diag[0] is the total weight; a column carrying a negligible share of it
    // only holds rounding noise (e.g. sin at multiples of π).
    if diag.iter().any(|d| !d.is_finite() || *d <= CONDITION_FLOOR * diag[0]) {
        return Err(Error::DegenerateDesign(
            "a basis function vanishes at every sample".into(),
        ));
    }
    let scale = diag.map(|d| 1.0 / d.sqrt());
    let scaled = Matrix3::from_fn(|i, j| normal[(i, j)] * scale[i] * scale[j]);
    let min_eig = SymmetricEigen::new(scaled)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < CONDITION_FLOOR {
        return Err(Error::DegenerateDesign(format!(
            "basis {{1, cos, sin}} is rank deficient at these samples (min eigenvalue {min_eig:e})"
        )));
    }
    let covariance = normal
        .cholesky()
        .ok_or_else(|| Error::DegenerateDesign("normal matrix not positive definite".into()))?
        .inverse();
    let coefficients = covariance * rhs;
    let mut fit = HarmonicFit {
        coefficients,
        covariance,
        chi_squared: 0.0,
    };
    fit.chi_squared = points
        .iter()
        .map(|&(x, y, w)| w * (y - fit.evaluate(omega, x)).powi(2))
        .sum();
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exact_on_three_generic_points() {
        let truth = |x: f64| 0.3 - 0.2 * (2.0 * x).cos() + 0.05 * (2.0 * x).sin();
        let pts: Vec<_> = [0.1, 0.9, 2.2].iter().map(|&x| (x, truth(x), 1.0)).collect();
        let fit = fit_harmonic(&pts, 2.0).unwrap();
        assert!((fit.coefficients - Vector3::new(0.3, -0.2, 0.05)).norm() < 1e-12);
        assert!(fit.chi_squared < 1e-24);
    }

    #[test]
    fn phases_equal_mod_pi_are_degenerate() {
        let pts: Vec<_> = [0.0, PI, 2.0 * PI, 3.0 * PI].iter().map(|&x| (x, 1.0, 1.0)).collect();
        assert!(matches!(fit_harmonic(&pts, 1.0), Err(Error::DegenerateDesign(_))));
    }
}
