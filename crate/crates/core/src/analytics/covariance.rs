use nalgebra::DMatrix;

use crate::error::{Result, SptError};
use crate::portfolio::GeneratingFunction;

fn check_square(a: &DMatrix<f64>, n: usize) -> Result<()> {
    if a.nrows() != n || a.ncols() != n {
        return Err(SptError::Dimension { expected: n, found: if a.nrows() != n { a.nrows() } else { a.ncols() } });
    }
    Ok(())
}

/// `τ_ij = (μ − e_i)' a (μ − e_j)`.
pub fn relative_covariance(a: &DMatrix<f64>, mu: &[f64]) -> Result<DMatrix<f64>> {
    let mut tau = DMatrix::zeros(mu.len(), mu.len());
    relative_covariance_into(a, mu, &mut tau)?;
    Ok(tau)
}

pub fn relative_covariance_into(a: &DMatrix<f64>, mu: &[f64], tau: &mut DMatrix<f64>) -> Result<()> {
    let n = mu.len();
    check_square(a, n)?;
    if tau.nrows() != n || tau.ncols() != n {
        *tau = DMatrix::zeros(n, n);
    }
    let mut amu = vec![0.0; n];
    for (i, v) in amu.iter_mut().enumerate() {
        *v = (0..n).map(|j| a[(i, j)] * mu[j]).sum();
    }
    let q: f64 = amu.iter().zip(mu).map(|(x, m)| x * m).sum();
    for i in 0..n {
        for j in 0..n {
            tau[(i, j)] = a[(i, j)] - amu[i] - amu[j] + q;
        }
    }
    Ok(())
}

/// `γ*_π = ½(Σ_i π_i a_ii − π' a π)`.
///
/// Equally valid with the relative covariance `τ` in place of `a`.
pub fn excess_growth(pi: &[f64], a: &DMatrix<f64>) -> Result<f64> {
    let n = pi.len();
    check_square(a, n)?;
    let mut diag = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        diag += pi[i] * a[(i, i)];
        let row: f64 = (0..n).map(|j| a[(i, j)] * pi[j]).sum();
        quad += pi[i] * row;
    }
    Ok(0.5 * (diag - quad))
}

/// Drift process `𝔤 = −(1/2G) Σ_ij D²_ij G(μ) μ_i μ_j τ_ij`.
pub fn fgp_drift(g: &dyn GeneratingFunction, mu: &[f64], tau: &DMatrix<f64>) -> Result<f64> {
    let mut h = DMatrix::zeros(0, 0);
    fgp_drift_with(g, mu, tau, &mut h)
}

/// [`fgp_drift`] with a caller-owned Hessian buffer.
pub fn fgp_drift_with(g: &dyn GeneratingFunction, mu: &[f64], tau: &DMatrix<f64>, h: &mut DMatrix<f64>) -> Result<f64> {
    check_square(tau, mu.len())?;
    g.scaled_hessian(mu, h)?;
    if let Some(bad) = h.iter().find(|x| !x.is_finite()) {
        return Err(SptError::Domain(format!("non-finite second derivative {bad} of the generating function")));
    }
    Ok(-0.5 * h.component_mul(tau).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::{dwp_weights, ConstantGenerator, PowerGenerator};
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_asset_isotropic() {
        let a = DMatrix::identity(2, 2) * 0.04;
        let tau = relative_covariance(&a, &[0.5, 0.5]).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.02, -0.02, -0.02, 0.02]);
        assert!((tau - want).amax() < 1e-15);
        assert_eq!(relative_covariance(&DMatrix::zeros(2, 2), &[0.3, 0.7]).unwrap(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn tau_annihilates_mu() {
        let a = DMatrix::from_row_slice(3, 3, &[0.09, 0.01, -0.02, 0.01, 0.04, 0.0, -0.02, 0.0, 0.05]);
        let mu = [0.5, 0.3, 0.2];
        let tau = relative_covariance(&a, &mu).unwrap();
        let v = &tau * nalgebra::DVector::from_column_slice(&mu);
        assert!(v.amax() < 1e-16);
    }

    #[test]
    fn excess_growth_examples() {
        let a = DMatrix::identity(2, 2) * 0.04;
        assert_eq!(excess_growth(&[1.0, 0.0], &a).unwrap(), 0.0);
        assert_abs_diff_eq!(excess_growth(&[0.5, 0.5], &a).unwrap(), 0.01, epsilon = 1e-16);
        assert!(excess_growth(&[0.5, 0.5], &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn drift_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[0.05, 0.01, 0.01, 0.03]);
        let mu = [0.7, 0.3];
        let tau = relative_covariance(&a, &mu).unwrap();
        assert_eq!(fgp_drift(&ConstantGenerator, &mu, &tau).unwrap(), 0.0);
        let p = -0.5;
        let pi = dwp_weights(&mu, p).unwrap();
        let g = fgp_drift(&PowerGenerator::diversity(p), &mu, &tau).unwrap();
        assert_abs_diff_eq!(g, (1.0 - p) * excess_growth(&pi, &a).unwrap(), epsilon = 1e-15);
    }
}
