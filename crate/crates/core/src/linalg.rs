//! Small dense Hermitian linear algebra on per-point coefficient matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix; coefficient matrices are `n × n` with `n ≤ 4` in practice.
pub type CMatrix = DMatrix<Complex64>;

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn scalar(x: f64) -> CMatrix {
    CMatrix::from_element(1, 1, Complex64::new(x, 0.0))
}

/// Largest `|m_ij - conj(m_ji)|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + mᴴ) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    if m.nrows() == 1 {
        let d = m[(0, 0)];
        return if d.norm() > 0.0 && d.is_finite() {
            Some(CMatrix::from_element(1, 1, d.inv()))
        } else {
            None
        };
    }
    m.clone().try_inverse()
}

/// Real part of the determinant (exact for Hermitian input up to round-off).
pub fn det_real(m: &CMatrix) -> f64 {
    match m.nrows() {
        1 => m[(0, 0)].re,
        2 => (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re,
        _ => m.determinant().re,
    }
}

/// `tr(a · b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Positive definiteness via Cholesky.
pub fn is_positive_definite(m: &CMatrix) -> bool {
    if m.iter().any(|c| !c.is_finite()) {
        return false;
    }
    if m.nrows() == 1 {
        return m[(0, 0)].re > 0.0;
    }
    let n = m.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    true
}

/// Eigenvalues of the Hermitian form `a` relative to the positive definite
/// form `g`, i.e. the generalized problem `a x = λ g x`, ascending.
pub fn relative_eigenvalues(a: &CMatrix, g: &CMatrix) -> Option<Vec<f64>> {
    if a.nrows() == 1 {
        let gd = g[(0, 0)].re;
        if !(gd > 0.0) {
            return None;
        }
        return Some(vec![a[(0, 0)].re / gd]);
    }
    let chol = hermitian_part(g).cholesky()?;
    let l = chol.l();
    let l_inv = l.try_inverse()?;
    let m = &l_inv * hermitian_part(a) * l_inv.adjoint();
    let mut eig: Vec<f64> = hermitian_part(&m).symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Some(eig)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)].re];
    }
    let mut eig: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    eig
}

/// `Σ ξ^i conj(η^j) m_{ij̄}`.
pub fn hermitian_pairing(m: &CMatrix, xi: &[Complex64], eta: &[Complex64]) -> Complex64 {
    let n = m.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += xi[i] * eta[j].conj() * m[(i, j)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn relative_eigenvalues_of_scaled_metric() {
        let g = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let a = &g * c(3.0, 0.0);
        let eig = relative_eigenvalues(&a, &g).unwrap();
        assert!((eig[0] - 3.0).abs() < 1e-12 && (eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn positive_definiteness() {
        let g = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(1.0, 0.0)]);
        assert!(!is_positive_definite(&g));
        assert!(is_positive_definite(&CMatrix::identity(3, 3)));
        assert!(!is_positive_definite(&scalar(-1.0)));
    }

    #[test]
    fn trace_product_matches_product_trace() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 2.0), c(3.0, 0.0), c(0.0, 1.0), c(-1.0, 0.5)]);
        let b = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(1.0, -1.0), c(2.0, 0.0), c(0.0, 3.0)]);
        assert!((trace_product(&a, &b) - (&a * &b).trace()).norm() < 1e-14);
    }
}
