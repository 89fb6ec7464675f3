use super::{HilbertError, Operator, DIM};

/// Hermiticity tolerance accepted by [`max_eigenvalue`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

const SWEEP_LIMIT: usize = 100;

/// Largest eigenvalue of a Hermitian operator.
///
/// `H = A + iB` is embedded as the real symmetric `[[A, −B], [B, A]]`, whose
/// spectrum is that of `H` with every eigenvalue doubled, and diagonalized by
/// cyclic Jacobi rotations.
pub fn max_eigenvalue(op: &Operator) -> Result<f64, HilbertError> {
    Ok(eigenvalues(op)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// All 16 eigenvalues in ascending order.
pub fn eigenvalues(op: &Operator) -> Result<Vec<f64>, HilbertError> {
    if !op.is_finite() {
        return Err(HilbertError::NonFinite);
    }
    let defect = op.hermiticity_defect();
    if defect > HERMITIAN_TOLERANCE {
        return Err(HilbertError::NotHermitian(defect));
    }
    const N: usize = 2 * DIM;
    let mut a = vec![[0.0f64; N]; N];
    for r in 0..DIM {
        for c in 0..DIM {
            // Symmetrize to absorb the tolerated defect.
            let z = (op[(r, c)] + op[(c, r)].conj()) * 0.5;
            a[r][c] = z.re;
            a[r + DIM][c + DIM] = z.re;
            a[r][c + DIM] = -z.im;
            a[r + DIM][c] = z.im;
        }
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    for _ in 0..SWEEP_LIMIT {
        let off: f64 = (0..N)
            .flat_map(|p| (0..N).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                if a[p][q].abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (upper, lower) = a.split_at_mut(q);
                for (apk, aqk) in upper[p].iter_mut().zip(lower[0].iter_mut()) {
                    let (x, y) = (*apk, *aqk);
                    *apk = c * x - s * y;
                    *aqk = s * x + c * y;
                }
            }
        }
    }
    let mut diag: Vec<f64> = (0..N).map(|i| a[i][i]).collect();
    diag.sort_by(f64::total_cmp);
    // Each eigenvalue occurs twice in the embedding.
    Ok(diag.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::word_matrix;
    use num_complex::Complex64;

    #[test]
    fn simple_spectra() {
        assert!((max_eigenvalue(&Operator::identity()).unwrap() - 1.0).abs() < 1e-12);
        let x1 = word_matrix(&"X1".parse().unwrap());
        assert!((max_eigenvalue(&x1).unwrap() - 1.0).abs() < 1e-12);
        let eig = eigenvalues(&x1).unwrap();
        assert_eq!(eig.iter().filter(|&&e| (e + 1.0).abs() < 1e-12).count(), 8);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut op = Operator::zeros();
        op[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(max_eigenvalue(&op), Err(HilbertError::NotHermitian(_))));
    }

    #[test]
    fn diagonal_matrix() {
        let mut op = Operator::zeros();
        for i in 0..DIM {
            op[(i, i)] = Complex64::new(i as f64 - 7.5, 0.0);
        }
        assert!((max_eigenvalue(&op).unwrap() - 7.5).abs() < 1e-12);
    }
}
