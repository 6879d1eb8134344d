use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance (scaled by `max(1, |2a|_F)`) for asymmetry and
/// negative eigenvalues.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Symmetric positive semidefinite root `sigma` with `sigma sigma^T = 2 a`.
///
/// `a` is row-major `n x n`. Eigenvalues of `2 a` slightly below zero (within
/// tolerance) are clamped to zero.
pub fn psd_sqrt(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch(format!("expected {} entries, got {}", n * n, a.len())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let two_a = DMatrix::from_row_slice(n, n, a) * 2.0;
    let scale = two_a.norm().max(1.0);
    let asym = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (a[i * n + j] - a[j * n + i]).abs())
        .fold(0.0, f64::max);
    if asym > PSD_TOLERANCE * scale {
        return Err(Error::NotSymmetric(asym));
    }
    if n == 1 {
        let v = two_a[(0, 0)];
        if v < -PSD_TOLERANCE * scale {
            return Err(Error::NotPsd(v / 2.0));
        }
        return Ok(vec![v.max(0.0).sqrt()]);
    }
    let sym = (&two_a + two_a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE * scale {
        return Err(Error::NotPsd(min / 2.0));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    let root = q * DMatrix::from_diagonal(&roots) * q.transpose();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = 0.5 * (root[(i, j)] + root[(j, i)]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(m: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| m[i * n + k] * m[k * n + j]).sum();
            }
        }
        out
    }

    fn frob(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn hand_checked_cases() {
        assert!(frob(&psd_sqrt(&[0.5, 0.0, 0.0, 0.5], 2).unwrap(), &[1.0, 0.0, 0.0, 1.0]) < 1e-15);
        let r = psd_sqrt(&[2.0, 0.0, 0.0, 0.5], 2).unwrap();
        assert!(frob(&r, &[2.0, 0.0, 0.0, 1.0]) < 1e-14);
        let r = psd_sqrt(&[1.25, 0.75, 0.75, 1.25], 2).unwrap();
        assert!(r.iter().zip([1.5, 0.5, 0.5, 1.5]).all(|(a, b)| (a - b).abs() < 1e-12), "{r:?}");
        assert!(frob(&square(&r, 2), &[2.5, 1.5, 1.5, 2.5]) < 1e-12);
    }

    #[test]
    fn clamps_noise_level_negatives() {
        let r = psd_sqrt(&[1.0, 1.0, 1.0, 1.0 - 1e-12], 2).unwrap();
        assert!(r.iter().all(|v| v.is_finite()));
        assert_eq!(psd_sqrt(&[-1e-12], 1).unwrap(), vec![0.0]);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(psd_sqrt(&[1.0, 0.0, 0.0, -0.1], 2), Err(Error::NotPsd(_))));
        assert!(matches!(psd_sqrt(&[1.0, 0.2, 0.0, 1.0], 2), Err(Error::NotSymmetric(_))));
        assert!(matches!(psd_sqrt(&[1.0], 2), Err(Error::DimensionMismatch(_))));
    }

    fn psd_matrix() -> impl Strategy<Value = (usize, Vec<f64>)> {
        (1usize..=5).prop_flat_map(|n| {
            (Just(n), prop::collection::vec(-3.0f64..3.0, n * n), 0usize..=n).prop_map(|(n, g, rank)| {
                // a = G_r G_r^T / 2 with G_r keeping `rank` columns (possibly singular).
                let mut a = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        a[i * n + j] = 0.5 * (0..rank).map(|k| g[i * n + k] * g[j * n + k]).sum::<f64>();
                    }
                }
                for i in 0..n {
                    for j in 0..i {
                        a[j * n + i] = a[i * n + j];
                    }
                }
                (n, a)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn round_trip((n, a) in psd_matrix()) {
            let s = psd_sqrt(&a, n).unwrap();
            let two_a: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
            let err = frob(&square(&s, n), &two_a);
            let norm = two_a.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-10 * (1.0 + norm), "error {err}");
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(s[i * n + j], s[j * n + i]);
                }
            }
        }
    }
}
