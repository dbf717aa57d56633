//! Eigendecomposition of real symmetric tridiagonal matrices by the implicit
//! QL algorithm with Wilkinson-style shifts (the `tql2` scheme of EISPACK/JAMA).

/// Eigenpairs of a real symmetric tridiagonal matrix, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalEigen {
    dim: usize,
    values: Vec<f64>,
    /// Row-major `dim × dim`; column `k` is the eigenvector of `values[k]`.
    vectors: Vec<f64>,
}

impl TridiagonalEigen {
    /// Decomposes the matrix with main diagonal `diag` and first off-diagonal `off`.
    ///
    /// Panics if `off.len() + 1 != diag.len()` or any entry is non-finite.
    pub fn new(diag: &[f64], off: &[f64]) -> Self {
        let dim = diag.len();
        assert!(dim > 0, "empty matrix");
        assert_eq!(off.len() + 1, dim, "off-diagonal length mismatch");
        assert!(
            diag.iter().chain(off).all(|x| x.is_finite()),
            "non-finite matrix entry"
        );

        let mut d = diag.to_vec();
        let mut e = off.to_vec();
        e.push(0.0);
        let mut v = vec![0.0; dim * dim];
        for i in 0..dim {
            v[i * dim + i] = 1.0;
        }
        tql2(&mut d, &mut e, &mut v, dim);

        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let values = order.iter().map(|&k| d[k]).collect();
        let mut vectors = vec![0.0; dim * dim];
        for (new_k, &old_k) in order.iter().enumerate() {
            for i in 0..dim {
                vectors[i * dim + new_k] = v[i * dim + old_k];
            }
        }
        Self {
            dim,
            values,
            vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Component `i` of eigenvector `k`.
    pub fn vector(&self, i: usize, k: usize) -> f64 {
        self.vectors[i * self.dim + k]
    }
}

fn tql2(d: &mut [f64], e: &mut [f64], v: &mut [f64], n: usize) {
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            loop {
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk = &mut v[k * n..(k + 1) * n];
                        let h = vk[i + 1];
                        vk[i + 1] = s * vk[i] + c * h;
                        vk[i] = c * vk[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reconstruct(eig: &TridiagonalEigen, i: usize, j: usize) -> f64 {
        (0..eig.dim())
            .map(|k| eig.vector(i, k) * eig.values()[k] * eig.vector(j, k))
            .sum()
    }

    #[test]
    fn one_by_one() {
        let eig = TridiagonalEigen::new(&[2.5], &[]);
        assert_eq!(eig.values(), &[2.5]);
        assert_eq!(eig.vector(0, 0).abs(), 1.0);
    }

    #[test]
    fn two_photon_sector_spectrum() {
        let eig = TridiagonalEigen::new(&[0.0; 3], &[0.5f64.sqrt(), 1.0]);
        let w = 1.5f64.sqrt();
        assert_abs_diff_eq!(eig.values()[0], -w, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values()[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values()[2], w, epsilon = 1e-14);
    }

    #[test]
    fn already_diagonal() {
        let eig = TridiagonalEigen::new(&[3.0, -1.0, 2.0], &[0.0, 0.0]);
        assert_eq!(eig.values(), &[-1.0, 2.0, 3.0]);
        assert_eq!(eig.vector(1, 0).abs(), 1.0);
    }

    #[test]
    fn agrees_with_dense_solver() {
        let diag = [0.3, -1.2, 0.7, 2.0, 0.0, -0.4];
        let off = [1.0, 0.25, -0.8, 1.5, 0.1];
        let eig = TridiagonalEigen::new(&diag, &off);
        let dense = nalgebra::DMatrix::from_fn(6, 6, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let mut reference: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (a, b) in eig.values().iter().zip(&reference) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn decomposition_reconstructs(
            entries in proptest::collection::vec(-3.0f64..3.0, 1..40)
        ) {
            let dim = entries.len().div_ceil(2);
            let diag = &entries[..dim];
            let off = &entries[dim..dim + dim - 1];
            let eig = TridiagonalEigen::new(diag, off);
            for i in 0..dim {
                for j in 0..dim {
                    let expected = if i == j {
                        diag[i]
                    } else if i + 1 == j {
                        off[i]
                    } else if j + 1 == i {
                        off[j]
                    } else {
                        0.0
                    };
                    prop_assert!((reconstruct(&eig, i, j) - expected).abs() < 1e-12);
                    let overlap: f64 = (0..dim).map(|k| eig.vector(k, i) * eig.vector(k, j)).sum();
                    let delta = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((overlap - delta).abs() < 1e-12);
                }
            }
            prop_assert!(eig.values().windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
