//! Cholesky factorisation of symmetric positive-definite band matrices.

use crate::error::{Error, Result};

/// Lower-triangular band factor `L` with `L·Lᵀ = M`.
///
/// Row `i` stores `L(i, i - d)` at offset `d` for `d` in `0..=bandwidth`.
#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    /// Factorises the matrix whose entries are given by `entry(i, j)` for `j <= i`,
    /// `i - j <= bandwidth`.
    pub(crate) fn factor(n: usize, bandwidth: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bandwidth + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            let first = i.saturating_sub(bandwidth);
            for j in first..=i {
                let mut s = entry(i, j);
                let k0 = first.max(j.saturating_sub(bandwidth));
                for k in k0..j {
                    s -= data[i * w + (i - k)] * data[j * w + (j - k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Numeric(format!(
                            "band matrix not positive definite at row {i}"
                        )));
                    }
                    data[i * w] = s.sqrt();
                } else {
                    data[i * w + (i - j)] = s / data[j * w];
                }
            }
        }
        Ok(Self { n, bandwidth, data })
    }

    /// Solves `M x = b` in place.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn solve_in_place(&self, x: &mut [f64]) {
        let w = self.bandwidth + 1;
        for i in 0..self.n {
            let first = i.saturating_sub(self.bandwidth);
            let mut s = x[i];
            for k in first..i {
                s -= self.data[i * w + (i - k)] * x[k];
            }
            x[i] = s / self.data[i * w];
        }
        for i in (0..self.n).rev() {
            let last = (i + self.bandwidth).min(self.n - 1);
            let mut s = x[i];
            for k in i + 1..=last {
                s -= self.data[k * w + (k - i)] * x[k];
            }
            x[i] = s / self.data[i * w];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        // 1-D Dirichlet Laplacian plus identity.
        let n = 50;
        let m = |i: usize, j: usize| {
            if i == j {
                3.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        };
        let chol = BandCholesky::factor(n, 1, m).unwrap();
        let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| m(i.max(j), i.min(j)) * truth[j]).sum())
            .collect();
        chol.solve_in_place(&mut b);
        for (x, t) in b.iter().zip(&truth) {
            assert!((x - t).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let r = BandCholesky::factor(3, 1, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!(matches!(r, Err(Error::Numeric(_))));
    }
}
