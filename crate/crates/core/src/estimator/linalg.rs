//! Small dense symmetric solvers. Matrices are row-major `n x n` slices.

/// Cholesky factor of a symmetric matrix, skipping near-singular pivots.
///
/// A pivot is treated as singular when it falls below `tol` times the
/// original diagonal entry; its row and column are zeroed and its index is
/// reported in `aliased`.
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
    pub aliased: Vec<usize>,
}

impl Cholesky {
    pub fn new(a: &[f64], n: usize, tol: f64) -> Self {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        let mut aliased = Vec::new();
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            let scale = a[j * n + j].abs();
            if d.is_nan() || d <= tol * scale || scale == 0.0 {
                aliased.push(j);
                continue;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Self { n, l, aliased }
    }

    pub fn is_full_rank(&self) -> bool {
        self.aliased.is_empty()
    }

    /// Solves `A x = b`, setting aliased components to zero.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            if self.l[i * n + i] == 0.0 {
                continue;
            }
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            if self.l[i * n + i] == 0.0 {
                y[i] = 0.0;
                continue;
            }
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    /// Inverse of `A` on the non-aliased block; aliased rows/columns are NaN.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        for &a in &self.aliased {
            for k in 0..n {
                inv[a * n + k] = f64::NAN;
                inv[k * n + a] = f64::NAN;
            }
        }
        inv
    }
}

/// `a * b * a` for symmetric `n x n` matrices.
pub(crate) fn sandwich(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut ab = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                ab[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let v = ab[i * n + k];
            for j in 0..n {
                out[i * n + j] += v * a[k * n + j];
            }
        }
    }
    out
}
