use super::SolverError;
use crate::Complex64;

/// Largest system accepted by the dense solver.
pub const DENSE_LIMIT: usize = 5000;

/// LU factorization with partial pivoting, in place, row-major.
pub(crate) fn lu_solve(mut a: Vec<Complex64>, n: usize, mut b: Vec<Complex64>) -> Result<Vec<Complex64>, SolverError> {
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 && n > 0 {
        return Err(SolverError::Singular { pivot: 0 });
    }
    for k in 0..n {
        let (mut piv, mut best) = (k, 0.0);
        for i in k..n {
            let v = a[i * n + k].norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= 1e-14 * scale {
            return Err(SolverError::Singular { pivot: k });
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            b.swap(k, piv);
        }
        let inv = 1.0 / a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] * inv;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            a[i * n + k] = f;
            for j in k + 1..n {
                let u = a[k * n + j];
                a[i * n + j] -= f * u;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[k * n + j] * b[j];
        }
        b[k] = s / a[k * n + k];
    }
    Ok(b)
}
