//! Small numerical helpers shared by the channel model and tests.

/// Bessel function of the first kind, order zero, by its power series
/// `J0(x) = Σ (-1)^m (x/2)^{2m} / (m!)²`.
///
/// Accurate to roughly 1e-6 absolute up to |x| ≈ 25, which covers every
/// normalized Doppler/lag product this crate uses.
pub fn bessel_j0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        term *= -q / ((m * m) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// Levinson-Durbin solve of the Yule-Walker equations for autocovariances
/// `r[0..=p]`. Returns the prediction coefficients `a[1..=p]` (as a vector
/// of length p) and the innovation variance.
pub(crate) fn levinson(r: &[f64]) -> (Vec<f64>, f64) {
    let p = r.len() - 1;
    let mut a = vec![0.0f64; p];
    let mut e = r[0];
    for k in 1..=p {
        let mut acc = r[k];
        for j in 1..k {
            acc -= a[j - 1] * r[k - j];
        }
        let lambda = acc / e;
        // a_k(j) = a_{k-1}(j) - lambda * a_{k-1}(k-j)
        let prev = a.clone();
        a[k - 1] = lambda;
        for j in 1..k {
            a[j - 1] = prev[j - 1] - lambda * prev[k - j - 1];
        }
        e *= 1.0 - lambda * lambda;
    }
    (a, e)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix
/// given in row-major order. Returns `None` if the matrix is not numerically
/// positive definite.
pub(crate) fn cholesky(mat: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = mat[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}
