//! Small dense helpers shared by the solvers and by test oracles.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::C64;

/// ⟨a|b⟩
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// min over φ of ‖a − e^{iφ} b‖ for unit vectors.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    let overlap = inner(a, b).norm();
    let na = norm(a);
    let nb = norm(b);
    (na * na + nb * nb - 2.0 * overlap).max(0.0).sqrt()
}

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending.
///
/// nalgebra's QR iteration can mis-rotate nearly degenerate 2×2 blocks at its
/// default tolerance, so it runs with a much tighter one and the result is
/// checked; a cyclic Jacobi solve takes over if the check fails.
pub fn eigh(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let (values, vectors) = match SymmetricEigen::try_new(m.clone(), 1e-22, 1000 * n.max(1)) {
        Some(eig) if eig_residual(&m, &eig.eigenvalues, &eig.eigenvectors) <= 1e-11 * scale * n as f64 => {
            (eig.eigenvalues, eig.eigenvectors)
        }
        _ => jacobi_eigen(m),
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted = order.iter().map(|&i| values[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    (sorted, vectors)
}

fn eig_residual(m: &DMatrix<f64>, values: &DVector<f64>, vectors: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let av = m * vectors;
    let mut res: f64 = 0.0;
    for c in 0..n {
        for r in 0..n {
            res = res.max((av[(r, c)] - vectors[(r, c)] * values[c]).abs());
        }
    }
    let gram = vectors.transpose() * vectors - DMatrix::identity(n, n);
    res.max(gram.amax() * m.amax())
}

/// Cyclic Jacobi rotations until the off-diagonal part vanishes.
fn jacobi_eigen(mut a: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut v = DMatrix::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off.sqrt() <= f64::EPSILON * 1e-2 * a.norm() || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (a.diagonal(), v)
}

/// Real symmetric form [[A, −B], [B, A]] of the Hermitian H = A + iB. Each
/// eigenvalue of H appears twice in it. Used instead of a complex eigensolver,
/// which proved inaccurate on strongly degenerate Pauli sums.
fn real_embedding(h: &DMatrix<C64>) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigvalsh(m: DMatrix<C64>) -> Vec<f64> {
    let (values, _) = eigh(real_embedding(&m));
    values.into_iter().step_by(2).collect()
}

/// exp(−i t H) for Hermitian H, assembled as cos(tH) − i sin(tH).
pub fn expm_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let n = h.nrows();
    let (values, q) = eigh(real_embedding(h));
    let diag = |f: fn(f64) -> f64| DMatrix::from_fn(2 * n, 2 * n, |r, c| if r == c { f(t * values[r]) } else { 0.0 });
    let cos = &q * diag(f64::cos) * q.transpose();
    let sin = &q * diag(f64::sin) * q.transpose();
    // a real function f(H) embeds as [[Re f, −Im f], [Im f, Re f]]
    DMatrix::from_fn(n, n, |r, c| {
        let cs = C64::new(cos[(r, c)], cos[(r + n, c)]);
        let sn = C64::new(sin[(r, c)], sin[(r + n, c)]);
        cs - C64::i() * sn
    })
}

/// Operator distance between unitaries after removing the best global phase,
/// measured in Frobenius norm (an upper bound on the spectral norm).
pub fn phase_aligned_operator_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let tr: C64 = (a.adjoint() * b).trace();
    let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { C64::new(1.0, 0.0) };
    (a * phase - b).norm()
}
