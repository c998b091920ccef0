//! Symmetric-matrix spectral kernel.
//!
//! [`operator_norm`] and [`top_k_eigenpairs`] run Lanczos with full
//! reorthogonalization and a deterministic seeded start vector; converged
//! eigenpairs are locked and the iteration continues in their orthogonal
//! complement. Ritz values are extracted from the Krylov tridiagonal matrix
//! with an implicit-shift QL solver.
//!
//! The [`dense`] submodule holds a cyclic Jacobi eigensolver. It shares no
//! code with the Lanczos path, which makes it usable both as the small-`n`
//! fallback and as an independent reference in tests.

use ndarray::{Array1, Array2};
use rand::Rng;
use thiserror::Error;

use crate::rng;

/// Default relative tolerance for eigenvalue residuals.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Fixed master seed for Lanczos start vectors; results are deterministic
/// because this never changes at runtime.
const START_SEED: u64 = 0x1a2c_905e_77d3_421b;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("eigensolver did not converge after {iterations} iterations (best |lambda| = {best}, residual = {residual})")]
    NonConvergence {
        best: f64,
        residual: f64,
        iterations: usize,
    },
    #[error("requested K = {k} eigenpairs from an {n} x {n} matrix")]
    KOutOfRange { k: usize, n: usize },
}

/// Top eigenpairs of a symmetric matrix, ordered by descending `|lambda|`.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// `n x K`, orthonormal columns, largest-magnitude entry of each column
    /// made positive.
    pub vectors: Array2<f64>,
    /// Explicit residuals `||M v - lambda v||_2`.
    pub residuals: Vec<f64>,
}

fn matvec(m: &Array2<f64>, v: &Array1<f64>) -> Array1<f64> {
    m.dot(v)
}

fn norm2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Eigenvalues (and optionally eigenvectors, accumulated into `z`) of a
/// symmetric tridiagonal matrix, by the implicit-shift QL method.
///
/// `diag` has length `m`, `off` length `m - 1` (sub-diagonal). Returns the
/// eigenvalues unsorted; columns of `z` correspond positionally.
fn tridiag_eigen(diag: &[f64], off: &[f64], mut z: Option<&mut Array2<f64>>) -> Vec<f64> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    if n == 1 {
        return d;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0_f64, 1.0_f64);
            let mut p = 0.0;
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Rotation underflow: roll back this eigenvalue and
                    // restart the sweep.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zz) = z.as_deref_mut() {
                    for k in 0..zz.nrows() {
                        f = zz[(k, i + 1)];
                        zz[(k, i + 1)] = s * zz[(k, i)] + c * f;
                        zz[(k, i)] = c * zz[(k, i)] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d
}

/// Deterministic pseudo-random start vector, orthogonalized against the
/// locked columns.
fn start_vector(n: usize, round: u32, attempt: u32, locked: &[Array1<f64>]) -> Option<Array1<f64>> {
    let mut stream = rng::stream(START_SEED, rng::ctx::LANCZOS_START, round, attempt);
    let mut v = Array1::from_shape_fn(n, |_| stream.random::<f64>() - 0.5);
    for q in locked {
        let proj = q.dot(&v);
        v.scaled_add(-proj, q);
    }
    let nrm = norm2(&v);
    if nrm < 1e-12 {
        return None;
    }
    Some(v / nrm)
}

struct RitzPair {
    value: f64,
    vector: Array1<f64>,
    residual: f64,
}

/// Lanczos iteration (full reorthogonalization) for the eigenpair of
/// largest magnitude in the orthogonal complement of `locked`.
fn lanczos_extreme(
    m: &Array2<f64>,
    locked: &[Array1<f64>],
    tol: f64,
    round: u32,
) -> Result<RitzPair, SpectralError> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let max_steps = n - locked.len();
    assert!(max_steps > 0, "no directions left to iterate in");

    let v0 = (0..4)
        .find_map(|attempt| start_vector(n, round, attempt, locked))
        .expect("could not build a start vector orthogonal to locked space");

    let mut basis: Vec<Array1<f64>> = vec![v0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut best: Option<RitzPair> = None;

    let scale = {
        // coarse magnitude estimate to make tolerances relative
        let mut s = 0.0f64;
        for i in 0..n {
            s = s.max(m.row(i).iter().map(|x| x.abs()).sum());
        }
        s.max(f64::MIN_POSITIVE)
    };

    for step in 0..max_steps {
        let q = basis[step].clone();
        let mut w = matvec(m, &q);
        let alpha = q.dot(&w);
        alphas.push(alpha);
        // Full reorthogonalization against the Krylov basis and the locked
        // eigenvectors; repeated once, which is enough in double precision.
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&w);
                w.scaled_add(-proj, b);
            }
            for b in locked {
                let proj = b.dot(&w);
                w.scaled_add(-proj, b);
            }
        }
        let beta = norm2(&w);
        let exhausted = beta <= 1e-14 * scale || step + 1 == max_steps;

        let check = exhausted || step < 16 || (step + 1) % 4 == 0;
        if check {
            let mdim = alphas.len();
            let mut z = Array2::eye(mdim);
            let theta = tridiag_eigen(&alphas, &betas, Some(&mut z));
            let (idx, &value) = theta
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .unwrap();
            let mut ritz = Array1::zeros(n);
            for (k, b) in basis.iter().enumerate() {
                ritz.scaled_add(z[(k, idx)], b);
            }
            let nrm = norm2(&ritz);
            if nrm > 0.0 {
                ritz /= nrm;
            }
            let residual = {
                let mut r = matvec(m, &ritz);
                r.scaled_add(-value, &ritz);
                norm2(&r)
            };
            let pair = RitzPair {
                value,
                vector: ritz,
                residual,
            };
            let better = best.as_ref().is_none_or(|b| pair.residual < b.residual);
            if better {
                best = Some(pair);
            }
            let target = tol * value.abs().max(1e-300);
            if let Some(b) = &best {
                if b.residual <= target || (exhausted && b.residual <= 1e-9 * scale.max(1.0)) {
                    return Ok(best.take().unwrap());
                }
            }
        }
        if exhausted {
            break;
        }
        basis.push(&w / beta);
        betas.push(beta);
    }

    let best = best.expect("at least one Ritz extraction must have run");
    Err(SpectralError::NonConvergence {
        best: best.value,
        residual: best.residual,
        iterations: alphas.len(),
    })
}

/// Largest absolute eigenvalue of a symmetric matrix, to relative tolerance
/// `tol`. Falls back to the dense Jacobi route for matrices up to 64x64
/// when the Krylov iteration reports non-convergence.
pub fn operator_norm(m: &Array2<f64>, tol: f64) -> Result<f64, SpectralError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    match lanczos_extreme(m, &[], tol, 0) {
        Ok(pair) => Ok(pair.value.abs()),
        Err(err) => {
            if n <= 64 {
                Ok(dense::operator_norm(m))
            } else {
                Err(err)
            }
        }
    }
}

/// Operator norm with the default tolerance.
pub fn operator_norm_default(m: &Array2<f64>) -> Result<f64, SpectralError> {
    operator_norm(m, DEFAULT_TOL)
}

/// The `K` eigenpairs of largest absolute eigenvalue, found by sequential
/// deflation (converged pairs are locked and the iteration continues in
/// their orthogonal complement).
pub fn top_k_eigenpairs(m: &Array2<f64>, k: usize, tol: f64) -> Result<EigenResult, SpectralError> {
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(SpectralError::KOutOfRange { k, n });
    }
    let mut locked: Vec<Array1<f64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for round in 0..k {
        match lanczos_extreme(m, &locked, tol, round as u32) {
            Ok(pair) => {
                values.push(pair.value);
                residuals.push(pair.residual);
                locked.push(pair.vector);
            }
            Err(err) => {
                if n <= 64 {
                    return Ok(dense_top_k(m, k));
                }
                return Err(err);
            }
        }
    }
    // Deflation finds pairs in descending |lambda| order up to tolerance;
    // enforce the order exactly.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[b].abs().partial_cmp(&values[a].abs()).unwrap());
    let mut vectors = Array2::zeros((n, k));
    let mut out_values = Vec::with_capacity(k);
    let mut out_residuals = Vec::with_capacity(k);
    for (col, &idx) in order.iter().enumerate() {
        let mut v = locked[idx].clone();
        sign_normalize(&mut v);
        vectors.column_mut(col).assign(&v);
        out_values.push(values[idx]);
        out_residuals.push(residuals[idx]);
    }
    Ok(EigenResult {
        values: out_values,
        vectors,
        residuals: out_residuals,
    })
}

/// Top-K with the default tolerance.
pub fn top_k_eigenpairs_default(m: &Array2<f64>, k: usize) -> Result<EigenResult, SpectralError> {
    top_k_eigenpairs(m, k, DEFAULT_TOL)
}

fn dense_top_k(m: &Array2<f64>, k: usize) -> EigenResult {
    let (values, vectors) = dense::sym_eigen(m);
    let n = m.nrows();
    let mut out_vectors = Array2::zeros((n, k));
    let mut out_values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for col in 0..k {
        let mut v = vectors.column(col).to_owned();
        sign_normalize(&mut v);
        let lambda = values[col];
        let mut r = matvec(m, &v);
        r.scaled_add(-lambda, &v);
        residuals.push(norm2(&r));
        out_values.push(lambda);
        out_vectors.column_mut(col).assign(&v);
    }
    EigenResult {
        values: out_values,
        vectors: out_vectors,
        residuals,
    }
}

/// Make the largest-magnitude entry positive (first such index on ties).
fn sign_normalize(v: &mut Array1<f64>) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

/// Operator norm that never fails: Lanczos first, dense Jacobi if the
/// iteration stalls. Intended for internal callers whose inputs are
/// well-conditioned population matrices.
pub(crate) fn operator_norm_unfailing(m: &Array2<f64>) -> f64 {
    match lanczos_extreme(m, &[], DEFAULT_TOL, 0) {
        Ok(pair) => pair.value.abs(),
        Err(_) => dense::operator_norm(m),
    }
}

pub mod dense {
    //! Cyclic Jacobi eigensolver for dense symmetric matrices. Quadratic
    //! convergence, no shared machinery with the Lanczos path.

    use ndarray::Array2;

    /// Full eigendecomposition, sorted by descending `|lambda|`. Columns of
    /// the returned matrix are the matching orthonormal eigenvectors.
    pub fn sym_eigen(m: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "matrix must be square");
        let mut a = m.clone();
        let mut v: Array2<f64> = Array2::eye(n);
        if n > 1 {
            let fro = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let eps = 1e-14 * fro.max(f64::MIN_POSITIVE);
            for _sweep in 0..100 {
                let mut off = 0.0f64;
                for p in 0..n {
                    for q in (p + 1)..n {
                        off = off.max(a[(p, q)].abs());
                    }
                }
                if off <= eps {
                    break;
                }
                for p in 0..n {
                    for q in (p + 1)..n {
                        let apq = a[(p, q)];
                        if apq.abs() <= eps * 1e-2 {
                            continue;
                        }
                        let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                        let t = if theta == 0.0 {
                            1.0
                        } else {
                            theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                        };
                        let c = 1.0 / (1.0 + t * t).sqrt();
                        let s = t * c;
                        for k in 0..n {
                            let akp = a[(k, p)];
                            let akq = a[(k, q)];
                            a[(k, p)] = c * akp - s * akq;
                            a[(k, q)] = s * akp + c * akq;
                        }
                        for k in 0..n {
                            let apk = a[(p, k)];
                            let aqk = a[(q, k)];
                            a[(p, k)] = c * apk - s * aqk;
                            a[(q, k)] = s * apk + c * aqk;
                        }
                        for k in 0..n {
                            let vkp = v[(k, p)];
                            let vkq = v[(k, q)];
                            v[(k, p)] = c * vkp - s * vkq;
                            v[(k, q)] = s * vkp + c * vkq;
                        }
                    }
                }
            }
        }
        let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a[(i, i)], i)).collect();
        pairs.sort_by(|x, y| y.0.abs().partial_cmp(&x.0.abs()).unwrap());
        let values: Vec<f64> = pairs.iter().map(|&(val, _)| val).collect();
        let mut vectors = Array2::zeros((n, n));
        for (col, &(_, src)) in pairs.iter().enumerate() {
            vectors.column_mut(col).assign(&v.column(src));
        }
        (values, vectors)
    }

    /// Largest absolute eigenvalue via the dense route.
    pub fn operator_norm(m: &Array2<f64>) -> f64 {
        if m.nrows() == 0 {
            return 0.0;
        }
        sym_eigen(m).0[0].abs()
    }
}
