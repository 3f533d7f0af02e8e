//! Eigendecomposition of reversible-chain Hamiltonians to high relative accuracy.
//!
//! A detailed-balance generator `M` on a graph is similar to the positive
//! semidefinite matrix `H = F^T F`, where `F` has one row per edge `(i, j)`
//! holding `+sqrt(M_{j<-i})` in column `i` and `-sqrt(M_{i<-j})` in column
//! `j`. `F = diag(r) Z diag(s)` with `Z` the oriented incidence matrix, which
//! is totally unimodular. Gaussian elimination with complete pivoting keeps
//! every Schur complement in the form `diag(r) Z' diag(s)` with `Z'` integral,
//! so the rank-revealing factorization `F = X D Y^T` is obtained without any
//! cancellation. A pivoted QR of `X D` followed by one-sided Jacobi then yields
//! singular values of `F` with small relative error, even when the spectrum
//! spans dozens of orders of magnitude (deep metastable wells at large beta).
//! A dense QR-based eigensolver would lose every eigenvalue below
//! `eps * ||H||`.

use nalgebra::DMatrix;

use crate::scalar::Real;

/// Eigenpairs sorted by ascending eigenvalue; `vectors` holds them as columns.
#[derive(Debug, Clone)]
pub struct Spectrum<T: Real> {
    pub values: Vec<T>,
    pub vectors: DMatrix<T>,
}

/// Spectrum of `F^T F` for `F = diag(row_scale) Z diag(col_scale)` where row
/// `e` of `Z` is `e_i - e_j` for `edges[e] = (i, j)`.
///
/// Rows with a zero scale are dropped. The eigenvalues are the squared
/// singular values of `F`; the null space (one vector per connected
/// component) is completed orthogonally.
pub fn incidence_gram_spectrum<T: Real>(
    dim: usize,
    edges: &[(usize, usize)],
    row_scale: &[T],
    col_scale: &[T],
) -> Spectrum<T> {
    assert_eq!(edges.len(), row_scale.len());
    assert_eq!(col_scale.len(), dim);

    let rows: Vec<usize> = (0..edges.len())
        .filter(|&e| row_scale[e] > T::zero())
        .collect();
    let m = rows.len();
    let r: Vec<T> = rows.iter().map(|&e| row_scale[e]).collect();
    let mut z = vec![0i8; m * dim];
    for (row, &e) in rows.iter().enumerate() {
        let (i, j) = edges[e];
        z[row * dim + i] = 1;
        z[row * dim + j] = -1;
    }

    let (xd, y) = complete_pivot_factor(dim, &r, col_scale, &mut z);
    let rank = xd.ncols();
    if rank == 0 {
        return Spectrum {
            values: vec![T::zero(); dim],
            vectors: DMatrix::identity(dim, dim),
        };
    }

    let (rmat, perm) = householder_col_piv_r(xd);
    // W = R Y_perm^T, work on G = W^T = Y_perm R^T (dim x rank)
    let mut g = DMatrix::<T>::zeros(dim, rank);
    for a in 0..dim {
        for c in 0..rank {
            let mut acc = T::zero();
            for k in c..rank {
                acc += y[(a, perm[k])] * rmat[(c, k)];
            }
            g[(a, c)] = acc;
        }
    }
    one_sided_jacobi(&mut g);

    let mut pairs: Vec<(T, Vec<T>)> = Vec::with_capacity(dim);
    for c in 0..rank {
        let col = g.column(c);
        let sigma = col.norm();
        if sigma > T::zero() {
            pairs.push((sigma * sigma, col.iter().map(|&v| v / sigma).collect()));
        }
    }
    let found: Vec<Vec<T>> = pairs.iter().map(|p| p.1.clone()).collect();
    let mut nulls = orthogonal_complement(dim, &found);
    let mut all: Vec<(T, Vec<T>)> = nulls.drain(..).map(|v| (T::zero(), v)).collect();
    all.extend(pairs);
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut vectors = DMatrix::<T>::zeros(dim, dim);
    let mut values = Vec::with_capacity(dim);
    for (c, (val, vec)) in all.into_iter().enumerate() {
        values.push(val);
        for (a, v) in vec.into_iter().enumerate() {
            vectors[(a, c)] = v;
        }
    }
    Spectrum { values, vectors }
}

/// Complete-pivoting elimination on `diag(r) Z diag(s)` with integral `Z`.
/// Returns `X D` (`m x rank`) and `Y` (`dim x rank`) with `F = (X D) Y^T`.
fn complete_pivot_factor<T: Real>(
    dim: usize,
    r: &[T],
    s: &[T],
    z: &mut [i8],
) -> (DMatrix<T>, DMatrix<T>) {
    let m = r.len();
    let mut row_live = vec![true; m];
    let mut col_live = vec![true; dim];
    let mut x_cols: Vec<Vec<T>> = Vec::new();
    let mut y_cols: Vec<Vec<T>> = Vec::new();

    loop {
        let mut best: Option<(usize, usize, T)> = None;
        for i in (0..m).filter(|&i| row_live[i]) {
            for j in (0..dim).filter(|&j| col_live[j]) {
                if z[i * dim + j] != 0 {
                    let mag = r[i] * s[j];
                    if best.map_or(true, |(_, _, b)| mag > b) {
                        best = Some((i, j, mag));
                    }
                }
            }
        }
        let Some((p, q, _)) = best else { break };
        let zpq = z[p * dim + q];

        // column of X times the pivot, i.e. (r_i z_iq s_q)
        let mut xcol = vec![T::zero(); m];
        for i in (0..m).filter(|&i| row_live[i]) {
            let ziq = z[i * dim + q];
            if ziq != 0 {
                xcol[i] = r[i] * s[q] * T::lit(f64::from(ziq));
            }
        }
        // row of U: z_pj s_j / (z_pq s_q)
        let mut ycol = vec![T::zero(); dim];
        for j in (0..dim).filter(|&j| col_live[j]) {
            let zpj = z[p * dim + j];
            if zpj != 0 {
                ycol[j] = s[j] / s[q] * T::lit(f64::from(zpj * zpq));
            }
        }

        for i in (0..m).filter(|&i| row_live[i] && i != p) {
            let ziq = z[i * dim + q];
            if ziq == 0 {
                continue;
            }
            for j in (0..dim).filter(|&j| col_live[j] && j != q) {
                let zpj = z[p * dim + j];
                if zpj != 0 {
                    let updated = z[i * dim + j] - ziq * zpj * zpq;
                    debug_assert!(updated.abs() <= 1, "incidence matrix lost unimodularity");
                    z[i * dim + j] = updated;
                }
            }
        }
        row_live[p] = false;
        col_live[q] = false;
        x_cols.push(xcol);
        y_cols.push(ycol);
    }

    let rank = x_cols.len();
    let xd = DMatrix::from_fn(m, rank, |i, k| x_cols[k][i]);
    let y = DMatrix::from_fn(dim, rank, |j, k| y_cols[k][j]);
    (xd, y)
}

/// Householder QR with column pivoting; returns `R` and the column order.
fn householder_col_piv_r<T: Real>(mut a: DMatrix<T>) -> (DMatrix<T>, Vec<usize>) {
    let (m, n) = a.shape();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    for k in 0..steps {
        // pivot on the largest remaining column norm
        let mut best = k;
        let mut best_norm = T::zero();
        for c in k..n {
            let nrm = a.view((k, c), (m - k, 1)).norm();
            if nrm > best_norm {
                best_norm = nrm;
                best = c;
            }
        }
        if best != k {
            a.swap_columns(k, best);
            perm.swap(k, best);
        }
        let alpha = best_norm;
        if alpha == T::zero() {
            continue;
        }
        let x0 = a[(k, k)];
        let beta = if x0 >= T::zero() { -alpha } else { alpha };
        let mut v: Vec<T> = (k..m).map(|i| a[(i, k)]).collect();
        v[0] -= beta;
        let vnorm2: T = v.iter().fold(T::zero(), |acc, &x| acc + x * x);
        if vnorm2 > T::zero() {
            let two = T::lit(2.0);
            for c in k..n {
                let mut dot = T::zero();
                for (o, &vi) in v.iter().enumerate() {
                    dot += vi * a[(k + o, c)];
                }
                let f = two * dot / vnorm2;
                for (o, &vi) in v.iter().enumerate() {
                    a[(k + o, c)] -= f * vi;
                }
            }
        }
        a[(k, k)] = beta;
        for i in (k + 1)..m {
            a[(i, k)] = T::zero();
        }
    }
    let r = DMatrix::from_fn(steps, n, |i, j| if j >= i { a[(i, j)] } else { T::zero() });
    (r, perm)
}

/// Orthogonalizes the columns of `g` in place by plane rotations.
fn one_sided_jacobi<T: Real>(g: &mut DMatrix<T>) {
    let (rows, cols) = g.shape();
    let tol = T::eps() * T::from_usize_lossy(rows.max(1));
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for a in 0..rows {
                    let gp = g[(a, p)];
                    let gq = g[(a, q)];
                    alpha += gp * gp;
                    beta += gq * gq;
                    gamma += gp * gq;
                }
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let t = if zeta == T::zero() { T::one() } else { t };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for a in 0..rows {
                    let gp = g[(a, p)];
                    let gq = g[(a, q)];
                    g[(a, p)] = c * gp - s * gq;
                    g[(a, q)] = s * gp + c * gq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

/// Orthonormal basis of the complement of the given orthonormal vectors.
fn orthogonal_complement<T: Real>(dim: usize, basis: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut current: Vec<Vec<T>> = basis.to_vec();
    let mut out = Vec::new();
    while current.len() < dim {
        // candidate standard vector with the largest residual
        let mut best: Option<(T, Vec<T>)> = None;
        for i in 0..dim {
            let mut u = vec![T::zero(); dim];
            u[i] = T::one();
            for _ in 0..2 {
                for b in &current {
                    let d: T = b.iter().zip(&u).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
                    for (uk, &bk) in u.iter_mut().zip(b) {
                        *uk -= d * bk;
                    }
                }
            }
            let nrm = u.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
            if best.as_ref().map_or(true, |(n, _)| nrm > *n) {
                best = Some((nrm, u));
            }
        }
        let (nrm, mut u) = best.expect("dim > 0");
        for x in u.iter_mut() {
            *x /= nrm;
        }
        current.push(u.clone());
        out.push(u);
    }
    out
}
