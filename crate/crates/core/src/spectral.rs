//! Eigenvalue and eigenvector computation.
//!
//! The dense path is an in-house Householder tridiagonalization followed by
//! implicit-shift QL, with residuals checked against the input operator. The
//! iterative path is Lanczos with full reorthogonalization; its Ritz pairs are
//! re-verified by explicit ||Hv - lambda v|| recomputation, never trusted from
//! the recurrence internals.

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, Negated, SymOperator};
use crate::ensemble::SampledMatrix;
use crate::error::{Error, Result};
use crate::rng::{derive_rng, salt};

const QL_SWEEPS_PER_EIGENVALUE: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WhichEnd {
    LargestAlgebraic,
    LargestMagnitude,
}

/// Computed spectrum: eigenvalues descending, optional unit eigenvectors and
/// certified residuals aligned with them.
#[derive(Clone, Debug)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Option<Vec<f64>>>,
    pub residuals: Vec<Option<f64>>,
    pub method: SolveMethod,
    pub iterations: usize,
    pub tolerance: f64,
    pub converged: bool,
    pub spectral_radius_estimate: f64,
}

impl SpectralSummary {
    pub fn eigenvector(&self, k: usize) -> Option<&[f64]> {
        self.eigenvectors.get(k).and_then(|v| v.as_deref())
    }

    /// Check the summary's structural invariants (ordering, unit vectors,
    /// residual bound).
    pub fn validate(&self) -> Result<()> {
        for w in self.eigenvalues.windows(2) {
            if w[0] < w[1] {
                return Err(Error::Contract("eigenvalues not sorted descending".into()));
            }
        }
        for v in self.eigenvectors.iter().flatten() {
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::Contract(format!("eigenvector norm {norm} not unit")));
            }
        }
        let cap = self.tolerance * self.spectral_radius_estimate.max(1.0);
        for r in self.residuals.iter().flatten() {
            if *r > cap {
                return Err(Error::Contract(format!("residual {r} above {cap}")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Dense solver: Householder reduction + implicit-shift QL
// ---------------------------------------------------------------------------

/// Reduce the symmetric matrix in `a` to tridiagonal form (d, e). When
/// `vectors` is true, `a` is overwritten with the accumulated orthogonal
/// transformation (columns = basis); otherwise only (d, e) are produced.
fn householder_tridiagonalize(a: &mut DenseMatrix, d: &mut [f64], e: &mut [f64], vectors: bool) {
    let n = a.dim();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        let mut scale = 0.0;
        if l > 0 {
            for k in 0..=l {
                scale += a[(i, k)].abs();
            }
            if scale == 0.0 {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] /= scale;
                    h += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;
                // e[0..=l] <- (A v) / h using the lower triangle, row access only
                for item in e.iter_mut().take(l + 1) {
                    *item = 0.0;
                }
                for j in 0..=l {
                    let vj = a[(i, j)];
                    if vectors {
                        a[(j, i)] = vj / h;
                    }
                    let mut acc = 0.0;
                    for k in 0..j {
                        acc += a[(j, k)] * a[(i, k)];
                        e[k] += a[(j, k)] * vj;
                    }
                    e[j] += acc + a[(j, j)] * vj;
                }
                let mut f_acc = 0.0;
                for j in 0..=l {
                    e[j] /= h;
                    f_acc += e[j] * a[(i, j)];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    e[j] -= hh * a[(i, j)];
                }
                // rank-2 update of the lower triangle: A -= v q^T + q v^T
                for j in 0..=l {
                    let f = a[(i, j)];
                    let g = e[j];
                    for k in 0..=j {
                        a[(j, k)] -= f * e[k] + g * a[(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    if vectors {
        // accumulate Q = P_1 P_2 ... in place
        let n_dim = a.dim();
        let mut g_row = vec![0.0f64; n_dim];
        for i in 0..n_dim {
            if d[i] != 0.0 {
                for item in g_row.iter_mut().take(i) {
                    *item = 0.0;
                }
                for k in 0..i {
                    let vk = a[(i, k)];
                    for (j, g) in g_row.iter_mut().enumerate().take(i) {
                        *g += vk * a[(k, j)];
                    }
                }
                for k in 0..i {
                    let c = a[(k, i)];
                    for (j, g) in g_row.iter().enumerate().take(i) {
                        a[(k, j)] -= c * g;
                    }
                }
            }
            d[i] = a[(i, i)];
            a[(i, i)] = 1.0;
            for j in 0..i {
                a[(j, i)] = 0.0;
                a[(i, j)] = 0.0;
            }
        }
    } else {
        for i in 0..n {
            d[i] = a[(i, i)];
        }
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. `d` holds the
/// diagonal (overwritten with the eigenvalues, unordered), `e` the
/// subdiagonal in e[1..n]. When `vectors` is given its rows are rotated
/// along: seed it with the identity (or the transposed reduction basis) and
/// row k comes back holding the eigenvector for d[k].
fn tridiagonal_ql(
    d: &mut [f64],
    e: &mut [f64],
    mut vectors: Option<&mut Vec<Vec<f64>>>,
    sweep_budget: usize,
) -> Result<usize> {
    let n = d.len();
    if n == 0 {
        return Ok(0);
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let mut sweeps_total = 0usize;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                sweeps_total += 1;
                if sweeps_total > sweep_budget {
                    return Err(Error::NoConvergence { index: l, sweeps: sweeps_total });
                }
                // implicit shift
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
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;
                // implicit QL sweep
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
                    if let Some(v) = vectors.as_deref_mut() {
                        let (lo, hi) = v.split_at_mut(i + 1);
                        let row_i = &mut lo[i];
                        let row_i1 = &mut hi[0];
                        for k in 0..row_i.len() {
                            let t = row_i1[k];
                            row_i1[k] = s * row_i[k] + c * t;
                            row_i[k] = c * row_i[k] - s * t;
                        }
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
    Ok(sweeps_total)
}

fn solve_symmetric(
    matrix: &DenseMatrix,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>, usize)> {
    let n = matrix.dim();
    if n == 0 {
        return Err(Error::Bounds("empty matrix".into()));
    }
    let mut work = matrix.clone();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    householder_tridiagonalize(&mut work, &mut d, &mut e, want_vectors);
    let mut vectors: Option<Vec<Vec<f64>>> = if want_vectors {
        // transpose the accumulated basis so QL rotates contiguous rows
        let mut rows = vec![vec![0.0f64; n]; n];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, item) in row.iter_mut().enumerate() {
                *item = work[(c, r)];
            }
        }
        Some(rows)
    } else {
        None
    };
    let sweeps = tridiagonal_ql(
        &mut d,
        &mut e,
        vectors.as_mut(),
        QL_SWEEPS_PER_EIGENVALUE * n,
    )?;
    // order descending
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = vectors.map(|rows| {
        let mut sorted: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut rows: Vec<Option<Vec<f64>>> = rows.into_iter().map(Some).collect();
        for &i in &order {
            sorted.push(rows[i].take().unwrap());
        }
        sorted
    });
    Ok((values, vectors, sweeps))
}

/// Full spectrum of a symmetric dense matrix with eigenvectors and enforced
/// residual certification.
pub fn dense_eigh(matrix: &DenseMatrix) -> Result<SpectralSummary> {
    let n = matrix.dim();
    if !matrix.is_symmetric(1e-10 * matrix.frobenius_norm().max(1.0)) {
        return Err(Error::Precondition("dense_eigh needs a symmetric matrix".into()));
    }
    let (values, vectors, sweeps) = solve_symmetric(matrix, true)?;
    let vectors = vectors.unwrap();
    let rho = values
        .first()
        .map(|a| a.abs())
        .unwrap_or(0.0)
        .max(values.last().map(|a| a.abs()).unwrap_or(0.0));
    let tolerance = 1e-10;
    let mut residuals = Vec::with_capacity(n);
    let mut buf = vec![0.0f64; n];
    for (k, v) in vectors.iter().enumerate() {
        matrix.matvec(v, &mut buf);
        let r: f64 = buf
            .iter()
            .zip(v.iter())
            .map(|(hv, vi)| (hv - values[k] * vi) * (hv - values[k] * vi))
            .sum::<f64>()
            .sqrt();
        if r > tolerance * rho.max(1.0) {
            return Err(Error::TheoremViolation(format!(
                "dense residual {r} for eigenvalue {} exceeds {}",
                values[k],
                tolerance * rho.max(1.0)
            )));
        }
        residuals.push(Some(r));
    }
    Ok(SpectralSummary {
        eigenvalues: values,
        eigenvectors: vectors.into_iter().map(Some).collect(),
        residuals,
        method: SolveMethod::Dense,
        iterations: sweeps,
        tolerance,
        converged: true,
        spectral_radius_estimate: rho,
    })
}

/// Eigenvalues only (descending), skipping vector accumulation. Used where
/// only the spectrum is needed (empirical spectral distributions, submatrix
/// radii) at a third of the cost.
pub fn dense_eigenvalues(matrix: &DenseMatrix) -> Result<Vec<f64>> {
    let (values, _, _) = solve_symmetric(matrix, false)?;
    Ok(values)
}

pub fn dense_eigh_sampled(m: &SampledMatrix) -> Result<SpectralSummary> {
    dense_eigh(&m.to_dense()?)
}

// ---------------------------------------------------------------------------
// Lanczos with full reorthogonalization
// ---------------------------------------------------------------------------

struct LanczosRun {
    /// Ritz values descending with coordinates in the stored basis.
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn random_unit(n: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let nv = norm(&v);
        if nv > 1e-8 {
            for x in v.iter_mut() {
                *x /= nv;
            }
            return v;
        }
    }
}

fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for u in basis {
            let c = dot(w, u);
            for (wi, ui) in w.iter_mut().zip(u) {
                *wi -= c * ui;
            }
        }
    }
}

/// Run Lanczos for the top-k algebraic end of `op`. Full reorthogonalization
/// keeps the basis orthfor heavy-tailed spectra whose outliers shred the
/// three-term recurrence's orthogonality.
fn lanczos_extreme<O: SymOperator>(
    op: &O,
    k: usize,
    tol: f64,
    max_iter: usize,
    rng: &mut impl rand::Rng,
) -> Result<LanczosRun> {
    let n = op.dim();
    let k = k.min(n);
    if k == 0 {
        return Ok(LanczosRun {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
            iterations: 0,
            converged: true,
        });
    }
    let m_max = max_iter.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut alphas: Vec<f64> = Vec::with_capacity(m_max);
    let mut betas: Vec<f64> = Vec::with_capacity(m_max);

    let mut v = random_unit(n, rng);
    let mut w = vec![0.0f64; n];
    let mut scale_est = 1.0f64;

    for _ in 0..m_max {
        op.apply(&v, &mut w);
        let alpha = dot(&w, &v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= alpha * vi;
        }
        if let Some(prev) = basis.last() {
            let beta_prev = *betas.last().unwrap();
            if beta_prev != 0.0 {
                for (wi, pi) in w.iter_mut().zip(prev) {
                    *wi -= beta_prev * pi;
                }
            }
        }
        basis.push(std::mem::take(&mut v));
        alphas.push(alpha);
        reorthogonalize(&mut w, &basis);
        let beta = norm(&w);
        scale_est = scale_est.max(alpha.abs() + beta);

        let dim = basis.len();
        if dim == m_max || dim == n {
            break;
        }
        if beta <= 1e-13 * scale_est {
            // invariant subspace: either enough of the spectrum is captured
            // or we restart in the orthogonal complement
            if dim >= k && ritz_top_converged(&alphas, &betas, 0.0, k, tol, scale_est) {
                betas.push(0.0);
                break;
            }
            let mut fresh = random_unit(n, rng);
            reorthogonalize(&mut fresh, &basis);
            let nf = norm(&fresh);
            if nf <= 1e-8 {
                betas.push(0.0);
                break; // complement exhausted
            }
            for x in fresh.iter_mut() {
                *x /= nf;
            }
            betas.push(0.0);
            v = fresh;
            continue;
        }
        betas.push(beta);
        v = w.iter().map(|x| x / beta).collect();

        if dim >= k && dim % 5 == 0 && ritz_top_converged(&alphas, &betas, beta, k, tol, scale_est)
        {
            break;
        }
    }

    // final Ritz decomposition of the projected tridiagonal matrix
    let m = alphas.len();
    let mut d = alphas.clone();
    let mut e = vec![0.0f64; m];
    for (i, item) in e.iter_mut().enumerate().take(m).skip(1) {
        *item = betas[i - 1];
    }
    let mut s: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            let mut row = vec![0.0f64; m];
            row[r] = 1.0;
            row
        })
        .collect();
    tridiagonal_ql(&mut d, &mut e, Some(&mut s), QL_SWEEPS_PER_EIGENVALUE * m.max(1))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap());

    let take = k.min(m);
    let mut values = Vec::with_capacity(take);
    let mut vectors = Vec::with_capacity(take);
    let mut residuals = Vec::with_capacity(take);
    let mut all_ok = true;
    for &idx in order.iter().take(take) {
        let theta = d[idx];
        let coords = &s[idx];
        let mut x = vec![0.0f64; n];
        for (c, u) in coords.iter().zip(&basis) {
            if *c != 0.0 {
                for (xi, ui) in x.iter_mut().zip(u) {
                    *xi += c * ui;
                }
            }
        }
        let nx = norm(&x);
        for xi in x.iter_mut() {
            *xi /= nx;
        }
        // certify against the operator itself
        op.apply(&x, &mut w);
        let r: f64 = w
            .iter()
            .zip(&x)
            .map(|(hx, xi)| (hx - theta * xi) * (hx - theta * xi))
            .sum::<f64>()
            .sqrt();
        if r > tol * scale_est.max(1.0) {
            all_ok = false;
        }
        values.push(theta);
        vectors.push(x);
        residuals.push(r);
    }
    Ok(LanczosRun {
        values,
        vectors,
        residuals,
        iterations: m,
        converged: all_ok && take == k,
    })
}

/// Residual estimates of the current top-k Ritz values from the tridiagonal
/// section: |beta_m * (last component of the Ritz coordinate vector)|.
fn ritz_top_converged(
    alphas: &[f64],
    betas: &[f64],
    beta_last: f64,
    k: usize,
    tol: f64,
    scale_est: f64,
) -> bool {
    let m = alphas.len();
    if m < k {
        return false;
    }
    let mut d = alphas.to_vec();
    let mut e = vec![0.0f64; m];
    for (i, item) in e.iter_mut().enumerate().take(m).skip(1) {
        *item = betas[i - 1];
    }
    let mut s: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            let mut row = vec![0.0f64; m];
            row[r] = 1.0;
            row
        })
        .collect();
    if tridiagonal_ql(&mut d, &mut e, Some(&mut s), QL_SWEEPS_PER_EIGENVALUE * m).is_err() {
        return false;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap());
    order
        .iter()
        .take(k)
        .all(|&idx| (beta_last * s[idx][m - 1]).abs() <= tol * scale_est.max(1.0))
}

/// Top-k eigenpairs of a sampled matrix by Lanczos. `LargestMagnitude` runs
/// both spectral ends and keeps the k pairs of largest modulus.
pub fn lanczos_topk(
    m: &SampledMatrix,
    k: usize,
    which: WhichEnd,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralSummary> {
    let mut rng = derive_rng(m.seed(), m.replica_index(), salt::LANCZOS_START);
    lanczos_topk_seeded(m, k, which, tol, max_iter, &mut rng)
}

/// Same as [`lanczos_topk`] for any symmetric operator, with the start vector
/// drawn from the supplied generator.
pub fn lanczos_topk_seeded<O: SymOperator>(
    op: &O,
    k: usize,
    which: WhichEnd,
    tol: f64,
    max_iter: usize,
    rng: &mut impl rand::Rng,
) -> Result<SpectralSummary> {
    match which {
        WhichEnd::LargestAlgebraic => {
            let run = lanczos_extreme(op, k, tol, max_iter, rng)?;
            Ok(summary_from_run(run, tol))
        }
        WhichEnd::LargestMagnitude => {
            let top = lanczos_extreme(op, k, tol, max_iter, rng)?;
            let bottom = lanczos_extreme(&Negated(op), k, tol, max_iter, rng)?;
            let mut pairs: Vec<(f64, Vec<f64>, f64)> = Vec::new();
            for i in 0..top.values.len() {
                pairs.push((top.values[i], top.vectors[i].clone(), top.residuals[i]));
            }
            for i in 0..bottom.values.len() {
                pairs.push((-bottom.values[i], bottom.vectors[i].clone(), bottom.residuals[i]));
            }
            pairs.sort_by(|a, b| b.0.abs().partial_cmp(&a.0.abs()).unwrap());
            pairs.truncate(k);
            pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let run = LanczosRun {
                values: pairs.iter().map(|p| p.0).collect(),
                vectors: pairs.iter().map(|p| p.1.clone()).collect(),
                residuals: pairs.iter().map(|p| p.2).collect(),
                iterations: top.iterations + bottom.iterations,
                converged: top.converged && bottom.converged,
            };
            Ok(summary_from_run(run, tol))
        }
    }
}

/// Top and bottom ends together: `k_top` largest and `k_bottom` smallest
/// eigenpairs, all kept, sorted descending.
pub fn lanczos_both_ends(
    m: &SampledMatrix,
    k_top: usize,
    k_bottom: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralSummary> {
    let mut rng = derive_rng(m.seed(), m.replica_index(), salt::LANCZOS_START);
    let top = lanczos_extreme(m, k_top, tol, max_iter, &mut rng)?;
    let bottom = lanczos_extreme(&Negated(m), k_bottom, tol, max_iter, &mut rng)?;
    let mut pairs: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    for i in 0..top.values.len() {
        pairs.push((top.values[i], top.vectors[i].clone(), top.residuals[i]));
    }
    for i in 0..bottom.values.len() {
        pairs.push((-bottom.values[i], bottom.vectors[i].clone(), bottom.residuals[i]));
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    pairs.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-12 * a.0.abs().max(1.0));
    let run = LanczosRun {
        values: pairs.iter().map(|p| p.0).collect(),
        vectors: pairs.iter().map(|p| p.1.clone()).collect(),
        residuals: pairs.iter().map(|p| p.2).collect(),
        iterations: top.iterations + bottom.iterations,
        converged: top.converged && bottom.converged,
    };
    Ok(summary_from_run(run, tol))
}

fn summary_from_run(run: LanczosRun, tol: f64) -> SpectralSummary {
    let rho = run.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    SpectralSummary {
        eigenvalues: run.values,
        eigenvectors: run.vectors.into_iter().map(Some).collect(),
        residuals: run.residuals.into_iter().map(Some).collect(),
        method: SolveMethod::Lanczos,
        iterations: run.iterations,
        tolerance: tol,
        converged: run.converged,
        spectral_radius_estimate: rho,
    }
}

// ---------------------------------------------------------------------------
// Semicircle distribution
// ---------------------------------------------------------------------------

/// CDF of the semicircle law on [-2, 2].
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * std::f64::consts::PI)
            + (x / 2.0).asin() / std::f64::consts::PI
    }
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `eigenvalues / scale` and the semicircle law.
pub fn semicircle_ks(eigenvalues: &[f64], scale: f64) -> Result<f64> {
    if eigenvalues.is_empty() {
        return Err(Error::Domain("semicircle_ks on empty spectrum".into()));
    }
    if !(scale > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {scale}")));
    }
    let mut xs: Vec<f64> = eigenvalues.iter().map(|l| l / scale).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(crate::stats::ks_statistic(&xs, semicircle_cdf))
}

// ---------------------------------------------------------------------------
// Principal submatrix spectral radii
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubmatrixMode {
    /// All C(N, L) principal submatrices; budget-limited.
    Exhaustive,
    /// The N windows of length L in the cyclic index order.
    Successive,
}

pub const EXHAUSTIVE_BUDGET: u64 = 1_000_000;

fn binomial_capped(n: u64, k: u64, cap: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return cap + 1;
        }
    }
    acc as u64
}

fn spectral_radius_of(sub: &DenseMatrix) -> Result<f64> {
    if sub.dim() == 1 {
        return Ok(sub[(0, 0)].abs());
    }
    let vals = dense_eigenvalues(sub)?;
    Ok(vals
        .first()
        .map(|v| v.abs())
        .unwrap_or(0.0)
        .max(vals.last().map(|v| v.abs()).unwrap_or(0.0)))
}

/// Maximum spectral radius over L x L principal submatrices of `h`,
/// exhaustively or over the N cyclic windows.
pub fn submatrix_rho_dense(h: &DenseMatrix, l: usize, mode: SubmatrixMode) -> Result<f64> {
    let n = h.dim();
    if l == 0 || l > n {
        return Err(Error::Bounds(format!("submatrix size {l} out of range for n = {n}")));
    }
    match mode {
        SubmatrixMode::Exhaustive => {
            let count = binomial_capped(n as u64, l as u64, EXHAUSTIVE_BUDGET);
            if count > EXHAUSTIVE_BUDGET {
                return Err(Error::CombinatorialBudget(format!(
                    "C({n}, {l}) exceeds {EXHAUSTIVE_BUDGET}; use the successive mode"
                )));
            }
            let mut idx: Vec<usize> = (0..l).collect();
            let mut best = 0.0f64;
            loop {
                best = best.max(spectral_radius_of(&h.principal_submatrix(&idx))?);
                // advance to the next combination in lexicographic order
                let mut pos = l;
                while pos > 0 {
                    pos -= 1;
                    if idx[pos] != pos + n - l {
                        idx[pos] += 1;
                        for t in pos + 1..l {
                            idx[t] = idx[t - 1] + 1;
                        }
                        break;
                    }
                    if pos == 0 {
                        return Ok(best);
                    }
                }
            }
        }
        SubmatrixMode::Successive => {
            let mut best = 0.0f64;
            let mut idx = vec![0usize; l];
            for start in 0..n {
                for (t, item) in idx.iter_mut().enumerate() {
                    *item = (start + t) % n;
                }
                best = best.max(spectral_radius_of(&h.principal_submatrix(&idx))?);
            }
            Ok(best)
        }
    }
}

pub fn submatrix_rho(m: &SampledMatrix, l: usize, mode: SubmatrixMode) -> Result<f64> {
    submatrix_rho_dense(&m.to_dense()?, l, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_matrix, BandPattern, PatternKind};
    use crate::heavy_tail::{SlowlyVarying, TailLaw};

    fn law(alpha: f64) -> TailLaw {
        TailLaw::new(alpha, 1.0, SlowlyVarying::Constant(1.0), true, false).unwrap()
    }

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        use rand::Rng;
        let mut rng = derive_rng(seed, 0, salt::GENERIC);
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen::<f64>() * 2.0 - 1.0;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn planted_pair_spectrum() {
        let mut h = DenseMatrix::zeros(4);
        h[(0, 1)] = 5.0;
        h[(1, 0)] = 5.0;
        let s = dense_eigh(&h).unwrap();
        let expect = [5.0, 0.0, 0.0, -5.0];
        for (a, b) in s.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let v = s.eigenvector(0).unwrap();
        let overlap = (v[0] + v[1]).abs() / 2.0f64.sqrt();
        assert!((overlap - 1.0).abs() < 1e-12);
        s.validate().unwrap();
    }

    #[test]
    fn diagonal_matrix() {
        let h = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = dense_eigh(&h).unwrap();
        assert!((s.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!((s.eigenvector(0).unwrap()[0].abs() - 1.0).abs() < 1e-12);
        assert!((s.eigenvector(1).unwrap()[1].abs() - 1.0).abs() < 1e-12);
    }

    /// Small LU solver for the shifted-inverse-iteration oracle.
    fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
        let n = a.dim();
        let mut m = a.clone();
        let mut x = b.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if m[(perm[r], col)].abs() > m[(perm[piv], col)].abs() {
                    piv = r;
                }
            }
            perm.swap(col, piv);
            let p = m[(perm[col], col)];
            if p.abs() < 1e-300 {
                return None;
            }
            for r in col + 1..n {
                let f = m[(perm[r], col)] / p;
                if f != 0.0 {
                    for c in col..n {
                        let v = m[(perm[col], c)];
                        m[(perm[r], c)] -= f * v;
                    }
                    x[perm[r]] -= f * x[perm[col]];
                }
            }
        }
        let mut out = vec![0.0f64; n];
        for col in (0..n).rev() {
            let mut acc = x[perm[col]];
            for c in col + 1..n {
                acc -= m[(perm[col], c)] * out[c];
            }
            out[col] = acc / m[(perm[col], col)];
        }
        Some(out)
    }

    /// Refine an eigenvalue guess by shifted inverse power iteration,
    /// independent of the QL path.
    fn inverse_iteration_eigenvalue(a: &DenseMatrix, guess: f64, spread: f64) -> f64 {
        use rand::Rng;
        let n = a.dim();
        let sigma = guess + 1e-6 * spread;
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] -= sigma;
        }
        let mut rng = derive_rng(4242, 0, salt::GENERIC);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        for _ in 0..60 {
            let w = match lu_solve(&shifted, &v) {
                Some(w) => w,
                None => return sigma, // shift landed on the eigenvalue itself
            };
            let nw = norm(&w);
            v = w.into_iter().map(|x| x / nw).collect();
        }
        let mut av = vec![0.0f64; n];
        a.matvec(&v, &mut av);
        dot(&v, &av)
    }

    #[test]
    fn dense_matches_inverse_iteration_oracle() {
        let a = random_symmetric(30, 17);
        let s = dense_eigh(&a).unwrap();
        let spread = s.eigenvalues[0] - s.eigenvalues[29];
        for k in [0usize, 7, 15, 29] {
            let lam = s.eigenvalues[k];
            let refined = inverse_iteration_eigenvalue(&a, lam, spread);
            assert!(
                (refined - lam).abs() <= 1e-8 * lam.abs().max(1.0),
                "k={k}: {refined} vs {lam}"
            );
        }
    }

    #[test]
    fn trace_and_orthonormality_invariants() {
        let a = random_symmetric(40, 23);
        let s = dense_eigh(&a).unwrap();
        let tr: f64 = s.eigenvalues.iter().sum();
        assert!((tr - a.trace()).abs() <= 1e-8 * a.frobenius_norm());
        for i in 0..10 {
            for j in 0..i {
                let d = dot(s.eigenvector(i).unwrap(), s.eigenvector(j).unwrap());
                assert!(d.abs() <= 1e-8, "<v{i}, v{j}> = {d}");
            }
        }
    }

    #[test]
    fn ql_nonconvergence_reports_index() {
        // a 1-sweep budget cannot converge a generic matrix
        let a = random_symmetric(12, 3);
        let mut work = a.clone();
        let mut d = vec![0.0; 12];
        let mut e = vec![0.0; 12];
        householder_tridiagonalize(&mut work, &mut d, &mut e, false);
        let err = tridiagonal_ql(&mut d, &mut e, None, 1).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn lanczos_agrees_with_dense_on_full_matrix() {
        let p = BandPattern::build(500, 1.0, PatternKind::CyclicBand).unwrap();
        let m = sample_matrix(&p, &law(1.5), 31, 0);
        let dense = dense_eigh(&m.to_dense().unwrap()).unwrap();
        let lz = lanczos_topk(&m, 5, WhichEnd::LargestAlgebraic, 1e-10, 400).unwrap();
        assert!(lz.converged);
        for k in 0..5 {
            let a = dense.eigenvalues[k];
            let b = lz.eigenvalues[k];
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "k={k}: {a} vs {b}");
        }
        lz.validate().unwrap();
    }

    #[test]
    fn lanczos_planted_and_diagonal() {
        // a single planted pair inside an otherwise-zero full pattern
        let pattern = BandPattern::build(2000, 1.0, PatternKind::CyclicBand).unwrap();
        let m = crate::ensemble::SampledMatrix::from_entries(
            pattern.clone(),
            law(2.0),
            vec![crate::ensemble::Entry { i: 0, j: 1, value: 5.0 }],
            0,
            0,
        )
        .unwrap();
        let s = lanczos_topk(&m, 1, WhichEnd::LargestAlgebraic, 1e-12, 50).unwrap();
        assert!((s.eigenvalues[0] - 5.0).abs() < 1e-10);
        assert!(s.residuals[0].unwrap() < 1e-10);

        // diag(1..n)
        let n = 64;
        let pat = BandPattern::build(n, 1.0, PatternKind::CyclicBand).unwrap();
        let entries: Vec<crate::ensemble::Entry> = (0..n as u32)
            .map(|i| crate::ensemble::Entry { i, j: i, value: (i + 1) as f64 })
            .collect();
        let m = crate::ensemble::SampledMatrix::from_entries(pat, law(2.0), entries, 0, 0).unwrap();
        let s = lanczos_topk(&m, 1, WhichEnd::LargestAlgebraic, 1e-10, 64).unwrap();
        assert!((s.eigenvalues[0] - n as f64).abs() < 1e-8);
    }

    #[test]
    fn lanczos_largest_magnitude_reaches_both_ends() {
        let p = BandPattern::build(200, 1.0, PatternKind::CyclicBand).unwrap();
        let m = sample_matrix(&p, &law(1.2), 77, 0);
        let dense = dense_eigh(&m.to_dense().unwrap()).unwrap();
        let lz = lanczos_topk(&m, 4, WhichEnd::LargestMagnitude, 1e-9, 200).unwrap();
        let mut mags: Vec<f64> = dense.eigenvalues.iter().map(|x| x.abs()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut got: Vec<f64> = lz.eigenvalues.iter().map(|x| x.abs()).collect();
        got.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for k in 0..4 {
            assert!(
                (mags[k] - got[k]).abs() <= 1e-7 * mags[k].max(1.0),
                "k={k}: {} vs {}",
                mags[k],
                got[k]
            );
        }
    }

    #[test]
    fn semicircle_quantiles_and_moments() {
        // exact quantile inputs
        let n = 500;
        let mut xs = Vec::with_capacity(n);
        for i in 0..n {
            let target = (i as f64 + 0.5) / n as f64;
            let mut lo = -2.0;
            let mut hi = 2.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if semicircle_cdf(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            xs.push(0.5 * (lo + hi));
        }
        let ks = semicircle_ks(&xs, 1.0).unwrap();
        assert!(ks <= 1.0 / n as f64 + 1e-9, "ks = {ks}");

        // numeric moments of the density sqrt(4 - x^2) / (2 pi)
        let density = |x: f64| (4.0 - x * x).max(0.0).sqrt() / (2.0 * std::f64::consts::PI);
        let moment = |k: u32| {
            let steps = 400_000;
            let h = 4.0 / steps as f64;
            let mut acc = 0.0;
            for t in 0..steps {
                let x0 = -2.0 + t as f64 * h;
                let x1 = x0 + h;
                let xm = 0.5 * (x0 + x1);
                acc += h / 6.0
                    * (x0.powi(k as i32) * density(x0)
                        + 4.0 * xm.powi(k as i32) * density(xm)
                        + x1.powi(k as i32) * density(x1));
            }
            acc
        };
        assert!((moment(2) - 1.0).abs() < 1e-6);
        assert!((moment(4) - 2.0).abs() < 1e-6);
        assert!(semicircle_ks(&[], 1.0).is_err());
    }

    #[test]
    fn semicircle_permutation_invariance() {
        let xs = vec![0.3, -1.2, 1.9, 0.0, -0.4];
        let mut ys = xs.clone();
        ys.reverse();
        assert_eq!(semicircle_ks(&xs, 1.0).unwrap(), semicircle_ks(&ys, 1.0).unwrap());
    }

    #[test]
    fn submatrix_rho_basics() {
        let d = DenseMatrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(submatrix_rho_dense(&d, 1, SubmatrixMode::Exhaustive).unwrap(), 3.0);
        let h = random_symmetric(12, 5);
        let full = submatrix_rho_dense(&h, 12, SubmatrixMode::Exhaustive).unwrap();
        let s = dense_eigh(&h).unwrap();
        assert!((full - s.spectral_radius_estimate).abs() < 1e-10);
        let ex3 = submatrix_rho_dense(&h, 3, SubmatrixMode::Exhaustive).unwrap();
        let succ3 = submatrix_rho_dense(&h, 3, SubmatrixMode::Successive).unwrap();
        assert!(ex3 >= succ3 - 1e-12);
        // monotone in L
        let mut prev = 0.0;
        for l in 1..=12 {
            let r = submatrix_rho_dense(&h, l, SubmatrixMode::Exhaustive).unwrap();
            assert!(r >= prev - 1e-12, "rho_{l} = {r} < rho_{} = {prev}", l - 1);
            prev = r;
        }
        assert!(matches!(
            submatrix_rho_dense(&random_symmetric(300, 1), 10, SubmatrixMode::Exhaustive),
            Err(Error::CombinatorialBudget(_))
        ));
    }

    #[test]
    fn weyl_interlacing_on_small_matrices() {
        // lambda_k(H) <= lambda_1(H with k-1 rows/cols removed), exact check
        for seed in 0..5u64 {
            let h = random_symmetric(20, 100 + seed);
            let s = dense_eigh(&h).unwrap();
            for k in 2..=6usize {
                let removed: Vec<usize> = (0..k - 1).map(|t| (t * 7 + 3) % 20).collect();
                let mut removed_sorted: Vec<usize> = removed.clone();
                removed_sorted.sort_unstable();
                removed_sorted.dedup();
                if removed_sorted.len() != k - 1 {
                    continue;
                }
                let sub = h.remove_rows_cols(&removed_sorted);
                let top = dense_eigenvalues(&sub).unwrap()[0];
                assert!(
                    s.eigenvalues[k - 1] <= top + 1e-9,
                    "lambda_{k} = {} > {top}",
                    s.eigenvalues[k - 1]
                );
            }
        }
    }
}
