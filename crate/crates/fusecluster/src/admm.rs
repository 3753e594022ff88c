//! ADMM solver for the centroid subproblem: the smooth membership-weighted
//! data term plus the pairwise l2 fusion penalty, split over per-pair
//! difference variables with dual ascent.

use ndarray::{Array1, Array2};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fuzzy::{CentroidSet, MembershipMatrix};

/// Canonical lexicographic enumeration of the K(K-1)/2 centroid pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairIndex {
    k: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndex {
    pub fn new(k: usize) -> Self {
        let mut pairs = Vec::with_capacity(k * (k.max(1) - 1) / 2);
        for a in 0..k {
            for b in (a + 1)..k {
                pairs.push((a, b));
            }
        }
        PairIndex { k, pairs }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn count(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Flat index of pair (k, l), requiring k < l.
    pub fn flat(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b && b < self.k);
        a * self.k - a * (a + 1) / 2 + (b - a - 1)
    }

    pub fn pair(&self, p: usize) -> (usize, usize) {
        self.pairs[p]
    }
}

/// Difference variables and dual multipliers over all centroid pairs.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub pairs: PairIndex,
    /// d x P difference variables v_kl.
    pub v: Array2<f64>,
    /// d x P dual multipliers lambda_kl.
    pub lambda: Array2<f64>,
    /// Augmented-Lagrangian parameter, > 0.
    pub beta: f64,
}

impl AdmmState {
    pub fn zeros(d: usize, k: usize, beta: f64) -> Self {
        let pairs = PairIndex::new(k);
        let p = pairs.count();
        AdmmState {
            pairs,
            v: Array2::zeros((d, p)),
            lambda: Array2::zeros((d, p)),
            beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmParams {
    pub beta: f64,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iter: usize,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams {
            beta: 1.0,
            tol_primal: 1e-5,
            tol_dual: 1e-5,
            max_iter: 500,
        }
    }
}

/// Proximal operator of sigma * ||.||_2: shrinks z radially, snapping to zero
/// when ||z|| <= sigma.
pub fn block_soft_threshold(z: &Array1<f64>, sigma: f64) -> Result<Array1<f64>> {
    if sigma < 0.0 {
        return Err(Error::InvalidParam(format!("threshold sigma = {sigma} must be >= 0")));
    }
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= sigma {
        return Ok(Array1::zeros(z.len()));
    }
    let scale = 1.0 - sigma / norm;
    Ok(z.mapv(|v| scale * v))
}

/// Per-cluster moments of the data term: w_j = sum_i mu_ij^2 and
/// s_j = sum_i mu_ij^2 x_i.
pub(crate) fn membership_moments(ds: &Dataset, p: &MembershipMatrix) -> (Vec<f64>, Array2<f64>) {
    let (d, k, n) = (ds.dims(), p.k(), ds.len());
    let mut w = vec![0.0; k];
    let mut s = Array2::zeros((d, k));
    for i in 0..n {
        let x = ds.points.column(i);
        for j in 0..k {
            let m = p.mu()[(i, j)];
            let m2 = m * m;
            w[j] += m2;
            let mut col = s.column_mut(j);
            col.scaled_add(m2, &x);
        }
    }
    (w, s)
}

fn centroid_column_from_moments(
    j: usize,
    w_j: f64,
    s_j: ndarray::ArrayView1<f64>,
    u: &Array2<f64>,
    state: &AdmmState,
) -> Array1<f64> {
    let k = u.ncols();
    let beta = state.beta;
    if beta == 0.0 || k == 1 {
        return s_j.mapv(|v| v / w_j);
    }
    let d = u.nrows();
    let mut alpha = Array1::<f64>::zeros(d);
    for l in 0..k {
        if l != j {
            alpha += &u.column(l);
        }
    }
    for l in (j + 1)..k {
        let p = state.pairs.flat(j, l);
        for r in 0..d {
            alpha[r] += state.v[(r, p)] + state.lambda[(r, p)] / beta;
        }
    }
    for a in 0..j {
        let p = state.pairs.flat(a, j);
        for r in 0..d {
            alpha[r] -= state.v[(r, p)] + state.lambda[(r, p)] / beta;
        }
    }
    let den = w_j + beta * (k as f64 - 1.0);
    let mut out = alpha.mapv(|v| beta * v);
    out += &s_j;
    out.mapv(|v| v / den)
}

/// Exact minimizer of the augmented Lagrangian in the j-th centroid column
/// with every other variable held fixed.
pub fn update_centroid_column(
    j: usize,
    ds: &Dataset,
    p: &MembershipMatrix,
    u: &CentroidSet,
    state: &AdmmState,
) -> Result<Array1<f64>> {
    if j >= u.k() {
        return Err(Error::InvalidParam(format!("column {j} out of range for K = {}", u.k())));
    }
    if ds.dims() != u.d() || p.k() != u.k() || p.n() != ds.len() {
        return Err(Error::DimensionMismatch("update_centroid_column shapes".into()));
    }
    let (w, s) = membership_moments(ds, p);
    Ok(centroid_column_from_moments(j, w[j], s.column(j), u.u(), state))
}

/// Proximal difference update and dual ascent for one pair (k, l):
/// v <- prox_{gamma/beta}(u_k - u_l - lambda/beta), lambda <- lambda + beta(v - u_k + u_l).
pub fn update_pair(
    a: usize,
    b: usize,
    u: &CentroidSet,
    state: &AdmmState,
    gamma: f64,
) -> Result<(Array1<f64>, Array1<f64>)> {
    if gamma < 0.0 {
        return Err(Error::InvalidParam(format!("gamma = {gamma} must be >= 0")));
    }
    let beta = state.beta;
    let p = state.pairs.flat(a, b);
    let d = u.d();
    let mut z = Array1::zeros(d);
    for r in 0..d {
        z[r] = u.u()[(r, a)] - u.u()[(r, b)] - state.lambda[(r, p)] / beta;
    }
    let v = block_soft_threshold(&z, gamma / beta)?;
    let mut lambda = Array1::zeros(d);
    for r in 0..d {
        lambda[r] = state.lambda[(r, p)] + beta * (v[r] - u.u()[(r, a)] + u.u()[(r, b)]);
    }
    Ok((v, lambda))
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    pub centroids: CentroidSet,
    pub state: AdmmState,
    /// Per-iteration (primal, dual) residuals.
    pub residuals: Vec<(f64, f64)>,
    pub converged: bool,
    pub iterations: usize,
}

/// Solve the centroid subproblem by ADMM from `u_init`, with fresh zero
/// difference/dual state.
pub fn admm_u(
    ds: &Dataset,
    p: &MembershipMatrix,
    u_init: &CentroidSet,
    gamma: f64,
    params: &AdmmParams,
) -> Result<AdmmOutcome> {
    let state = AdmmState::zeros(u_init.d(), u_init.k(), params.beta);
    admm_u_with_state(ds, p, u_init, state, gamma, params)
}

/// As [`admm_u`], but continuing from existing difference/dual state
/// (used to warm-start across outer cycles).
pub fn admm_u_with_state(
    ds: &Dataset,
    p: &MembershipMatrix,
    u_init: &CentroidSet,
    mut state: AdmmState,
    gamma: f64,
    params: &AdmmParams,
) -> Result<AdmmOutcome> {
    if gamma < 0.0 {
        return Err(Error::InvalidParam(format!("gamma = {gamma} must be >= 0")));
    }
    if params.beta <= 0.0 {
        return Err(Error::InvalidParam(format!("beta = {} must be > 0", params.beta)));
    }
    if ds.dims() != u_init.d() || p.k() != u_init.k() || p.n() != ds.len() {
        return Err(Error::DimensionMismatch("admm_u shapes".into()));
    }
    let k = u_init.k();
    let d = u_init.d();
    state.beta = params.beta;
    debug_assert_eq!(state.pairs.k(), k);
    let (w, s) = membership_moments(ds, p);
    let mut u = u_init.u().clone();
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let sigma = gamma / params.beta;
    for _ in 0..params.max_iter {
        iterations += 1;
        // Gauss-Seidel sweep over centroid columns in order.
        let mut dual_res = 0.0f64;
        for j in 0..k {
            let new_col = centroid_column_from_moments(j, w[j], s.column(j), &u, &state);
            for r in 0..d {
                let change = (new_col[r] - u[(r, j)]).abs();
                dual_res = dual_res.max(params.beta * change);
                u[(r, j)] = new_col[r];
            }
        }
        // Pair updates: prox on the differences, then dual ascent.
        let mut primal_res = 0.0f64;
        for (idx, &(a, b)) in state.pairs.pairs().iter().enumerate() {
            let beta = state.beta;
            let mut z = Array1::zeros(d);
            for r in 0..d {
                z[r] = u[(r, a)] - u[(r, b)] - state.lambda[(r, idx)] / beta;
            }
            let v = block_soft_threshold(&z, sigma)?;
            for r in 0..d {
                let residual = v[r] - u[(r, a)] + u[(r, b)];
                primal_res = primal_res.max(residual.abs());
                state.lambda[(r, idx)] += beta * residual;
                state.v[(r, idx)] = v[r];
            }
        }
        residuals.push((primal_res, dual_res));
        if primal_res < params.tol_primal && dual_res < params.tol_dual {
            converged = true;
            break;
        }
    }
    Ok(AdmmOutcome {
        centroids: CentroidSet::new(u)?,
        state,
        residuals,
        converged,
        iterations,
    })
}

/// Evaluate the augmented Lagrangian L_beta(U, V, Lambda); used by tests.
pub fn augmented_lagrangian(
    ds: &Dataset,
    p: &MembershipMatrix,
    u: &CentroidSet,
    state: &AdmmState,
    gamma: f64,
) -> Result<f64> {
    let d = crate::fuzzy::squared_distances(ds, u)?;
    if d.dim() != p.mu().dim() {
        return Err(Error::DimensionMismatch("augmented_lagrangian shapes".into()));
    }
    let mut total = 0.5
        * p.mu()
            .iter()
            .zip(d.iter())
            .map(|(&m, &dist)| m * m * dist)
            .sum::<f64>();
    for (idx, &(a, b)) in state.pairs.pairs().iter().enumerate() {
        let mut v_norm2 = 0.0;
        let mut inner = 0.0;
        let mut residual2 = 0.0;
        for r in 0..u.d() {
            let v = state.v[(r, idx)];
            v_norm2 += v * v;
            let res = v - u.u()[(r, a)] + u.u()[(r, b)];
            inner += state.lambda[(r, idx)] * res;
            residual2 += res * res;
        }
        total += gamma * v_norm2.sqrt() + inner + 0.5 * state.beta * residual2;
    }
    Ok(total)
}
