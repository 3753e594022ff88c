//! Shared fuzzy-clustering machinery: membership and centroid matrices,
//! objectives, and the FCM / k-means baselines.

use ndarray::{Array1, Array2};
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Row-stochastic `n x K` matrix of fuzzy memberships.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    mu: Array2<f64>,
}

impl MembershipMatrix {
    pub fn new(mu: Array2<f64>) -> Result<Self> {
        for row in mu.rows() {
            let mut sum = 0.0;
            for &v in row.iter() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParam(format!("membership {v} outside [0,1]")));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParam(format!("membership row sums to {sum}, not 1")));
            }
        }
        Ok(MembershipMatrix { mu })
    }

    pub fn mu(&self) -> &Array2<f64> {
        &self.mu
    }

    pub fn n(&self) -> usize {
        self.mu.nrows()
    }

    pub fn k(&self) -> usize {
        self.mu.ncols()
    }

    /// Column weights sum_i mu_ij^2, the membership mass of each cluster.
    pub fn column_mass_sq(&self) -> Vec<f64> {
        (0..self.k())
            .map(|j| self.mu.column(j).iter().map(|&m| m * m).sum())
            .collect()
    }
}

/// `d x K` matrix of cluster centroids, one column per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    u: Array2<f64>,
}

impl CentroidSet {
    pub fn new(u: Array2<f64>) -> Result<Self> {
        if u.ncols() == 0 {
            return Err(Error::InvalidParam("centroid set must have K >= 1".into()));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam("centroid set contains non-finite entries".into()));
        }
        Ok(CentroidSet { u })
    }

    pub fn u(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn u_mut(&mut self) -> &mut Array2<f64> {
        &mut self.u
    }

    pub fn d(&self) -> usize {
        self.u.nrows()
    }

    pub fn k(&self) -> usize {
        self.u.ncols()
    }

    /// Centroids at K distinct sample columns drawn with the seeded RNG.
    pub fn init_from_samples(ds: &Dataset, k: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        if k == 0 || k > ds.len() {
            return Err(Error::InvalidParam(format!(
                "K = {k} out of range 1..={}",
                ds.len()
            )));
        }
        let picks = sample_indices(rng, ds.len(), k);
        let mut u = Array2::zeros((ds.dims(), k));
        for (j, i) in picks.into_iter().enumerate() {
            u.column_mut(j).assign(&ds.points.column(i));
        }
        CentroidSet::new(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcmParams {
    /// Fuzziness exponent, > 1.
    pub b: f64,
    /// Relative objective-change convergence threshold.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FcmParams {
    fn default() -> Self {
        FcmParams {
            b: 2.0,
            tol: 1e-6,
            max_iter: 300,
            seed: 0,
        }
    }
}

/// Squared Euclidean distances, entry (i, j) = ||x_i - u_j||^2.
pub fn squared_distances(ds: &Dataset, u: &CentroidSet) -> Result<Array2<f64>> {
    if ds.dims() != u.d() {
        return Err(Error::DimensionMismatch(format!(
            "dataset has d = {}, centroids have d = {}",
            ds.dims(),
            u.d()
        )));
    }
    let (n, k) = (ds.len(), u.k());
    let mut out = Array2::zeros((n, k));
    for i in 0..n {
        let x = ds.points.column(i);
        for j in 0..k {
            let c = u.u().column(j);
            let mut s = 0.0;
            for (a, b) in x.iter().zip(c.iter()) {
                let diff = a - b;
                s += diff * diff;
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// Membership update for b = 2: mu_ij proportional to 1/d_ij. A sample with
/// m >= 1 zero distances gets 1/m on those clusters and 0 elsewhere.
pub fn update_memberships(d: &Array2<f64>) -> MembershipMatrix {
    membership_from_weights(d, |dist| 1.0 / dist)
}

/// General-b FCM membership update; reduces exactly to [`update_memberships`]
/// at b = 2.
pub fn update_memberships_general(d: &Array2<f64>, b: f64) -> Result<MembershipMatrix> {
    if b <= 1.0 {
        return Err(Error::InvalidParam(format!("fuzziness exponent b = {b} must be > 1")));
    }
    if b == 2.0 {
        return Ok(update_memberships(d));
    }
    let e = 1.0 / (b - 1.0);
    Ok(membership_from_weights(d, move |dist| dist.powf(-e)))
}

fn membership_from_weights(d: &Array2<f64>, weight: impl Fn(f64) -> f64) -> MembershipMatrix {
    let (n, k) = d.dim();
    let mut mu = Array2::zeros((n, k));
    for i in 0..n {
        let row = d.row(i);
        let zeros: Vec<usize> = (0..k).filter(|&j| row[j] < f64::MIN_POSITIVE).collect();
        if !zeros.is_empty() {
            let share = 1.0 / zeros.len() as f64;
            for j in zeros {
                mu[(i, j)] = share;
            }
            continue;
        }
        let weights: Vec<f64> = row.iter().map(|&v| weight(v)).collect();
        let total: f64 = weights.iter().sum();
        for (j, w) in weights.into_iter().enumerate() {
            mu[(i, j)] = w / total;
        }
    }
    MembershipMatrix { mu }
}

/// mu^b-weighted means of the samples.
pub fn fcm_centroids(ds: &Dataset, p: &MembershipMatrix, b: f64) -> Result<CentroidSet> {
    if p.n() != ds.len() {
        return Err(Error::DimensionMismatch(format!(
            "memberships cover {} samples, dataset has {}",
            p.n(),
            ds.len()
        )));
    }
    let (d, k) = (ds.dims(), p.k());
    let mut u = Array2::zeros((d, k));
    for j in 0..k {
        let mut weight_sum = 0.0;
        let mut acc = Array1::<f64>::zeros(d);
        for i in 0..ds.len() {
            let w = p.mu()[(i, j)].powf(b);
            weight_sum += w;
            acc.scaled_add(w, &ds.points.column(i));
        }
        if weight_sum <= 0.0 {
            return Err(Error::DeadCluster(j));
        }
        u.column_mut(j).assign(&(acc / weight_sum));
    }
    CentroidSet::new(u)
}

/// sum_i sum_j mu_ij^b ||x_i - u_j||^2.
pub fn fcm_objective(ds: &Dataset, p: &MembershipMatrix, u: &CentroidSet, b: f64) -> Result<f64> {
    let d = squared_distances(ds, u)?;
    if d.dim() != p.mu().dim() {
        return Err(Error::DimensionMismatch(format!(
            "memberships are {:?}, distances are {:?}",
            p.mu().dim(),
            d.dim()
        )));
    }
    Ok(p.mu()
        .iter()
        .zip(d.iter())
        .map(|(&m, &dist)| m.powf(b) * dist)
        .sum())
}

/// The fused objective at b = 2:
/// (1/2) sum_ij mu_ij^2 ||x_i - u_j||^2 + gamma * sum_{k<l} ||u_k - u_l||_2.
pub fn caf_objective(ds: &Dataset, p: &MembershipMatrix, u: &CentroidSet, gamma: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(Error::InvalidParam(format!("gamma = {gamma} must be >= 0")));
    }
    let data_term = 0.5 * fcm_objective(ds, p, u, 2.0)?;
    Ok(data_term + gamma * fusion_penalty(u))
}

/// sum_{k<l} ||u_k - u_l||_2.
pub fn fusion_penalty(u: &CentroidSet) -> f64 {
    let k = u.k();
    let mut total = 0.0;
    for a in 0..k {
        for b in (a + 1)..k {
            let mut s = 0.0;
            for (x, y) in u.u().column(a).iter().zip(u.u().column(b).iter()) {
                let diff = x - y;
                s += diff * diff;
            }
            total += s.sqrt();
        }
    }
    total
}

#[derive(Debug, Clone)]
pub struct FcmFit {
    pub memberships: MembershipMatrix,
    pub centroids: CentroidSet,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
}

/// Alternate the membership and centroid updates from K random distinct
/// sample columns until the relative objective change drops below tol.
pub fn fcm_fit(ds: &Dataset, k: usize, params: &FcmParams) -> Result<FcmFit> {
    if params.b <= 1.0 {
        return Err(Error::InvalidParam(format!("fuzziness exponent b = {} must be > 1", params.b)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = CentroidSet::init_from_samples(ds, k, &mut rng)?;
    let mut trace = Vec::new();
    let mut memberships = update_memberships_general(&squared_distances(ds, &centroids)?, params.b)?;
    let mut iterations = 0;
    for _ in 0..params.max_iter {
        iterations += 1;
        let d = squared_distances(ds, &centroids)?;
        memberships = update_memberships_general(&d, params.b)?;
        centroids = fcm_centroids(ds, &memberships, params.b)?;
        let obj = fcm_objective(ds, &memberships, &centroids, params.b)?;
        let converged = trace
            .last()
            .map(|&prev: &f64| (prev - obj).abs() <= params.tol * prev.abs().max(1e-12))
            .unwrap_or(false);
        trace.push(obj);
        if converged {
            break;
        }
    }
    Ok(FcmFit {
        memberships,
        centroids,
        iterations,
        objective_trace: trace,
    })
}

#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub assignment: Vec<usize>,
    pub centroids: CentroidSet,
    pub iterations: usize,
}

/// Lloyd iteration from K random distinct sample columns. Empty clusters are
/// reseeded to the point farthest from its current centroid.
pub fn kmeans_fit(ds: &Dataset, k: usize, params: &FcmParams) -> Result<KmeansFit> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = CentroidSet::init_from_samples(ds, k, &mut rng)?;
    let n = ds.len();
    let mut assignment = vec![0usize; n];
    let mut iterations = 0;
    for _ in 0..params.max_iter {
        iterations += 1;
        let dists = squared_distances(ds, &centroids)?;
        let mut new_assignment = vec![0usize; n];
        for i in 0..n {
            let mut best = 0;
            for j in 1..k {
                if dists[(i, j)] < dists[(i, best)] {
                    best = j;
                }
            }
            new_assignment[i] = best;
        }
        // Reseed empty clusters to the farthest point from its own centroid.
        let mut counts = vec![0usize; k];
        for &a in &new_assignment {
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let far = (0..n)
                .max_by(|&a, &b| {
                    dists[(a, new_assignment[a])]
                        .partial_cmp(&dists[(b, new_assignment[b])])
                        .unwrap()
                })
                .unwrap();
            counts[new_assignment[far]] -= 1;
            new_assignment[far] = j;
            counts[j] = 1;
        }
        let mut u = Array2::zeros((ds.dims(), k));
        for i in 0..n {
            let j = new_assignment[i];
            let mut col = u.column_mut(j);
            col += &ds.points.column(i);
        }
        for j in 0..k {
            let c = counts[j] as f64;
            u.column_mut(j).mapv_inplace(|v| v / c);
        }
        centroids = CentroidSet::new(u)?;
        if new_assignment == assignment {
            assignment = new_assignment;
            break;
        }
        assignment = new_assignment;
    }
    Ok(KmeansFit {
        assignment,
        centroids,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate, GeneratorKind, GeneratorSpec};
    use ndarray::arr2;
    use proptest::prelude::*;
    use rand::Rng;

    fn tiny_dataset(points: Vec<f64>, d: usize) -> Dataset {
        let n = points.len() / d;
        let m = Array2::from_shape_vec((n, d), points).unwrap().reversed_axes();
        Dataset::new(m.as_standard_layout().to_owned(), None, "tiny").unwrap()
    }

    #[test]
    fn squared_distance_values() {
        let ds = tiny_dataset(vec![0.0, 0.0], 2);
        let u = CentroidSet::new(arr2(&[[3.0, 0.0], [4.0, 0.0]])).unwrap();
        let d = squared_distances(&ds, &u).unwrap();
        assert_eq!(d[(0, 0)], 25.0);
        assert_eq!(d[(0, 1)], 0.0);
    }

    #[test]
    fn squared_distance_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let ds = tiny_dataset(pts, 3);
        let u = CentroidSet::new(Array2::from_shape_fn((3, 2), |_| rng.gen_range(-2.0..2.0))).unwrap();
        let d = squared_distances(&ds, &u).unwrap();
        for i in 0..ds.len() {
            for j in 0..2 {
                let mut s = 0.0;
                for r in 0..3 {
                    s += (ds.points[(r, i)] - u.u()[(r, j)]).powi(2);
                }
                assert!((d[(i, j)] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn squared_distance_dim_mismatch() {
        let ds = tiny_dataset(vec![0.0, 0.0], 2);
        let u = CentroidSet::new(arr2(&[[1.0]])).unwrap();
        assert!(matches!(squared_distances(&ds, &u), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn membership_rows() {
        let p = update_memberships(&arr2(&[[1.0, 1.0]]));
        assert_eq!(p.mu()[(0, 0)], 0.5);
        let p = update_memberships(&arr2(&[[1.0, 3.0]]));
        assert!((p.mu()[(0, 0)] - 0.75).abs() < 1e-12);
        assert!((p.mu()[(0, 1)] - 0.25).abs() < 1e-12);
        let p = update_memberships(&arr2(&[[0.0, 2.0]]));
        assert_eq!(p.mu()[(0, 0)], 1.0);
        assert_eq!(p.mu()[(0, 1)], 0.0);
    }

    /// Numeric minimization of (1/2) sum_j mu_j^2 d_j over the probability
    /// simplex via projected gradient, used to cross-check Eq-style updates.
    fn simplex_minimizer(d: &[f64], b: f64) -> Vec<f64> {
        let k = d.len();
        let mut mu = vec![1.0 / k as f64; k];
        for _ in 0..200_000 {
            let step = 1e-3;
            let grad: Vec<f64> = mu
                .iter()
                .zip(d.iter())
                .map(|(&m, &dist)| b * m.powf(b - 1.0) * dist)
                .collect();
            for j in 0..k {
                mu[j] -= step * grad[j];
            }
            // project onto the simplex (sort-based algorithm)
            let mut sorted = mu.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut cum = 0.0;
            let mut theta = 0.0;
            for (i, &v) in sorted.iter().enumerate() {
                cum += v;
                let t = (cum - 1.0) / (i + 1) as f64;
                if v > t {
                    theta = t;
                }
            }
            for v in mu.iter_mut() {
                *v = (*v - theta).max(0.0);
            }
        }
        mu
    }

    #[test]
    fn membership_matches_simplex_minimizer() {
        let d = [1.0, 3.0];
        let p = update_memberships(&arr2(&[[d[0], d[1]]]));
        let oracle = simplex_minimizer(&d, 2.0);
        assert!((p.mu()[(0, 0)] - oracle[0]).abs() < 1e-6);
        assert!((p.mu()[(0, 1)] - oracle[1]).abs() < 1e-6);
    }

    #[test]
    fn membership_general_b() {
        let p2 = update_memberships_general(&arr2(&[[1.0, 3.0]]), 2.0).unwrap();
        let p2b = update_memberships(&arr2(&[[1.0, 3.0]]));
        assert_eq!(p2, p2b);
        // b=3: weights (1/d)^{1/2} -> (1, 1/2), normalized (2/3, 1/3)
        let p3 = update_memberships_general(&arr2(&[[1.0, 4.0]]), 3.0).unwrap();
        assert!((p3.mu()[(0, 0)] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p3.mu()[(0, 1)] - 1.0 / 3.0).abs() < 1e-12);
        let p = update_memberships_general(&arr2(&[[1.0, 1.0, 1.0]]), 2.5).unwrap();
        for j in 0..3 {
            assert!((p.mu()[(0, j)] - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(update_memberships_general(&arr2(&[[1.0]]), 1.0).is_err());
    }

    #[test]
    fn centroids_crisp_and_uniform() {
        let ds = tiny_dataset(vec![0.0, 0.0, 2.0, 0.0, 10.0, 4.0, 12.0, 4.0], 2);
        let crisp = MembershipMatrix::new(arr2(&[
            [1.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.0, 1.0],
        ]))
        .unwrap();
        let u = fcm_centroids(&ds, &crisp, 2.0).unwrap();
        assert_eq!(u.u()[(0, 0)], 1.0);
        assert_eq!(u.u()[(1, 0)], 0.0);
        assert_eq!(u.u()[(0, 1)], 11.0);
        assert_eq!(u.u()[(1, 1)], 4.0);

        let uniform = MembershipMatrix::new(Array2::from_elem((4, 2), 0.5)).unwrap();
        let u = fcm_centroids(&ds, &uniform, 2.0).unwrap();
        for j in 0..2 {
            assert!((u.u()[(0, j)] - 6.0).abs() < 1e-12);
            assert!((u.u()[(1, j)] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn centroids_weighted_mean_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ds = tiny_dataset(pts, 3);
        let mut mu = Array2::from_shape_fn((5, 2), |_| rng.gen_range(0.01..1.0));
        for mut row in mu.rows_mut() {
            let s: f64 = row.iter().sum();
            row.mapv_inplace(|v| v / s);
        }
        let p = MembershipMatrix::new(mu).unwrap();
        let u = fcm_centroids(&ds, &p, 2.0).unwrap();
        for j in 0..2 {
            for r in 0..3 {
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 0..5 {
                    let w = p.mu()[(i, j)] * p.mu()[(i, j)];
                    num += w * ds.points[(r, i)];
                    den += w;
                }
                assert!((u.u()[(r, j)] - num / den).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn objectives_basic() {
        let ds = tiny_dataset(vec![1.0, 1.0], 2);
        let u = CentroidSet::new(arr2(&[[1.0], [1.0]])).unwrap();
        let p = MembershipMatrix::new(arr2(&[[1.0]])).unwrap();
        assert_eq!(fcm_objective(&ds, &p, &u, 2.0).unwrap(), 0.0);

        let u = CentroidSet::new(arr2(&[[1.0], [3.0]])).unwrap();
        assert_eq!(fcm_objective(&ds, &p, &u, 2.0).unwrap(), 4.0);
    }

    #[test]
    fn objective_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ds = tiny_dataset(pts, 2);
        let mut mu = Array2::from_shape_fn((4, 3), |_| rng.gen_range(0.01..1.0));
        for mut row in mu.rows_mut() {
            let s: f64 = row.iter().sum();
            row.mapv_inplace(|v| v / s);
        }
        let p = MembershipMatrix::new(mu).unwrap();
        let u = CentroidSet::new(Array2::from_shape_fn((2, 3), |_| rng.gen_range(-1.0..1.0))).unwrap();
        let b = 2.3;
        let got = fcm_objective(&ds, &p, &u, b).unwrap();
        let mut want = 0.0;
        for i in 0..4 {
            for j in 0..3 {
                let mut dist = 0.0;
                for r in 0..2 {
                    dist += (ds.points[(r, i)] - u.u()[(r, j)]).powi(2);
                }
                want += p.mu()[(i, j)].powf(b) * dist;
            }
        }
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn caf_objective_values() {
        let ds = tiny_dataset(vec![0.5, 0.5], 2);
        let p = MembershipMatrix::new(arr2(&[[0.5, 0.5]])).unwrap();
        // gamma = 0: half the b=2 FCM objective
        let u = CentroidSet::new(arr2(&[[0.0, 1.0], [0.0, 1.0]])).unwrap();
        let caf = caf_objective(&ds, &p, &u, 0.0).unwrap();
        let fcm = fcm_objective(&ds, &p, &u, 2.0).unwrap();
        assert!((caf - 0.5 * fcm).abs() < 1e-12);
        // equal centroids: fusion term 0 for any gamma
        let ueq = CentroidSet::new(arr2(&[[1.0, 1.0], [1.0, 1.0]])).unwrap();
        let a = caf_objective(&ds, &p, &ueq, 0.0).unwrap();
        let b = caf_objective(&ds, &p, &ueq, 100.0).unwrap();
        assert_eq!(a, b);
        // K=2, u1 = (0,0), u2 = (3,4), gamma = 1: data term + 5
        let u2 = CentroidSet::new(arr2(&[[0.0, 3.0], [0.0, 4.0]])).unwrap();
        let t = 0.5 * fcm_objective(&ds, &p, &u2, 2.0).unwrap();
        assert!((caf_objective(&ds, &p, &u2, 1.0).unwrap() - (t + 5.0)).abs() < 1e-12);
        assert!(caf_objective(&ds, &p, &u2, -1.0).is_err());
    }

    #[test]
    fn fcm_fit_k1_is_mean() {
        let ds = tiny_dataset(vec![0.0, 0.0, 4.0, 0.0], 2);
        let fit = fcm_fit(&ds, 1, &FcmParams::default()).unwrap();
        assert!((fit.centroids.u()[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fcm_fit_two_pairs() {
        // two well-separated pairs; centroids converge to pair midpoints
        let ds = Dataset::new(
            arr2(&[[0.0, 1.0, 10.0, 11.0], [0.0, 0.0, 0.0, 0.0]]),
            Some(vec![0, 0, 1, 1]),
            "pairs",
        )
        .unwrap();
        let fit = fcm_fit(&ds, 2, &FcmParams { seed: 5, ..Default::default() }).unwrap();
        let assign = crate::hierarchy::hard_assignment(&fit.memberships);
        let pred: Vec<i64> = assign.iter().map(|&a| a as i64).collect();
        let ari = crate::metrics::adjusted_rand_index(&pred, ds.labels.as_ref().unwrap()).unwrap();
        assert_eq!(ari, 1.0);
        let mut mids: Vec<f64> = (0..2).map(|j| fit.centroids.u()[(0, j)]).collect();
        mids.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mids[0] - 0.5).abs() < 1e-3);
        assert!((mids[1] - 10.5).abs() < 1e-3);
    }

    #[test]
    fn fcm_trace_monotone() {
        let ds = generate(&GeneratorSpec::new(GeneratorKind::GaussianMixture2d, 60, 9)).unwrap();
        let fit = fcm_fit(&ds, 4, &FcmParams { seed: 9, ..Default::default() }).unwrap();
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn kmeans_edges() {
        let ds = tiny_dataset(vec![0.0, 0.0, 4.0, 0.0, 8.0, 0.0], 2);
        let fit = kmeans_fit(&ds, 3, &FcmParams::default()).unwrap();
        let distinct: std::collections::HashSet<_> = fit.assignment.iter().collect();
        assert_eq!(distinct.len(), 3);
        let fit1 = kmeans_fit(&ds, 1, &FcmParams::default()).unwrap();
        assert!((fit1.centroids.u()[(0, 0)] - 4.0).abs() < 1e-12);
        assert!(kmeans_fit(&ds, 4, &FcmParams::default()).is_err());
    }

    #[test]
    fn crisp_fcm_centroids_equal_kmeans_step() {
        let ds = tiny_dataset(vec![0.0, 0.0, 2.0, 2.0, 9.0, 1.0, 11.0, 3.0], 2);
        let crisp = MembershipMatrix::new(arr2(&[
            [1.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.0, 1.0],
        ]))
        .unwrap();
        let u = fcm_centroids(&ds, &crisp, 2.0).unwrap();
        // k-means centroid step: per-cluster arithmetic means, exactly
        assert_eq!(u.u()[(0, 0)], 1.0);
        assert_eq!(u.u()[(1, 0)], 1.0);
        assert_eq!(u.u()[(0, 1)], 10.0);
        assert_eq!(u.u()[(1, 1)], 2.0);
    }

    proptest! {
        #[test]
        fn membership_rows_sum_to_one(
            raw in proptest::collection::vec(0.0f64..10.0, 12)
        ) {
            let d = Array2::from_shape_vec((4, 3), raw).unwrap();
            let p = update_memberships(&d);
            for row in p.mu().rows() {
                let s: f64 = row.iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn membership_update_minimizes_caf_objective() {
        // Eq-(7)-style update beats 1000 random feasible memberships.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let ds = tiny_dataset(pts, 2);
        let u = CentroidSet::new(Array2::from_shape_fn((2, 3), |_| rng.gen_range(-2.0..2.0))).unwrap();
        let d = squared_distances(&ds, &u).unwrap();
        let best = caf_objective(&ds, &update_memberships(&d), &u, 0.7).unwrap();
        for _ in 0..1000 {
            let mut mu = Array2::from_shape_fn((5, 3), |_| rng.gen_range(0.0..1.0f64));
            for mut row in mu.rows_mut() {
                let s: f64 = row.iter().sum();
                row.mapv_inplace(|v| v / s);
            }
            let p = MembershipMatrix::new(mu).unwrap();
            let obj = caf_objective(&ds, &p, &u, 0.7).unwrap();
            assert!(best <= obj + 1e-9);
        }
    }
}
