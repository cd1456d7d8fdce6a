use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::SimInstance;

/// Upper bound on Lloyd iterations per run.
pub const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares of the final labels and centroids.
    pub inertia: f64,
    /// SSE after every assignment step, in order.
    pub sse_history: Vec<f64>,
}

/// Row-major point matrix.
struct Points {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl Points {
    fn from_rows<'a, I: IntoIterator<Item = &'a Vec<f64>>>(rows: I) -> Result<Self> {
        let mut data = Vec::new();
        let mut n = 0;
        let mut d = None;
        for r in rows {
            match d {
                None => d = Some(r.len()),
                Some(d) if d != r.len() => {
                    return Err(Error::Dimension {
                        expected: d,
                        got: r.len(),
                    })
                }
                _ => {}
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain(format!("point {n} is not finite")));
            }
            data.extend_from_slice(r);
            n += 1;
        }
        let d = d.ok_or(Error::Empty("k-means data"))?;
        if d == 0 {
            return Err(Error::Empty("point dimension"));
        }
        Ok(Self { data, n, d })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared distance, or `None` as soon as the running sum exceeds `bound`.
fn sq_dist_below(a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    let mut acc = 0.0;
    for (ca, cb) in a.chunks(8).zip(b.chunks(8)) {
        acc += sq_dist(ca, cb);
        if acc >= bound {
            return None;
        }
    }
    Some(acc)
}

fn nearest(p: &[f64], centroids: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.chunks_exact(d).enumerate() {
        if let Some(dist) = sq_dist_below(p, cen, best.1) {
            best = (c, dist);
        }
    }
    best
}

fn sample_weighted<R: Rng>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    if total <= 0.0 {
        return rng.random_range(0..weights.len());
    }
    let mut u = rng.random::<f64>() * total;
    let mut pick = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            pick = Some(i);
            if u < w {
                break;
            }
            u -= w;
        }
    }
    pick.expect("positive total weight")
}

/// Greedy k-means++: each new centre is the best of `2 + ⌊ln k⌋` candidates
/// drawn by squared distance, judged by the resulting potential.
fn plus_plus<R: Rng>(pts: &Points, k: usize, rng: &mut R) -> Vec<f64> {
    let d = pts.d;
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centroids = Vec::with_capacity(k * d);
    let first = rng.random_range(0..pts.n);
    centroids.extend_from_slice(pts.row(first));
    let mut dist: Vec<f64> = (0..pts.n).map(|i| sq_dist(pts.row(i), pts.row(first))).collect();
    let mut candidate = vec![0.0; pts.n];
    let mut best_dist = vec![0.0; pts.n];
    for _ in 1..k {
        let total: f64 = dist.iter().sum();
        let mut best: Option<(usize, f64)> = None;
        for _ in 0..trials {
            let c = sample_weighted(&dist, total, rng);
            let mut potential = 0.0;
            for (i, (w, out)) in dist.iter().zip(candidate.iter_mut()).enumerate() {
                *out = match sq_dist_below(pts.row(i), pts.row(c), *w) {
                    Some(x) => x,
                    None => *w,
                };
                potential += *out;
            }
            if best.is_none_or(|(_, p)| potential < p) {
                best = Some((c, potential));
                std::mem::swap(&mut best_dist, &mut candidate);
            }
        }
        let (c, _) = best.expect("at least two trials");
        std::mem::swap(&mut dist, &mut best_dist);
        centroids.extend_from_slice(pts.row(c));
    }
    centroids
}

fn lloyd(pts: &Points, mut centroids: Vec<f64>, k: usize) -> KMeansFit {
    let d = pts.d;
    let mut labels = vec![usize::MAX; pts.n];
    let mut sse_history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        let mut sse = 0.0;
        for i in 0..pts.n {
            let (c, dist) = nearest(pts.row(i), &centroids, d);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            sse += dist;
        }
        sse_history.push(sse);
        if !changed {
            break;
        }
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for i in 0..pts.n {
            let c = labels[i];
            counts[c] += 1;
            for (s, x) in sums[c * d..(c + 1) * d].iter_mut().zip(pts.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            // an empty cluster keeps its centroid
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (cen, s) in centroids[c * d..(c + 1) * d].iter_mut().zip(&sums[c * d..(c + 1) * d]) {
                    *cen = s * inv;
                }
            }
        }
    }
    let inertia = *sse_history.last().expect("at least one assignment step");
    KMeansFit {
        centroids: centroids.chunks_exact(d).map(<[f64]>::to_vec).collect(),
        labels,
        inertia,
        sse_history,
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Config(format!("k = {k} exceeds the number of points ({n})")));
    }
    Ok(())
}

fn best_of(pts: &Points, k: usize, seed: u64, n_init: usize) -> Result<KMeansFit> {
    check_k(k, pts.n)?;
    if n_init == 0 {
        return Err(Error::Config("n_init must be at least 1".into()));
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..n_init {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.random());
        let fit = lloyd(pts, plus_plus(pts, k, &mut rng), k);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

/// One greedy k-means++ initialisation followed by Lloyd iterations to a fixed point.
pub fn kmeans(data: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit> {
    kmeans_best_of(data, k, seed, 1)
}

/// Lowest-inertia fit over `n_init` independent k-means++ starts.
pub fn kmeans_best_of(data: &[Vec<f64>], k: usize, seed: u64, n_init: usize) -> Result<KMeansFit> {
    let pts = Points::from_rows(data)?;
    best_of(&pts, k, seed, n_init)
}

/// k-means on the raw points of every group pooled together.
pub fn baseline_pooled(instance: &SimInstance, k: usize, seed: u64, n_init: usize) -> Result<Vec<Vec<f64>>> {
    let pts = Points::from_rows(instance.groups.iter().flat_map(|g| &g.points))?;
    Ok(best_of(&pts, k, seed, n_init)?.centroids)
}

/// k-means on the concatenated local atom estimates.
pub fn baseline_match_kmeans(
    local_atom_sets: &[Vec<Vec<f64>>],
    k: usize,
    seed: u64,
    n_init: usize,
) -> Result<Vec<Vec<f64>>> {
    let pts = Points::from_rows(local_atom_sets.iter().flatten())?;
    Ok(best_of(&pts, k, seed, n_init)?.centroids)
}
