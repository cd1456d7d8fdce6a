//! Independent oracles and instance builders shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spahm_core::fusion::{GaussianHyper, GlobalState, LocalGroup, NewAtomPenalty};
use statrs::function::gamma::ln_gamma;

/// Compact per-group labels into first-appearance order.
pub fn canonical(labels: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen: Vec<usize> = Vec::new();
    labels
        .iter()
        .map(|g| {
            g.iter()
                .map(|&x| match seen.iter().position(|&s| s == x) {
                    Some(p) => p,
                    None => {
                        seen.push(x);
                        seen.len() - 1
                    }
                })
                .collect()
        })
        .collect()
}

/// Log prior of the assignments written directly in terms of atom counts:
/// each global atom held by `m` of `J` groups contributes
/// `log(αγ0) + log Γ(m) + log Γ(α + J − m) − log Γ(α + J)`.
/// Under the rank penalty each group additionally pays `log k!` for the
/// `k` atoms it is first to hold (groups taken in index order).
pub fn oracle_log_prior(labels: &[Vec<usize>], alpha: f64, gamma0: f64, penalty: NewAtomPenalty) -> f64 {
    let j = labels.len() as f64;
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for g in labels {
        for &x in g {
            match counts.iter_mut().find(|(l, _)| *l == x) {
                Some((_, c)) => *c += 1,
                None => counts.push((x, 1)),
            }
        }
    }
    let mut total: f64 = counts
        .iter()
        .map(|&(_, m)| {
            let m = m as f64;
            (alpha * gamma0).ln() + ln_gamma(m) + ln_gamma(alpha + j - m) - ln_gamma(alpha + j)
        })
        .sum();
    if penalty == NewAtomPenalty::Rank {
        let mut seen: Vec<usize> = Vec::new();
        for g in labels {
            let fresh = g.iter().filter(|x| !seen.contains(x)).count();
            total -= ln_gamma(fresh as f64 + 1.0);
            seen.extend(g.iter().copied());
        }
    }
    total
}

/// Log density of `m` scalars `x_i = θ + ε_i`, `θ ~ N(μ0, σ0²)`, `ε_i ~ N(0, σ²)`,
/// from the multivariate normal with covariance `σ² I + σ0² 1 1ᵀ`.
pub fn oracle_cluster_loglik(xs: &[f64], mu0: f64, sigma0_sq: f64, sigma_sq: f64) -> f64 {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let within: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let total_var = sigma_sq + m * sigma0_sq;
    -0.5 * m * (2.0 * std::f64::consts::PI * sigma_sq).ln() - 0.5 * (total_var / sigma_sq).ln()
        - within / (2.0 * sigma_sq)
        - m * (mean - mu0) * (mean - mu0) / (2.0 * total_var)
}

/// Full objective computed from the two oracles above.
pub fn oracle_objective(groups: &[LocalGroup], labels: &[Vec<usize>], h: &GaussianHyper, penalty: NewAtomPenalty) -> f64 {
    let labels = canonical(labels);
    let mut total = oracle_log_prior(&labels, h.alpha, h.gamma0, penalty);
    let k = labels.iter().flatten().max().map_or(0, |m| m + 1);
    for atom in 0..k {
        let members: Vec<&Vec<f64>> = groups
            .iter()
            .zip(&labels)
            .flat_map(|(g, lab)| g.atoms.iter().zip(lab).filter(|(_, &x)| x == atom).map(|(a, _)| a))
            .collect();
        for (dim, &mu) in h.mu0.iter().enumerate() {
            let xs: Vec<f64> = members.iter().map(|a| a[dim]).collect();
            total += oracle_cluster_loglik(&xs, mu, h.sigma0_sq, h.sigma_sq);
        }
    }
    total
}

/// Random small fusion problem: `j` groups of up to `max_l` atoms in `d`
/// dimensions drawn around a few shared centres.
pub fn random_instance(seed: u64, max_j: usize, max_l: usize, max_d: usize) -> (Vec<LocalGroup>, GaussianHyper) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = rng.random_range(1..=max_j);
    let d = rng.random_range(1..=max_d);
    let centres: Vec<Vec<f64>> = (0..max_l + 2)
        .map(|_| (0..d).map(|_| rng.random_range(-4.0..4.0)).collect())
        .collect();
    let spread = [0.05, 0.3, 1.0][rng.random_range(0..3)];
    let groups = (0..j)
        .map(|id| {
            let l = rng.random_range(1..=max_l);
            let atoms = (0..l)
                .map(|_| {
                    let c = &centres[rng.random_range(0..centres.len())];
                    c.iter().map(|x| x + spread * rng.random_range(-1.0..1.0)).collect()
                })
                .collect();
            LocalGroup::new(id, atoms).unwrap()
        })
        .collect();
    let hyper = GaussianHyper::new(
        (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        rng.random_range(1.0..10.0),
        rng.random_range(0.05..1.0),
        rng.random_range(0.5..3.0),
        rng.random_range(0.5..3.0),
    )
    .unwrap();
    (groups, hyper)
}

/// Random valid labeling of every group (distinct labels within a group).
pub fn random_labels(groups: &[LocalGroup], rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let total: usize = groups.iter().map(LocalGroup::len).sum();
    groups
        .iter()
        .map(|g| {
            let mut pool: Vec<usize> = (0..total).collect();
            (0..g.len())
                .map(|_| pool.swap_remove(rng.random_range(0..pool.len())))
                .collect()
        })
        .collect()
}

/// Every injective map of `cols` columns into `rows` rows.
pub fn injections(rows: usize, cols: usize) -> Vec<Vec<usize>> {
    fn go(rows: usize, cols: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == cols {
            out.push(cur.clone());
            return;
        }
        for r in 0..rows {
            if !cur.contains(&r) {
                cur.push(r);
                go(rows, cols, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(rows, cols, &mut Vec::new(), &mut out);
    out
}

/// Every assignment of all groups, up to relabeling of global atoms.
pub fn all_assignments(sizes: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![Vec::new()];
    let mut next_label = vec![0usize];
    for &l in sizes {
        let mut grown = Vec::new();
        let mut grown_next = Vec::new();
        for (partial, &k) in out.iter().zip(&next_label) {
            for inj in injections(k + l, l) {
                // rows >= k are new atoms; keep only one ordering of them
                let fresh: Vec<usize> = inj.iter().copied().filter(|&r| r >= k).collect();
                if fresh.windows(2).any(|w| w[0] > w[1]) || fresh.iter().enumerate().any(|(i, &r)| r != k + i) {
                    continue;
                }
                let mut p: Vec<Vec<usize>> = partial.clone();
                p.push(inj.clone());
                grown.push(p);
                grown_next.push(k + fresh.len());
            }
        }
        out = grown;
        next_label = grown_next;
    }
    out
}

pub fn state(groups: &[LocalGroup], labels: &[Vec<usize>], hyper: &GaussianHyper) -> GlobalState {
    GlobalState::from_assignments(groups, labels, hyper.clone()).unwrap()
}
