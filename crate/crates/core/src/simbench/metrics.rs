use crate::error::{Error, Result};

fn dist(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

fn directed(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in a {
        let mut best = f64::INFINITY;
        for y in b {
            best = best.min(dist(x, y)?);
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// Euclidean Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("hausdorff point set"));
    }
    Ok(directed(a, b)?.max(directed(b, a)?))
}

/// `|est − truth| / |truth|`.
pub fn rel_error(est: f64, truth: f64) -> Result<f64> {
    if truth == 0.0 {
        return Err(Error::Domain("relative error against a zero truth".into()));
    }
    Ok((est - truth).abs() / truth.abs())
}

/// `‖est − truth‖ / ‖truth‖`.
pub fn rel_error_vec(est: &[f64], truth: &[f64]) -> Result<f64> {
    let zero = vec![0.0; truth.len()];
    let norm = dist(truth, &zero)?;
    if norm == 0.0 {
        return Err(Error::Domain("relative error against a zero truth".into()));
    }
    Ok(dist(est, truth)? / norm)
}

/// Fraction of cross-group local atom pairs on which two labelings agree
/// about being matched together. Pairs within one group are never matched,
/// so they are left out; with a single group the fraction is 1.
pub fn co_cluster_fraction(truth: &[Vec<usize>], est: &[Vec<usize>]) -> Result<f64> {
    if truth.len() != est.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: est.len(),
        });
    }
    for (t, e) in truth.iter().zip(est) {
        if t.len() != e.len() {
            return Err(Error::Dimension {
                expected: t.len(),
                got: e.len(),
            });
        }
    }
    let (mut agree, mut total) = (0u64, 0u64);
    for g in 0..truth.len() {
        for h in g + 1..truth.len() {
            for (ta, ea) in truth[g].iter().zip(&est[g]) {
                for (tb, eb) in truth[h].iter().zip(&est[h]) {
                    total += 1;
                    if (ta == tb) == (ea == eb) {
                        agree += 1;
                    }
                }
            }
        }
    }
    Ok(if total == 0 { 1.0 } else { agree as f64 / total as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hausdorff_examples() {
        let a = vec![vec![1.0, 2.0], vec![-3.0, 0.5]];
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff(&[vec![0.0]], &[vec![3.0]]).unwrap(), 3.0);
        assert_eq!(hausdorff(&[vec![0.0], vec![10.0]], &[vec![0.0]]).unwrap(), 10.0);
        assert!(hausdorff(&[], &a).is_err());
        assert!(hausdorff(&[vec![0.0]], &[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn rel_error_examples() {
        assert_eq!(rel_error(2.5, 2.5).unwrap(), 0.0);
        assert!((rel_error(1.1, 1.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(rel_error(1.0, 0.0).is_err());
        assert_eq!(rel_error_vec(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert!((rel_error_vec(&[3.0, 5.0], &[3.0, 4.0]).unwrap() - 0.2).abs() < 1e-15);
        assert!(rel_error_vec(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn co_cluster_by_hand() {
        let truth = vec![vec![0, 1], vec![0, 1]];
        assert_eq!(co_cluster_fraction(&truth, &truth).unwrap(), 1.0);
        // relabeling does not matter
        assert_eq!(co_cluster_fraction(&truth, &[vec![5, 2], vec![5, 2]]).unwrap(), 1.0);
        // one wrong merge: group 1's second atom is its own global but the
        // estimate puts it with group 0's second atom. Of the four cross
        // pairs only (0,1)-(1,1) disagrees.
        let truth = vec![vec![0, 1], vec![0, 2]];
        let est = vec![vec![0, 1], vec![0, 1]];
        assert_eq!(co_cluster_fraction(&truth, &est).unwrap(), 0.75);
        assert_eq!(co_cluster_fraction(&[vec![0, 1]], &[vec![1, 0]]).unwrap(), 1.0);
        assert!(co_cluster_fraction(&truth, &[vec![0, 1]]).is_err());
    }

    fn point_set() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-50.0..50.0f64, 2), 1..6)
    }

    proptest! {
        #[test]
        fn hausdorff_is_a_metric(a in point_set(), b in point_set(), c in point_set()) {
            let ab = hausdorff(&a, &b).unwrap();
            prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
            prop_assert!(ab >= 0.0);
            let ac = hausdorff(&a, &c).unwrap();
            let cb = hausdorff(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-9 * (1.0 + ab));
        }
    }
}
