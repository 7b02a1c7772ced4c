//! Exact photon-count distributions for a detector made of independent
//! sites observed over `M` subintervals.
//!
//! `site_probs[i][m]` is the probability that site `i`, still bound at the
//! start of subinterval `m`, ionizes during it. An ionized site stays
//! ionized.

use std::collections::BTreeMap;

use crate::error::{OpticsError, Result};

/// Upper bound on DP states times branches per subinterval.
pub const MAX_WORK: usize = 50_000_000;

fn check(site_probs: &[Vec<f64>]) -> Result<usize> {
    let m = site_probs.first().map_or(0, Vec::len);
    for row in site_probs {
        if row.len() != m {
            return Err(OpticsError::InvalidParameter(
                "every site needs one probability per subinterval".into(),
            ));
        }
        if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(OpticsError::InvalidParameter(format!("probability {p} outside [0, 1]")));
        }
    }
    Ok(m)
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    pmf[0] = 1.0;
    for _ in 0..n {
        for k in (0..n).rev() {
            let moved = pmf[k] * p;
            pmf[k + 1] += moved;
            pmf[k] -= moved;
        }
    }
    pmf
}

/// Distribution of the number of subintervals in which at least one
/// still-bound site ionizes. Entry `k` is `Pr(N = k)` for `k = 0..=L`; the
/// count never exceeds the number of sites.
///
/// Sites with identical probability rows are grouped, and the DP state is
/// the number of still-bound sites per group plus the running count.
pub fn exact_count_distribution(site_probs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = check(site_probs)?;
    let l = site_probs.len();
    let mut classes: Vec<(&Vec<f64>, usize)> = Vec::new();
    for row in site_probs {
        match classes.iter_mut().find(|(r, _)| *r == row) {
            Some((_, n)) => *n += 1,
            None => classes.push((row, 1)),
        }
    }
    let branches: usize = classes.iter().map(|(_, n)| n + 1).product();
    let work = branches.saturating_mul(branches).saturating_mul(l + 1);
    if work > MAX_WORK {
        return Err(OpticsError::TooLarge { states: work, limit: MAX_WORK });
    }

    let start: Vec<usize> = classes.iter().map(|(_, n)| *n).collect();
    let mut states: BTreeMap<(Vec<usize>, usize), f64> = BTreeMap::new();
    states.insert((start, 0), 1.0);
    for sub in 0..m {
        let mut next: BTreeMap<(Vec<usize>, usize), f64> = BTreeMap::new();
        for ((remaining, count), w) in states {
            let pmfs: Vec<Vec<f64>> = remaining
                .iter()
                .zip(&classes)
                .map(|(&r, (row, _))| binomial_pmf(r, row[sub]))
                .collect();
            let mut k = vec![0usize; remaining.len()];
            loop {
                let p: f64 = k.iter().zip(&pmfs).map(|(&ki, pmf)| pmf[ki]).product();
                if p > 0.0 {
                    let left: Vec<usize> = remaining.iter().zip(&k).map(|(r, ki)| r - ki).collect();
                    let hit = usize::from(k.iter().any(|&ki| ki > 0));
                    *next.entry((left, count + hit)).or_insert(0.0) += w * p;
                }
                let mut pos = 0;
                while pos < k.len() {
                    k[pos] += 1;
                    if k[pos] <= remaining[pos] {
                        break;
                    }
                    k[pos] = 0;
                    pos += 1;
                }
                if pos == k.len() {
                    break;
                }
            }
        }
        states = next;
    }
    let mut dist = vec![0.0; l + 1];
    for ((_, count), w) in states {
        dist[count] += w;
    }
    Ok(dist)
}

/// Distribution of the number of sites ionized by the end of the window,
/// by convolving per-site survival.
pub fn site_count_distribution(site_probs: &[Vec<f64>]) -> Result<Vec<f64>> {
    check(site_probs)?;
    let mut dist = vec![1.0];
    for row in site_probs {
        let q = 1.0 - row.iter().map(|p| 1.0 - p).product::<f64>();
        let mut next = vec![0.0; dist.len() + 1];
        for (k, &w) in dist.iter().enumerate() {
            next[k] += w * (1.0 - q);
            next[k + 1] += w * q;
        }
        dist = next;
    }
    Ok(dist)
}

/// Uniform per-site, per-subinterval probability giving `total_mean`
/// expected ionizations to first order.
pub fn uniform_site_probs(sites: usize, subintervals: usize, total_mean: f64) -> Vec<Vec<f64>> {
    let p = total_mean / (sites * subintervals) as f64;
    vec![vec![p; subintervals]; sites]
}

pub fn poisson_pmf(mean: f64, kmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut p = (-mean).exp();
    for k in 0..=kmax {
        out.push(p);
        p *= mean / (k + 1) as f64;
    }
    out
}

/// Total-variation distance between a finite distribution and Poisson,
/// including the Poisson tail beyond the support.
pub fn tv_distance_to_poisson(dist: &[f64], mean: f64) -> f64 {
    let q = poisson_pmf(mean, dist.len().saturating_sub(1));
    let head: f64 = dist.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
    let tail = (1.0 - q.iter().sum::<f64>()).max(0.0);
    0.5 * (head + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_probability_means_no_counts() {
        let d = exact_count_distribution(&vec![vec![0.0; 5]; 4]).unwrap();
        assert_eq!(d[0], 1.0);
        assert!(d[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_site_saturates() {
        let row = vec![0.1, 0.2, 0.3];
        let d = exact_count_distribution(&[row.clone()]).unwrap();
        assert_eq!(d.len(), 2);
        let expect = 1.0 - row.iter().map(|p| 1.0 - p).product::<f64>();
        assert!((d[1] - expect).abs() < 1e-15);
    }

    #[test]
    fn binomial_is_normalized() {
        let b = binomial_pmf(7, 0.3);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((b[2] - 21.0 * 0.09 * 0.7f64.powi(5)).abs() < 1e-15);
    }
}
