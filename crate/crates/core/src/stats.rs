//! Rank-based tests (Kruskal-Wallis H, Mann-Whitney U), Spearman's rho and
//! mean / standard-error summaries.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{LabError, Result};

/// Below this smaller-sample size Mann-Whitney p-values are exact.
pub const MWU_EXACT_BELOW: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: String,
    pub n: Vec<usize>,
}

/// Mid-ranks (1-based) of `values`, plus the tie group sizes.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

fn tie_sum(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}

pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<StatTestResult> {
    if groups.len() < 2 {
        return Err(LabError::Stats("Kruskal-Wallis needs at least two groups".into()));
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(LabError::Stats("Kruskal-Wallis groups must be nonempty".into()));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n_total = pooled.len() as f64;
    let (ranks, ties) = midranks(&pooled);
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h_raw = 12.0 / (n_total * (n_total + 1.0)) * sum - 3.0 * (n_total + 1.0);
    let correction = 1.0 - tie_sum(&ties) / (n_total.powi(3) - n_total);
    let n: Vec<usize> = groups.iter().map(Vec::len).collect();
    if correction <= 0.0 {
        // every value identical
        return Ok(StatTestResult {
            statistic: 0.0,
            p_value: 1.0,
            method: "kruskal_wallis".into(),
            n,
        });
    }
    let h = (h_raw / correction).max(0.0);
    let df = (groups.len() - 1) as f64;
    let chi = ChiSquared::new(df).map_err(|e| LabError::Stats(e.to_string()))?;
    Ok(StatTestResult {
        statistic: h,
        p_value: chi.sf(h).clamp(0.0, 1.0),
        method: "kruskal_wallis".into(),
        n,
    })
}

struct RankSums {
    u1: f64,
    n1: usize,
    n2: usize,
    ranks: Vec<f64>,
    ties: Vec<usize>,
}

fn rank_sums(a: &[f64], b: &[f64]) -> Result<RankSums> {
    if a.is_empty() || b.is_empty() {
        return Err(LabError::Empty("Mann-Whitney samples must be nonempty"));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let n1 = a.len();
    let r1: f64 = ranks[..n1].iter().sum();
    let u1 = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    Ok(RankSums {
        u1,
        n1,
        n2: b.len(),
        ranks,
        ties,
    })
}

/// Two-sided exact p-value: the rank-sum distribution of the first sample is
/// counted over every way of drawing `n1` of the pooled mid-ranks.
pub fn mann_whitney_exact_p(a: &[f64], b: &[f64]) -> Result<f64> {
    let rs = rank_sums(a, b)?;
    // doubled mid-ranks are integers
    let doubled: Vec<usize> = rs.ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let n1 = rs.n1;
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0.0f64; max_sum + 1]; n1 + 1];
    ways[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=n1).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (r..=max_sum).rev() {
                if prev[s - r] != 0.0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    let total: f64 = ways[n1].iter().sum();
    let observed = (rs.u1 + (n1 * (n1 + 1)) as f64 / 2.0) * 2.0;
    let observed = observed.round() as usize;
    let (mut le, mut ge) = (0.0, 0.0);
    for (s, w) in ways[n1].iter().enumerate() {
        if s <= observed {
            le += w;
        }
        if s >= observed {
            ge += w;
        }
    }
    Ok((2.0 * le.min(ge) / total).min(1.0))
}

/// Two-sided normal approximation with tie-corrected variance and a 0.5
/// continuity correction.
pub fn mann_whitney_normal_p(a: &[f64], b: &[f64]) -> Result<f64> {
    let rs = rank_sums(a, b)?;
    let (n1, n2) = (rs.n1 as f64, rs.n2 as f64);
    let n = n1 + n2;
    let mu = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_sum(&rs.ties) / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((rs.u1 - mu).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok((2.0 * normal.sf(z)).clamp(0.0, 1.0))
}

/// U = min(U1, U2); exact p when the smaller sample has fewer than eight
/// values, normal approximation otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<StatTestResult> {
    let rs = rank_sums(a, b)?;
    let u2 = (rs.n1 * rs.n2) as f64 - rs.u1;
    let exact = rs.n1.min(rs.n2) < MWU_EXACT_BELOW;
    let p = if exact {
        mann_whitney_exact_p(a, b)?
    } else {
        mann_whitney_normal_p(a, b)?
    };
    Ok(StatTestResult {
        statistic: rs.u1.min(u2),
        p_value: p,
        method: if exact {
            "mann_whitney_exact".into()
        } else {
            "mann_whitney_normal".into()
        },
        n: vec![rs.n1, rs.n2],
    })
}

/// Mean and standard error (sample sd with n - 1, over sqrt n). A single
/// observation has standard error 0.
pub fn describe(sample: &[f64]) -> Result<(f64, f64)> {
    if sample.is_empty() {
        return Err(LabError::Empty("describe needs at least one value"));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    if sample.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Spearman rank correlation with mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(LabError::Stats(
            "spearman needs two equal-length samples of size >= 2".into(),
        ));
    }
    let (rx, _) = midranks(x);
    let (ry, _) = midranks(y);
    let (mx, my) = (crate::metrics::mean(&rx), crate::metrics::mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (vx * vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn midranks_average_ties() {
        let (r, t) = midranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(t, vec![2]);
    }

    #[test]
    fn kruskal_wallis_separated_groups() {
        let r = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]]).unwrap();
        approx(r.statistic, 7.2, 1e-9);
        // chi-square(2) survival at 7.2 is exp(-3.6)
        approx(r.p_value, (-3.6f64).exp(), 1e-9);
    }

    #[test]
    fn kruskal_wallis_identical_groups() {
        let g = vec![1.0, 2.0, 3.0];
        let r = kruskal_wallis(&[g.clone(), g.clone(), g]).unwrap();
        approx(r.statistic, 0.0, 1e-12);
        approx(r.p_value, 1.0, 1e-12);
        let flat = kruskal_wallis(&[vec![2.0, 2.0], vec![2.0]]).unwrap();
        assert_eq!((flat.statistic, flat.p_value), (0.0, 1.0));
    }

    #[test]
    fn kruskal_wallis_errors() {
        assert!(kruskal_wallis(&[vec![1.0]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0], vec![]]).is_err());
    }

    #[test]
    fn mann_whitney_small_exact() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        approx(r.p_value, 2.0 / 6.0, 1e-12);
        assert_eq!(r.method, "mann_whitney_exact");
    }

    #[test]
    fn mann_whitney_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        let r = mann_whitney_u(&a, &a).unwrap();
        approx(r.statistic, 81.0 / 2.0, 1e-12);
        assert!(r.p_value > 0.95);
        let small = mann_whitney_u(&a[..3], &a[..3]).unwrap();
        approx(small.statistic, 4.5, 1e-12);
        approx(small.p_value, 1.0, 1e-12);
    }

    #[test]
    fn mann_whitney_shifted() {
        let b: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let a: Vec<f64> = b.iter().map(|x| x + 1000.0).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value < 0.001);
    }

    #[test]
    fn mann_whitney_errors_on_empty() {
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn describe_examples() {
        assert_eq!(describe(&[1.0, 1.0, 1.0]).unwrap(), (1.0, 0.0));
        let (m, se) = describe(&[0.0, 1.0]).unwrap();
        approx(m, 0.5, 1e-12);
        approx(se, 0.5, 1e-12);
        let (m2, se2) = describe(&[10.0, 11.0]).unwrap();
        approx(m2, 10.5, 1e-12);
        approx(se2, se, 1e-12);
        assert!(describe(&[]).is_err());
    }

    #[test]
    fn spearman_monotone() {
        approx(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 35.0]).unwrap(), 1.0, 1e-12);
        approx(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0, 1e-12);
    }
}
