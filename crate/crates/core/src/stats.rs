//! Chi-square goodness-of-fit tests on residue-class histograms.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

fn report(statistic: f64, dof: u64) -> ChiSquareReport {
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).expect("positive dof").sf(statistic)
    };
    ChiSquareReport { statistic, dof, p_value }
}

/// Test of `counts` against the uniform law on its classes.
pub fn chi_square_uniform(counts: &[u64]) -> ChiSquareReport {
    let total: u64 = counts.iter().sum();
    if counts.len() < 2 || total == 0 {
        return report(0.0, 0);
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    report(statistic, counts.len() as u64 - 1)
}

/// Homogeneity test of two histograms over the same classes; classes empty
/// in both samples are skipped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquareReport {
    assert_eq!(a.len(), b.len(), "histograms over different classes");
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return report(0.0, 0);
    }
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut statistic = 0.0;
    let mut used = 0u64;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        used += 1;
        statistic += (ka * x as f64 - kb * y as f64).powi(2) / (x + y) as f64;
    }
    report(statistic, used.saturating_sub(1))
}
