//! Goodness-of-fit helpers for the simulation tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::quad::pairwise_sum;

/// Mean and standard error `sd / √n` (sample standard deviation with `n − 1`).
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Pearson chi-square test of integer samples against a pmf.
///
/// Cells are `0, 1, …` opened while both the cell and the remaining tail expect at
/// least `min_expected` samples; the last cell collects the tail mass.
/// Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_gof(samples: &[u64], pmf: impl Fn(u64) -> f64, min_expected: f64) -> (f64, usize, f64) {
    let n = samples.len() as f64;
    let mut expected = Vec::new();
    let mut acc = 0.0;
    let mut k = 0u64;
    // open cells while the remaining tail still carries enough expected mass
    loop {
        let p = pmf(k);
        let tail = 1.0 - acc - p;
        if n * p < min_expected || n * tail < min_expected {
            break;
        }
        expected.push(n * p);
        acc += p;
        k += 1;
    }
    let last = expected.len() as u64;
    expected.push(n * (1.0 - acc));
    let mut observed = vec![0.0; expected.len()];
    for &s in samples {
        observed[s.min(last) as usize] += 1.0;
    }
    let stat: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = expected.len().saturating_sub(1).max(1);
    let p = 1.0 - ChiSquared::new(dof as f64).expect("positive degrees of freedom").cdf(stat);
    (stat, dof, p)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    (d, kolmogorov_survival(lambda))
}

/// `P(K > λ)` for the Kolmogorov distribution.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
