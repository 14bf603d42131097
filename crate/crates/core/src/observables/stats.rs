//! Binning and jackknife error estimates for correlated Markov-chain series.

/// Number of bins used for every error bar.
pub const N_BINS: usize = 20;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance, `⟨x²⟩ - ⟨x⟩²`, computed in two passes.
pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Contiguous bin ranges; the remainder `n % n_bins` is spread over the
/// leading bins so every sample is used.
pub fn bin_ranges(n: usize, n_bins: usize) -> Vec<std::ops::Range<usize>> {
    let nb = n_bins.min(n).max(1);
    let base = n / nb;
    let extra = n % nb;
    let mut out = Vec::with_capacity(nb);
    let mut start = 0;
    for b in 0..nb {
        let len = base + usize::from(b < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Standard error of the mean from the scatter of `N_BINS` bin averages.
pub fn binned_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let means: Vec<f64> = bin_ranges(xs.len(), N_BINS)
        .into_iter()
        .map(|r| mean(&xs[r]))
        .collect();
    let nb = means.len() as f64;
    let m = mean(&means);
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (nb - 1.0);
    (var / nb).sqrt()
}

/// Jackknife error of `stat` with one bin left out at a time.
pub fn jackknife_error(xs: &[f64], stat: impl Fn(&[f64]) -> f64) -> f64 {
    let ranges = bin_ranges(xs.len(), N_BINS);
    let nb = ranges.len();
    if nb < 2 {
        return 0.0;
    }
    let mut buf = Vec::with_capacity(xs.len());
    let values: Vec<f64> = ranges
        .iter()
        .map(|r| {
            buf.clear();
            buf.extend_from_slice(&xs[..r.start]);
            buf.extend_from_slice(&xs[r.end..]);
            stat(&buf)
        })
        .collect();
    let m = mean(&values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    ((nb as f64 - 1.0) / nb as f64 * ss).sqrt()
}
