//! Goodness-of-fit checks at level `α = 0.01`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::special::{chi2_quantile, KS_CRITICAL_99};

/// Outcome of one check. `pass` holds iff `statistic` is within `threshold`
/// (and any side condition recorded in `extra`).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub sample_size: usize,
    pub pass: bool,
    pub scenario: String,
    pub seed: u64,
    pub extra: BTreeMap<String, f64>,
}

impl TestReport {
    fn new(name: &str, statistic: f64, threshold: f64, sample_size: usize, pass: bool) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            threshold,
            sample_size,
            pass,
            scenario: String::new(),
            seed: 0,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_context(mut self, scenario: &str, seed: u64) -> Self {
        self.scenario = scenario.into();
        self.seed = seed;
        self
    }

    fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.into(), value);
        self
    }
}

/// Minimum sample size for [`ks_exponential`].
pub const KS_MIN_SAMPLES: usize = 100;

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// One-sample Kolmogorov–Smirnov test against `Exp(rate)`.
pub fn ks_exponential(samples: &[f64], rate: f64) -> Result<TestReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::SampleSize {
            needed: KS_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::OutOfRange(alloc::format!("rate must be positive, got {rate}")));
    }
    let s = sorted(samples);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = if x <= 0.0 { 0.0 } else { -libm::expm1(-rate * x) };
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let threshold = KS_CRITICAL_99 / libm::sqrt(n);
    Ok(TestReport::new("ks_exponential", d, threshold, s.len(), d < threshold).with_extra("rate", rate))
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let a = sorted(a);
    let b = sorted(b);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let threshold = KS_CRITICAL_99 * libm::sqrt((n + m) / (n * m));
    let pass = d < threshold || d == 0.0;
    Ok(TestReport::new("ks_two_sample", d, threshold, a.len() + b.len(), pass))
}

fn rank_bins(v: &[f64], bins: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&x, &y| v[x].total_cmp(&v[y]));
    let mut out = alloc::vec![0; v.len()];
    for (rank, i) in order.into_iter().enumerate() {
        out[i] = rank * bins / v.len();
    }
    out
}

fn pearson(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / libm::sqrt(sxx * syy)
}

/// Chi-square test of independence on a `bins × bins` contingency table.
///
/// Each coordinate is binned by rank, so both marginals are uniform and the
/// expected count of every cell is `N / bins²`. The Pearson correlation must
/// also stay below `3/√N`.
pub fn independence_check(pairs: &[(f64, f64)], bins: usize) -> Result<TestReport> {
    if bins < 2 {
        return Err(Error::OutOfRange(alloc::format!("need at least 2 bins, got {bins}")));
    }
    let needed = 10 * bins * bins;
    if pairs.len() < needed {
        return Err(Error::SampleSize {
            needed,
            got: pairs.len(),
        });
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let bx = rank_bins(&xs, bins);
    let by = rank_bins(&ys, bins);
    let mut counts = alloc::vec![0usize; bins * bins];
    for (i, j) in bx.iter().zip(&by) {
        counts[i * bins + j] += 1;
    }
    let n = pairs.len() as f64;
    let mut row = alloc::vec![0.0; bins];
    let mut col = alloc::vec![0.0; bins];
    for i in 0..bins {
        for j in 0..bins {
            row[i] += counts[i * bins + j] as f64;
            col[j] += counts[i * bins + j] as f64;
        }
    }
    let mut chi2 = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let e = row[i] * col[j] / n;
            let o = counts[i * bins + j] as f64;
            chi2 += (o - e) * (o - e) / e;
        }
    }
    let df = ((bins - 1) * (bins - 1)) as f64;
    let threshold = chi2_quantile(df, 0.99)?;
    let r = pearson(pairs);
    let r_threshold = 3.0 / libm::sqrt(n);
    let pass = chi2 < threshold && r.abs() < r_threshold;
    Ok(TestReport::new("independence_chi2", chi2, threshold, pairs.len(), pass)
        .with_extra("df", df)
        .with_extra("pearson_r", r)
        .with_extra("pearson_threshold", r_threshold))
}

/// `½ Σ |p_i − q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Overlap fractions of `[l, u]` with `bins` equal bins on `[lo, hi]`.
fn bin_overlaps(l: f64, u: f64, lo: f64, hi: f64, bins: usize) -> Vec<(usize, f64)> {
    let w = (hi - lo) / bins as f64;
    let first = (libm::floor((l - lo) / w).max(0.0) as usize).min(bins - 1);
    let last = (libm::ceil((u - lo) / w).max(1.0) as usize).min(bins);
    let mut out = Vec::new();
    for b in first..last {
        let a = lo + b as f64 * w;
        let ov = (u.min(a + w) - l.max(a)).max(0.0);
        if ov > 0.0 {
            out.push((b, ov / (u - l)));
        }
    }
    out
}

/// Expected probability of each histogram bin under `density`, with `bins`
/// equal bins on every sample coordinate (first coordinate slowest).
pub fn binned_density(density: &DensityGrid, bins: usize) -> Vec<f64> {
    let dom = density.domain();
    let dim = dom.dim();
    let coords = density.coords_per_sample();
    let mut probs = alloc::vec![0.0; bins.pow(coords as u32)];
    let cv = density.cell_volume();
    for (idx, &v) in density.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let parts: Vec<Vec<(usize, f64)>> = density
            .cell_extent(idx)
            .iter()
            .enumerate()
            .map(|(c, &(l, u))| bin_overlaps(l, u, dom.lower()[c % dim], dom.upper()[c % dim], bins))
            .collect();
        let mass = v * cv;
        let mut pos = alloc::vec![0usize; coords];
        'outer: loop {
            let mut bin = 0;
            let mut frac = 1.0;
            for (c, p) in pos.iter().enumerate() {
                bin = bin * bins + parts[c][*p].0;
                frac *= parts[c][*p].1;
            }
            probs[bin] += mass * frac;
            for c in (0..coords).rev() {
                pos[c] += 1;
                if pos[c] < parts[c].len() {
                    continue 'outer;
                }
                pos[c] = 0;
            }
            break;
        }
    }
    probs
}

/// Empirical bin frequencies of flattened samples (`coords` values each).
pub fn binned_samples(samples: &[f64], density: &DensityGrid, bins: usize) -> Vec<f64> {
    let dom = density.domain();
    let dim = dom.dim();
    let coords = density.coords_per_sample();
    let n = samples.len() / coords;
    let mut freq = alloc::vec![0.0; bins.pow(coords as u32)];
    for s in samples.chunks_exact(coords) {
        let mut bin = 0;
        for (c, &x) in s.iter().enumerate() {
            let (lo, hi) = (dom.lower()[c % dim], dom.upper()[c % dim]);
            let b = (libm::floor((x - lo) / (hi - lo) * bins as f64).max(0.0) as usize).min(bins - 1);
            bin = bin * bins + b;
        }
        freq[bin] += 1.0 / n as f64;
    }
    freq
}

/// Binned total-variation comparison of argmin samples with a density grid.
///
/// `samples` is flattened, `density.coords_per_sample()` coordinates per
/// sample. Passes iff `TV ≤ max(0.05, 3 √(B/N))` where `B` is the number of
/// bins. The largest per-bin binomial z-score is reported as `max_abs_z`.
pub fn histogram_vs_density(samples: &[f64], density: &DensityGrid, bins: usize) -> Result<TestReport> {
    density.check_normalized()?;
    let coords = density.coords_per_sample();
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if samples.len() % coords != 0 {
        return Err(Error::OutOfRange(alloc::format!(
            "{} coordinates do not split into samples of {coords}",
            samples.len()
        )));
    }
    if bins == 0 {
        return Err(Error::OutOfRange("bins must be positive".into()));
    }
    let n = samples.len() / coords;
    let p = binned_density(density, bins);
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();
    let q = binned_samples(samples, density, bins);
    let tv = tv_distance(&p, &q);
    let threshold = 0.05f64.max(3.0 * libm::sqrt(p.len() as f64 / n as f64));
    let nf = n as f64;
    let max_z = p
        .iter()
        .zip(&q)
        .filter(|(pi, _)| **pi > 0.0 && **pi < 1.0)
        .map(|(pi, qi)| ((qi - pi) * nf / libm::sqrt(nf * pi * (1.0 - pi))).abs())
        .fold(0.0, f64::max);
    Ok(TestReport::new("histogram_tv", tv, threshold, n, tv <= threshold)
        .with_extra("bins", p.len() as f64)
        .with_extra("max_abs_z", max_z))
}

/// Binned total-variation comparison of scalar samples with a CDF.
///
/// Bins are the intervals between consecutive `edges` plus one overflow bin
/// on each side, so the expected probabilities always sum to one. The pass
/// rule is the one of [`histogram_vs_density`].
pub fn histogram_vs_cdf<F: Fn(f64) -> f64>(samples: &[f64], edges: &[f64], cdf: F) -> Result<TestReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::OutOfRange("edges must be strictly increasing, at least two".into()));
    }
    let mut p = Vec::with_capacity(edges.len() + 1);
    p.push(cdf(edges[0]));
    for w in edges.windows(2) {
        p.push(cdf(w[1]) - cdf(w[0]));
    }
    p.push(1.0 - cdf(edges[edges.len() - 1]));
    let n = samples.len() as f64;
    let mut q = alloc::vec![0.0; p.len()];
    for &x in samples {
        // bin j holds (edges[j-1], edges[j]]
        q[edges.partition_point(|&e| e < x)] += 1.0 / n;
    }
    let tv = tv_distance(&p, &q);
    let threshold = 0.05f64.max(3.0 * libm::sqrt(p.len() as f64 / n));
    let max_z = p
        .iter()
        .zip(&q)
        .filter(|(pi, _)| **pi > 0.0 && **pi < 1.0)
        .map(|(pi, qi)| ((qi - pi) * n / libm::sqrt(n * pi * (1.0 - pi))).abs())
        .fold(0.0, f64::max);
    Ok(TestReport::new("histogram_tv_cdf", tv, threshold, samples.len(), tv <= threshold)
        .with_extra("bins", p.len() as f64)
        .with_extra("max_abs_z", max_z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityKind;
    use crate::domain::BoxDomain;
    use crate::sampler::RngSeed;
    use rand::Rng;

    fn exp_draws(n: usize, rate: f64, seed: u64) -> Vec<f64> {
        let mut rng = RngSeed::new(seed, 0).rng();
        (0..n).map(|_| -libm::log1p(-rng.random::<f64>()) / rate).collect()
    }

    fn uniforms(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngSeed::new(seed, 1).rng();
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn ks_exponential_examples() {
        assert!(ks_exponential(&exp_draws(100_000, 1.0, 1), 1.0).unwrap().pass);
        assert!(!ks_exponential(&exp_draws(100_000, 2.0, 2), 1.0).unwrap().pass);
        assert!(!ks_exponential(&[0.7; 500], 1.0).unwrap().pass);
        assert_eq!(ks_exponential(&[], 1.0), Err(Error::EmptyInput));
        assert!(matches!(ks_exponential(&[1.0; 50], 1.0), Err(Error::SampleSize { .. })));
    }

    #[test]
    fn ks_two_sample_examples() {
        let a = exp_draws(10_000, 1.0, 3);
        let b = exp_draws(10_000, 1.0, 4);
        assert!(ks_two_sample(&a, &b).unwrap().pass);
        let shifted: Vec<f64> = b.iter().map(|x| x + 0.5).collect();
        assert!(!ks_two_sample(&a, &shifted).unwrap().pass);
        let same = ks_two_sample(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert!(same.pass);
        assert_eq!(ks_two_sample(&a, &[]), Err(Error::EmptyInput));
    }

    #[test]
    fn independence_examples() {
        let u = uniforms(20_000, 5);
        let v = uniforms(20_000, 6);
        let indep: Vec<(f64, f64)> = u.iter().copied().zip(v).collect();
        assert!(independence_check(&indep, 10).unwrap().pass);
        let diag: Vec<(f64, f64)> = u.iter().map(|&x| (x, x)).collect();
        assert!(!independence_check(&diag, 10).unwrap().pass);
        assert!(matches!(independence_check(&diag[..999], 10), Err(Error::SampleSize { .. })));
    }

    fn uniform_grid(cells: usize) -> DensityGrid {
        DensityGrid::new(BoxDomain::unit_interval(cells), 1, DensityKind::MarginalArgmin, alloc::vec![1.0; cells]).unwrap()
    }

    #[test]
    fn histogram_uniform() {
        let r = histogram_vs_density(&uniforms(100_000, 7), &uniform_grid(40), 20).unwrap();
        assert!(r.pass);
        assert!(r.statistic < 0.01);
    }

    #[test]
    fn histogram_rejects_unnormalized() {
        let g = DensityGrid::new(BoxDomain::unit_interval(10), 1, DensityKind::MarginalArgmin, alloc::vec![2.0; 10]).unwrap();
        assert!(matches!(histogram_vs_density(&[0.5], &g, 5), Err(Error::Normalization { .. })));
    }

    #[test]
    fn binned_density_coarsens_exactly() {
        // 30 cells onto 20 bins: each bin gets 1.5 cells of mass
        let vals: Vec<f64> = (0..30).map(|c| (c + 1) as f64).collect();
        let total: f64 = vals.iter().sum::<f64>() / 30.0;
        let vals: Vec<f64> = vals.iter().map(|v| v / total).collect();
        let g = DensityGrid::new(BoxDomain::unit_interval(30), 1, DensityKind::MarginalArgmin, vals.clone()).unwrap();
        let p = binned_density(&g, 20);
        // bin 0 covers [0, 0.05): all of cell 0 and half of cell 1
        assert!((p[0] - (vals[0] + 0.5 * vals[1]) / 30.0).abs() < 1e-14);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_histogram_exponential() {
        let edges: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let cdf = |t: f64| if t <= 0.0 { 0.0 } else { -libm::expm1(-t) };
        assert!(histogram_vs_cdf(&exp_draws(100_000, 1.0, 8), &edges, cdf).unwrap().statistic < 0.01);
        assert!(!histogram_vs_cdf(&exp_draws(100_000, 3.0, 9), &edges, cdf).unwrap().pass);
    }

    #[test]
    fn calibration_under_null() {
        let mut rejections = [0usize; 3];
        for s in 0..200u64 {
            let e = exp_draws(1000, 1.0, 1000 + s);
            rejections[0] += !ks_exponential(&e, 1.0).unwrap().pass as usize;
            let f = exp_draws(1000, 1.0, 5000 + s);
            rejections[1] += !ks_two_sample(&e, &f).unwrap().pass as usize;
            let pairs: Vec<(f64, f64)> = e.iter().copied().zip(f).collect();
            rejections[2] += !independence_check(&pairs, 5).unwrap().pass as usize;
        }
        for r in rejections {
            assert!(r <= 10, "{r} rejections in 200");
        }
    }
}
