//! Samplers for the discrete processes `f_n` and for `W_λ + g`.
//!
//! Every sampler is a pure function of its inputs and an [`RngSeed`]. Three
//! families are provided:
//!
//! * [`DiscreteProcess`]: `f_n(x_i) = (n/λ(x_i)) ξ_i + g(x_i)` with `x_i`
//!   i.i.d. from a point density `ρ` and `ξ_i` from a [`NoiseSpec`].
//! * [`ConstructionA`]: `n` points i.i.d. from `μ_λ` carrying
//!   `(n/λ̄) ξ_i + g(x_i)`, `ξ_i ~ Exp(1)`.
//! * [`RecordSampler`]: i.i.d. `μ_λ` points with Erlang partial sums
//!   `S_i = ξ_1 + … + ξ_i`, `ξ_j ~ Exp(λ̄)`; returns the exact first `k`
//!   argmins of `W_λ + g`.
//!
//! The first two can be drawn in full (all `n` points, in index order) or
//! lazily: the noise order statistics are generated in increasing order
//! with the Rényi representation `E_(j) = Σ_{i≤j} Z_i/(n-i+1)` and
//! generation stops once no remaining point can enter the requested
//! minima. The lazy draws have the same law as the full ones restricted to
//! the quantities returned.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{AxisBox, BoxDomain, Point};
use crate::error::{Error, Result};
use crate::field::{check_rates, MeasureTable, ScalarField};
use crate::kargmin::{extract_k_argmins, KArgminRecord};

/// Default cap on the number of points the record sampler may generate.
pub const DEFAULT_RECORD_CAP: usize = 10_000_000;

/// Constant `C` in the check `|F(t)/t − 1| ≤ C·t` applied to noise laws.
pub const NOISE_SLOPE_CONSTANT: f64 = 10.0;

/// Seed plus substream. Replicate `r` of a run uses `stream = r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub const fn new(seed: u64, stream: u64) -> Self {
        RngSeed { seed, stream }
    }

    pub const fn replicate(&self, r: u64) -> Self {
        RngSeed {
            seed: self.seed,
            stream: r,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[inline]
fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -libm::log1p(-u)
}

/// Piecewise-linear CDF through `(t_i, F_i)`, starting at `(0, 0)` and
/// ending at `F = 1`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CdfTable {
    t: Vec<f64>,
    f: Vec<f64>,
}

impl CdfTable {
    pub fn new(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if t.len() != f.len() || t.len() < 2 {
            return Err(Error::NoiseLaw("CDF table needs at least two (t, F) knots".into()));
        }
        if t[0] != 0.0 || f[0] != 0.0 {
            return Err(Error::NoiseLaw("CDF table must start at (0, 0)".into()));
        }
        if t.windows(2).any(|w| !(w[0] < w[1])) || f.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::NoiseLaw("CDF table knots must increase".into()));
        }
        if *f.last().unwrap() != 1.0 {
            return Err(Error::NoiseLaw("CDF table must end at F = 1".into()));
        }
        Ok(CdfTable { t, f })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let j = self.t.partition_point(|&t| t <= x);
        if j >= self.t.len() {
            return 1.0;
        }
        let (t0, t1, f0, f1) = (self.t[j - 1], self.t[j], self.f[j - 1], self.f[j]);
        f0 + (f1 - f0) * (x - t0) / (t1 - t0)
    }

    pub fn inverse(&self, u: f64) -> f64 {
        let j = self.f.partition_point(|&f| f <= u).clamp(1, self.f.len() - 1);
        let (t0, t1, f0, f1) = (self.t[j - 1], self.t[j], self.f[j - 1], self.f[j]);
        if f1 == f0 {
            t0
        } else {
            t0 + (u - f0) / (f1 - f0) * (t1 - t0)
        }
    }
}

/// Law of the noise variables `ξ_i`. Every family must satisfy
/// `F(t) = t + O(t²)` near zero.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NoiseSpec {
    /// `F(t) = 1 − e^{−t}`
    Exponential,
    /// `F(t) = t` on `[0, 1]`
    Uniform,
    /// `F(t) = t / (1 + t)`, heavy-tailed
    Ratio,
    Table(CdfTable),
}

impl NoiseSpec {
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            NoiseSpec::Exponential => -libm::expm1(-t),
            NoiseSpec::Uniform => t.min(1.0),
            NoiseSpec::Ratio => t / (1.0 + t),
            NoiseSpec::Table(tab) => tab.cdf(t),
        }
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match self {
            NoiseSpec::Exponential => -libm::log1p(-u),
            NoiseSpec::Uniform => u,
            NoiseSpec::Ratio => u / (1.0 - u),
            NoiseSpec::Table(tab) => tab.inverse(u),
        }
    }

    /// `F⁻¹(1 − e^{−e})`: maps an Exp(1) variate monotonically onto this law
    /// without losing precision near zero.
    pub fn from_exp_level(&self, e: f64) -> f64 {
        match self {
            NoiseSpec::Exponential => e,
            NoiseSpec::Uniform => -libm::expm1(-e),
            NoiseSpec::Ratio => libm::expm1(e),
            NoiseSpec::Table(tab) => tab.inverse(-libm::expm1(-e)),
        }
    }

    /// Checks `F(0) = 0` and `|F(t)/t − 1| ≤ C·t` at `t ∈ {1e-3, 1e-4, 1e-5}`.
    pub fn validate(&self) -> Result<()> {
        if self.cdf(0.0) != 0.0 {
            return Err(Error::NoiseLaw("F(0) must be 0".into()));
        }
        for t in [1e-3, 1e-4, 1e-5] {
            let dev = (self.cdf(t) / t - 1.0).abs();
            if dev > NOISE_SLOPE_CONSTANT * t {
                return Err(Error::NoiseLaw(format!(
                    "|F(t)/t - 1| = {dev:.3e} at t = {t:e} exceeds {NOISE_SLOPE_CONSTANT}·t"
                )));
            }
        }
        Ok(())
    }
}

/// A discrete l.s.c. function: finite values on a point set, `+∞` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFunction {
    dim: usize,
    points: Vec<Point>,
    values: Vec<f64>,
}

impl SampleFunction {
    pub fn new(dim: usize, points: Vec<Point>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::OutOfRange(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("sample function values must be finite".into()));
        }
        Ok(SampleFunction { dim, points, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `min_{C} f`, `+∞` if no point lies in `region`.
    pub fn min_over(&self, region: &AxisBox) -> f64 {
        self.points
            .iter()
            .zip(&self.values)
            .filter(|(p, _)| region.contains(**p, self.dim))
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min)
    }

    /// Multiply every value by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= factor);
        self
    }
}

/// Inverse-CDF sampling of cells by weight, then a uniform position inside
/// the chosen cell.
#[derive(Debug, Clone)]
struct CellSampler {
    domain: BoxDomain,
    cumulative: Vec<f64>,
}

impl CellSampler {
    fn new(domain: &BoxDomain, weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        CellSampler {
            domain: domain.clone(),
            cumulative,
        }
    }

    #[inline]
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, Point) {
        let total = *self.cumulative.last().unwrap();
        let target = rng.random::<f64>() * total;
        let cell = self
            .cumulative
            .partition_point(|&c| c <= target)
            .min(self.cumulative.len() - 1);
        let mut frac = [0.0; 2];
        for f in frac.iter_mut().take(self.domain.dim()) {
            *f = rng.random();
        }
        (cell, self.domain.point_in_cell(cell, frac))
    }
}

/// Increasing order statistics of `n` i.i.d. Exp(1) variables.
struct OrderedExp {
    n: usize,
    drawn: usize,
    level: f64,
}

impl OrderedExp {
    fn new(n: usize) -> Self {
        OrderedExp {
            n,
            drawn: 0,
            level: 0.0,
        }
    }

    #[inline]
    fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<f64> {
        if self.drawn == self.n {
            return None;
        }
        self.level += exp1(rng) / (self.n - self.drawn) as f64;
        self.drawn += 1;
        Some(self.level)
    }
}

/// Keeps every draw that can still be among the `k` smallest distinct
/// values, and stops once the lower bound on all later draws exceeds the
/// current `k`-th smallest.
///
/// `draw` yields `(location, value, bound)` where `bound` is strictly below
/// every value drawn afterwards.
fn first_k_lazy<R, D>(dim: usize, k: usize, cap: Option<usize>, rng: &mut R, mut draw: D) -> Result<KArgminRecord>
where
    R: Rng + ?Sized,
    D: FnMut(&mut R) -> Option<(Point, f64, f64)>,
{
    let mut best: Vec<f64> = Vec::with_capacity(k + 1);
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut count = 0usize;
    while let Some((p, v, bound)) = draw(rng) {
        count += 1;
        if best.len() < k || v <= best[k - 1] {
            let pos = best.partition_point(|&b| b < v);
            if best.get(pos) != Some(&v) {
                best.insert(pos, v);
                best.truncate(k);
            }
            points.push(p);
            values.push(v);
        }
        if best.len() == k && bound > best[k - 1] {
            break;
        }
        if let Some(cap) = cap {
            if count >= cap {
                return Err(Error::IterationCap {
                    cap,
                    found: best.len(),
                    partial_sum: bound,
                });
            }
        }
    }
    extract_k_argmins(&SampleFunction::new(dim, points, values)?, k)
}

/// Exact sampler for the first `k` argmins of `W_λ + g`.
#[derive(Debug, Clone)]
pub struct RecordSampler {
    locations: CellSampler,
    offsets: Vec<f64>,
    lambda_bar: f64,
    min_offset: f64,
    cap: usize,
}

impl RecordSampler {
    pub fn new(table: &MeasureTable) -> Self {
        RecordSampler {
            locations: CellSampler::new(table.domain(), table.cell_weights()),
            offsets: table.offsets().to_vec(),
            lambda_bar: table.lambda_bar(),
            min_offset: table.min_offset(),
            cap: DEFAULT_RECORD_CAP,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap.max(1);
        self
    }

    /// `W_{λ/δ} + g` has the law of `δ W_λ + g`; this rescales the
    /// value process accordingly.
    pub fn with_noise_scale(mut self, delta: f64) -> Self {
        self.lambda_bar /= delta;
        self
    }

    pub fn sample(&self, k: usize, seed: RngSeed) -> Result<KArgminRecord> {
        self.sample_with(k, &mut seed.rng())
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<KArgminRecord> {
        if k == 0 {
            return Err(Error::OutOfRange("k must be at least 1".into()));
        }
        let mut partial = 0.0;
        let rate = self.lambda_bar;
        first_k_lazy(self.locations.domain.dim(), k, Some(self.cap), rng, |rng| {
            let (cell, p) = self.locations.draw(rng);
            partial += exp1(rng) / rate;
            Some((p, partial + self.offsets[cell], partial + self.min_offset))
        })
    }
}

/// `W_n = (n/λ̄) ξ_i + g(x_i)` on `n` i.i.d. `μ_λ` points.
#[derive(Debug, Clone)]
pub struct ConstructionA {
    locations: CellSampler,
    offsets: Vec<f64>,
    scale: f64,
    min_offset: f64,
    n: usize,
}

impl ConstructionA {
    pub fn new(table: &MeasureTable, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange("n must be at least 1".into()));
        }
        Ok(ConstructionA {
            locations: CellSampler::new(table.domain(), table.cell_weights()),
            offsets: table.offsets().to_vec(),
            scale: n as f64 / table.lambda_bar(),
            min_offset: table.min_offset(),
            n,
        })
    }

    /// All `n` points in index order.
    pub fn sample(&self, seed: RngSeed) -> SampleFunction {
        let mut rng = seed.rng();
        let mut points = Vec::with_capacity(self.n);
        let mut values = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let (cell, p) = self.locations.draw(&mut rng);
            points.push(p);
            values.push(self.scale * exp1(&mut rng) + self.offsets[cell]);
        }
        SampleFunction {
            dim: self.locations.domain.dim(),
            points,
            values,
        }
    }

    /// First `k` argmins of one realization, drawn lazily.
    pub fn first_k(&self, k: usize, seed: RngSeed) -> Result<KArgminRecord> {
        if k == 0 {
            return Err(Error::OutOfRange("k must be at least 1".into()));
        }
        let mut order = OrderedExp::new(self.n);
        first_k_lazy(self.locations.domain.dim(), k, None, &mut seed.rng(), |rng| {
            let e = order.next(rng)?;
            let (cell, p) = self.locations.draw(rng);
            Some((p, self.scale * e + self.offsets[cell], self.scale * e + self.min_offset))
        })
    }

    /// `min_{C_j} W_n + g` for each box of one realization, drawn lazily.
    /// A box that receives no point reports `+∞`.
    pub fn box_mins(&self, boxes: &[AxisBox], seed: RngSeed) -> Vec<f64> {
        let dim = self.locations.domain.dim();
        let mut rng = seed.rng();
        let mut mins = alloc::vec![f64::INFINITY; boxes.len()];
        let mut order = OrderedExp::new(self.n);
        while let Some(e) = order.next(&mut rng) {
            let (cell, p) = self.locations.draw(&mut rng);
            let v = self.scale * e + self.offsets[cell];
            for (b, m) in boxes.iter().zip(mins.iter_mut()) {
                if v < *m && b.contains(p, dim) {
                    *m = v;
                }
            }
            let bound = self.scale * e + self.min_offset;
            if mins.iter().all(|&m| bound > m) {
                break;
            }
        }
        mins
    }
}

/// The discrete process `f_n` with point density `ρ` and noise law `F`.
#[derive(Debug, Clone)]
pub struct DiscreteProcess {
    locations: CellSampler,
    rates: Vec<f64>,
    offsets: Vec<f64>,
    density: Vec<f64>,
    min_offset: f64,
    max_rate: f64,
    noise: NoiseSpec,
    n: usize,
}

impl DiscreteProcess {
    pub fn new(
        domain: &BoxDomain,
        lambda: &ScalarField,
        rho: &ScalarField,
        g: &ScalarField,
        n: usize,
        noise: NoiseSpec,
    ) -> Result<Self> {
        Self::from_cells(
            domain,
            lambda.discretize_rate(domain)?,
            rho.discretize_rate(domain)?,
            g.discretize(domain)?,
            n,
            noise,
        )
    }

    pub fn from_cells(
        domain: &BoxDomain,
        rates: Vec<f64>,
        rho: Vec<f64>,
        offsets: Vec<f64>,
        n: usize,
        noise: NoiseSpec,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange("n must be at least 1".into()));
        }
        let cells = domain.cell_count();
        for len in [rates.len(), rho.len(), offsets.len()] {
            if len != cells {
                return Err(Error::GridSize { expected: cells, got: len });
            }
        }
        check_rates(&rates)?;
        check_rates(&rho)?;
        noise.validate()?;
        let vol = domain.cell_volume();
        let mass: f64 = rho.iter().map(|r| r * vol).sum();
        let density: Vec<f64> = rho.iter().map(|r| r / mass).collect();
        let weights: Vec<f64> = density.iter().map(|r| r * vol).collect();
        Ok(DiscreteProcess {
            locations: CellSampler::new(domain, &weights),
            min_offset: offsets.iter().copied().fold(f64::INFINITY, f64::min),
            max_rate: rates.iter().copied().fold(0.0, f64::max),
            rates,
            offsets,
            density,
            noise,
            n,
        })
    }

    /// Measure table of the limit `W_{λρ} + g`, with `ρ` normalized to a
    /// probability density.
    pub fn limit_table(&self) -> Result<MeasureTable> {
        let rates = self.rates.iter().zip(&self.density).map(|(l, r)| l * r).collect();
        MeasureTable::from_cells(self.locations.domain.clone(), rates, self.offsets.clone())
    }

    pub fn sample(&self, seed: RngSeed) -> SampleFunction {
        let mut rng = seed.rng();
        let n = self.n as f64;
        let mut points = Vec::with_capacity(self.n);
        let mut values = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let (cell, p) = self.locations.draw(&mut rng);
            let xi = self.noise.inverse_cdf(rng.random());
            points.push(p);
            values.push(n / self.rates[cell] * xi + self.offsets[cell]);
        }
        SampleFunction {
            dim: self.locations.domain.dim(),
            points,
            values,
        }
    }

    /// First `k` argmins of one realization, drawn lazily in increasing
    /// noise order.
    pub fn first_k(&self, k: usize, seed: RngSeed) -> Result<KArgminRecord> {
        if k == 0 {
            return Err(Error::OutOfRange("k must be at least 1".into()));
        }
        let n = self.n as f64;
        let mut order = OrderedExp::new(self.n);
        first_k_lazy(self.locations.domain.dim(), k, None, &mut seed.rng(), |rng| {
            let xi = self.noise.from_exp_level(order.next(rng)?);
            let (cell, p) = self.locations.draw(rng);
            let v = n / self.rates[cell] * xi + self.offsets[cell];
            Some((p, v, n / self.max_rate * xi + self.min_offset))
        })
    }
}

/// One realization of `f_n`.
pub fn sample_fn(
    domain: &BoxDomain,
    lambda: &ScalarField,
    rho: &ScalarField,
    g: &ScalarField,
    n: usize,
    noise: NoiseSpec,
    seed: RngSeed,
) -> Result<SampleFunction> {
    Ok(DiscreteProcess::new(domain, lambda, rho, g, n, noise)?.sample(seed))
}

/// One realization of `W_n + g` from `n` i.i.d. `μ_λ` points.
pub fn sample_w_construction_a(
    domain: &BoxDomain,
    lambda: &ScalarField,
    g: &ScalarField,
    n: usize,
    seed: RngSeed,
) -> Result<SampleFunction> {
    let table = crate::field::build_measure_table(domain, lambda, g)?;
    Ok(ConstructionA::new(&table, n)?.sample(seed))
}

/// Exact first `k` argmins of `W_λ + g`.
pub fn sample_w_records(
    domain: &BoxDomain,
    lambda: &ScalarField,
    g: &ScalarField,
    k: usize,
    seed: RngSeed,
) -> Result<KArgminRecord> {
    let table = crate::field::build_measure_table(domain, lambda, g)?;
    RecordSampler::new(&table).sample(k, seed)
}
