//! Scalar fields on a [`BoxDomain`] and the measure table derived from a
//! rate field `λ` and an offset field `g`.
//!
//! Fields are sampled at cell midpoints and treated as piecewise constant, so
//! `μ_λ` is a finite measure over cells, `H` is a step function and `I(t) =
//! ∫_{-∞}^t H(s) ds` is piecewise linear. Everything downstream integrates
//! exactly against these pieces.

use alloc::vec::Vec;

use crate::domain::{AxisBox, BoxDomain, Point};
use crate::error::{Error, Result};

/// Sum of monomials `c · x^i · y^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    terms: Vec<(f64, [u32; 2])>,
}

impl Polynomial {
    /// `c[0] + c[1] x + c[2] x² + …`
    pub fn univariate(coeffs: &[f64]) -> Self {
        Polynomial {
            terms: coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, &c)| (c, [i as u32, 0]))
                .collect(),
        }
    }

    /// `Σ coeffs[i][j] x^i y^j`
    pub fn bivariate<R: AsRef<[f64]>>(coeffs: &[R]) -> Self {
        let mut terms = Vec::new();
        for (i, row) in coeffs.iter().enumerate() {
            for (j, &c) in row.as_ref().iter().enumerate() {
                if c != 0.0 {
                    terms.push((c, [i as u32, j as u32]));
                }
            }
        }
        Polynomial { terms }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|&(c, [i, j])| c * libm::pow(p.x(), i as f64) * libm::pow(p.y(), j as f64))
            .sum()
    }
}

/// A field over `D̄`: constant, polynomial in the coordinates, or one value
/// per cell (row-major, piecewise constant).
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    Poly(Polynomial),
    Grid(Vec<f64>),
}

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        ScalarField::Constant(c)
    }

    pub fn poly(coeffs: &[f64]) -> Self {
        ScalarField::Poly(Polynomial::univariate(coeffs))
    }

    pub fn grid(values: Vec<f64>) -> Self {
        ScalarField::Grid(values)
    }

    /// Value at every cell midpoint, rejecting non-finite values.
    pub fn discretize(&self, domain: &BoxDomain) -> Result<Vec<f64>> {
        let n = domain.cell_count();
        let values: Vec<f64> = match self {
            ScalarField::Constant(c) => alloc::vec![*c; n],
            ScalarField::Poly(p) => (0..n).map(|c| p.eval(domain.cell_center(c))).collect(),
            ScalarField::Grid(v) => {
                if v.len() != n {
                    return Err(Error::GridSize {
                        expected: n,
                        got: v.len(),
                    });
                }
                v.clone()
            }
        };
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField { cell });
        }
        Ok(values)
    }

    /// Like [`discretize`](Self::discretize) but also requires every value to
    /// be strictly positive, as rates and point densities must be.
    pub fn discretize_rate(&self, domain: &BoxDomain) -> Result<Vec<f64>> {
        let values = self.discretize(domain)?;
        check_rates(&values)?;
        Ok(values)
    }
}

pub(crate) fn check_rates(values: &[f64]) -> Result<()> {
    for (cell, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::InvalidField { cell });
        }
        if value <= 0.0 {
            return Err(Error::NonPositiveRate { cell, value });
        }
    }
    Ok(())
}

/// `λ̄`, the cell masses of `μ_λ`, and the tables for `H(s) = μ_λ{g ≤ s}` and
/// `I(t) = ∫_{-∞}^t H`.
///
/// `levels` are the distinct offsets `s₁ < … < s_m`; `cum_mass[j] = H(s_j)`;
/// `integral[j] = I(s_j)`. Between levels `I` is linear with slope
/// `cum_mass[j]`, and past `s_m` the slope is 1. `tail[j]` caches
/// `∫_{s_j}^∞ exp(-λ̄ I(t)) dt` so `Φ` costs one binary search.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTable {
    domain: BoxDomain,
    rates: Vec<f64>,
    offsets: Vec<f64>,
    lambda_bar: f64,
    weights: Vec<f64>,
    levels: Vec<f64>,
    cum_mass: Vec<f64>,
    integral: Vec<f64>,
    tail: Vec<f64>,
}

/// Build the measure table of `(λ, g)` on `domain`.
pub fn build_measure_table(
    domain: &BoxDomain,
    lambda: &ScalarField,
    g: &ScalarField,
) -> Result<MeasureTable> {
    let rates = lambda.discretize_rate(domain)?;
    let offsets = g.discretize(domain)?;
    MeasureTable::from_cells(domain.clone(), rates, offsets)
}

impl MeasureTable {
    /// Table from per-cell rates and offsets.
    pub fn from_cells(domain: BoxDomain, rates: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        let n = domain.cell_count();
        for len in [rates.len(), offsets.len()] {
            if len != n {
                return Err(Error::GridSize {
                    expected: n,
                    got: len,
                });
            }
        }
        check_rates(&rates)?;
        if let Some(cell) = offsets.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField { cell });
        }
        let vol = domain.cell_volume();
        let lambda_bar: f64 = rates.iter().map(|r| r * vol).sum();
        let weights: Vec<f64> = rates.iter().map(|r| r * vol / lambda_bar).collect();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| offsets[a].total_cmp(&offsets[b]));
        let mut levels = Vec::new();
        let mut cum_mass = Vec::new();
        let mut acc = 0.0;
        for &c in &order {
            acc += weights[c];
            if levels.last() == Some(&offsets[c]) {
                *cum_mass.last_mut().unwrap() = acc;
            } else {
                levels.push(offsets[c]);
                cum_mass.push(acc);
            }
        }
        *cum_mass.last_mut().unwrap() = 1.0;
        Ok(Self::assemble(domain, rates, offsets, lambda_bar, weights, levels, cum_mass))
    }

    /// Fill in `integral` and `tail` from the level CDF.
    pub(crate) fn assemble(
        domain: BoxDomain,
        rates: Vec<f64>,
        offsets: Vec<f64>,
        lambda_bar: f64,
        weights: Vec<f64>,
        levels: Vec<f64>,
        cum_mass: Vec<f64>,
    ) -> Self {
        let m = levels.len();
        let mut integral = Vec::with_capacity(m);
        integral.push(0.0);
        for j in 1..m {
            integral.push(integral[j - 1] + cum_mass[j - 1] * (levels[j] - levels[j - 1]));
        }
        let mut tail = alloc::vec![0.0; m];
        tail[m - 1] = libm::exp(-lambda_bar * integral[m - 1]) / lambda_bar;
        for j in (0..m - 1).rev() {
            tail[j] = exp_piece(
                lambda_bar,
                integral[j],
                cum_mass[j],
                levels[j + 1] - levels[j],
            ) + tail[j + 1];
        }
        MeasureTable {
            domain,
            rates,
            offsets,
            lambda_bar,
            weights,
            levels,
            cum_mass,
            integral,
            tail,
        }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// `λ̄ = ∫_D λ`.
    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    /// `μ_λ` mass of each cell.
    pub fn cell_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn rate_at_cell(&self, cell: usize) -> f64 {
        self.rates[cell]
    }

    pub fn offset_at_cell(&self, cell: usize) -> f64 {
        self.offsets[cell]
    }

    /// Distinct offset levels `s₁ < … < s_m`.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `H(s_j)` at each level.
    pub fn cum_mass(&self) -> &[f64] {
        &self.cum_mass
    }

    pub fn min_offset(&self) -> f64 {
        self.levels[0]
    }

    pub fn max_offset(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::MIN, f64::max)
    }

    /// `(breakpoint, I(breakpoint), slope)` for each linear piece of `I`.
    pub fn i_pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.levels
            .iter()
            .zip(&self.integral)
            .zip(&self.cum_mass)
            .map(|((&s, &i), &h)| (s, i, h))
    }

    /// Smallest `t` with `I(t) = v`, for `v ≥ 0`.
    pub fn inverse_i(&self, v: f64) -> f64 {
        let j = self.integral.partition_point(|&i| i <= v).saturating_sub(1);
        let slope = self.cum_mass[j];
        if v <= 0.0 {
            self.levels[0]
        } else {
            self.levels[j] + (v - self.integral[j]) / slope
        }
    }

    /// Index of the last level `≤ t`.
    #[inline]
    pub(crate) fn level_index(&self, t: f64) -> Option<usize> {
        self.levels.partition_point(|&s| s <= t).checked_sub(1)
    }

    /// `H(s) = μ_λ{x : g(x) ≤ s}`, right-continuous.
    pub fn eval_h(&self, s: f64) -> f64 {
        self.level_index(s).map_or(0.0, |j| self.cum_mass[j])
    }

    /// `I(t) = ∫_{-∞}^t H(s) ds`.
    pub fn eval_i(&self, t: f64) -> f64 {
        match self.level_index(t) {
            None => 0.0,
            Some(j) => self.integral[j] + self.cum_mass[j] * (t - self.levels[j]),
        }
    }

    /// `∫_a^∞ exp(-λ̄ I(t)) dt`, exactly.
    pub fn tail_integral(&self, a: f64) -> f64 {
        match self.level_index(a) {
            None => (self.levels[0] - a) + self.tail[0],
            Some(j) => {
                let ia = self.integral[j] + self.cum_mass[j] * (a - self.levels[j]);
                if j + 1 == self.levels.len() {
                    libm::exp(-self.lambda_bar * ia) / self.lambda_bar
                } else {
                    exp_piece(self.lambda_bar, ia, self.cum_mass[j], self.levels[j + 1] - a)
                        + self.tail[j + 1]
                }
            }
        }
    }

    /// `Σ_cells λ · vol(cell ∩ region)`: the `λ_C` of a closed box.
    pub fn rate_mass(&self, region: &AxisBox) -> f64 {
        let dim = self.domain.dim();
        (0..self.domain.cell_count())
            .map(|c| self.rates[c] * self.domain.cell_bounds(c).overlap_volume(region, dim))
            .sum()
    }

    /// Checks the structural invariants of the table.
    pub fn validate(&self) -> core::result::Result<(), &'static str> {
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 || self.weights.iter().any(|&w| w < 0.0) {
            return Err("cell weights must be nonnegative and sum to 1");
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err("levels must be strictly increasing");
        }
        if self.cum_mass.windows(2).any(|w| w[0] > w[1]) {
            return Err("H must be nondecreasing");
        }
        if *self.cum_mass.last().unwrap() != 1.0 {
            return Err("H must reach 1");
        }
        if self.integral[0] != 0.0 || self.integral.windows(2).any(|w| w[0] > w[1]) {
            return Err("I must start at 0 and be nondecreasing");
        }
        Ok(())
    }
}

/// `∫_0^Δ exp(-λ̄ (i0 + h u)) du`.
#[inline]
pub(crate) fn exp_piece(lambda_bar: f64, i0: f64, h: f64, delta: f64) -> f64 {
    let head = libm::exp(-lambda_bar * i0);
    let rate = lambda_bar * h;
    if rate * delta < 1e-300 {
        head * delta
    } else {
        head * -libm::expm1(-rate * delta) / rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table_1d(cells: usize, lambda: ScalarField, g: ScalarField) -> MeasureTable {
        build_measure_table(&BoxDomain::unit_interval(cells), &lambda, &g).unwrap()
    }

    #[test]
    fn constant_fields() {
        let t = table_1d(10, ScalarField::constant(1.0), ScalarField::constant(0.0));
        assert!((t.lambda_bar() - 1.0).abs() < 1e-14);
        assert_eq!(t.eval_h(-1.0), 0.0);
        assert_eq!(t.eval_h(0.0), 1.0);
        assert_eq!(t.eval_h(3.0), 1.0);
        assert_eq!(t.eval_i(-2.0), 0.0);
        assert!((t.eval_i(2.0) - 2.0).abs() < 1e-15);
        t.validate().unwrap();
    }

    #[test]
    fn linear_offset() {
        // g(x) = x on 1000 midpoints: H(0.25) counts midpoints ≤ 0.25.
        let t = table_1d(1000, ScalarField::constant(1.0), ScalarField::poly(&[0.0, 1.0]));
        assert!((t.eval_h(0.25) - 0.25).abs() <= 1e-3);
        assert!((t.eval_i(1.0) - 0.5).abs() < 1e-6);
        assert!((t.eval_i(0.5) - 0.125).abs() < 1e-6);
        assert_eq!(t.eval_i(-0.1), 0.0);
    }

    #[test]
    fn quadratic_offset() {
        let t = table_1d(1000, ScalarField::constant(1.0), ScalarField::poly(&[0.0, 0.0, 1.0]));
        assert!((t.eval_h(0.25) - 0.5).abs() <= 1e-3);
        assert!((t.eval_h(0.04) - 0.2).abs() <= 1e-3);
        assert!((t.eval_i(1.0) - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_fields() {
        let d = BoxDomain::unit_interval(4);
        let bad_rate = build_measure_table(&d, &ScalarField::poly(&[-0.2, 1.0]), &ScalarField::constant(0.0));
        assert!(matches!(bad_rate, Err(Error::NonPositiveRate { cell: 0, .. })));
        let nan = build_measure_table(&d, &ScalarField::constant(1.0), &ScalarField::grid(alloc::vec![0.0, f64::NAN, 0.0, 0.0]));
        assert_eq!(nan, Err(Error::InvalidField { cell: 1 }));
        let short = build_measure_table(&d, &ScalarField::constant(1.0), &ScalarField::grid(alloc::vec![0.0; 3]));
        assert_eq!(short, Err(Error::GridSize { expected: 4, got: 3 }));
    }

    #[test]
    fn rate_mass_of_subbox() {
        let t = table_1d(100, ScalarField::poly(&[1.0, 1.0]), ScalarField::constant(0.0));
        // ∫_0^0.5 (1 + x) dx with midpoint sampling is exact for linear λ.
        assert!((t.rate_mass(&AxisBox::interval(0.0, 0.5)) - 0.625).abs() < 1e-12);
        assert!((t.rate_mass(&AxisBox::interval(-1.0, 2.0)) - t.lambda_bar()).abs() < 1e-12);
    }

    #[test]
    fn tail_integral_matches_piecewise_sum() {
        let t = table_1d(50, ScalarField::poly(&[0.5, 1.0]), ScalarField::poly(&[0.2, -1.0, 3.0]));
        // crude Riemann check with a fine step
        let a = t.min_offset() - 0.3;
        let upper = t.max_offset() + 40.0 / t.lambda_bar();
        let steps = 400_000;
        let h = (upper - a) / steps as f64;
        let mut s = 0.0;
        for i in 0..steps {
            let x = a + (i as f64 + 0.5) * h;
            s += libm::exp(-t.lambda_bar() * t.eval_i(x)) * h;
        }
        assert!((s - t.tail_integral(a)).abs() < 1e-6, "{s} vs {}", t.tail_integral(a));
    }

    #[test]
    fn two_d_table_is_valid() {
        let d = BoxDomain::rect([0.0, 0.0], [1.0, 2.0], 16).unwrap();
        let g = ScalarField::Poly(Polynomial::bivariate(&[alloc::vec![0.0, 0.0, 1.0], alloc::vec![0.0], alloc::vec![1.0]]));
        let t = build_measure_table(&d, &ScalarField::constant(0.5), &g).unwrap();
        t.validate().unwrap();
        assert!((t.lambda_bar() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn h_monotone_and_i_slope_matches_h(
            c in proptest::collection::vec(-1.0f64..1.0, 1..5),
            l0 in 0.2f64..2.0,
            l1 in -0.1f64..0.1,
            s in -1.5f64..2.5,
        ) {
            let t = table_1d(200, ScalarField::poly(&[l0, l1]), ScalarField::poly(&c));
            prop_assert!(t.validate().is_ok());
            prop_assert!(t.eval_h(s) <= t.eval_h(s + 0.01));
            prop_assert!(t.eval_h(t.max_offset()) == 1.0);
            // I convex: midpoint below the chord
            let (a, b) = (s - 0.3, s + 0.4);
            prop_assert!(t.eval_i(0.5 * (a + b)) <= 0.5 * (t.eval_i(a) + t.eval_i(b)) + 1e-12);
            // finite-difference slope equals H away from breakpoints
            let h = 1e-6;
            let near_break = t.levels().iter().any(|&l| (l - s).abs() < 2.0 * h);
            if !near_break {
                let slope = (t.eval_i(s + h) - t.eval_i(s - h)) / (2.0 * h);
                prop_assert!((slope - t.eval_h(s)).abs() < 1e-6);
            }
        }

        #[test]
        fn refinement_moves_h_by_at_most_straddling_mass(
            c in proptest::collection::vec(-1.0f64..1.0, 2..5),
            s in -1.0f64..2.0,
        ) {
            let coarse = table_1d(64, ScalarField::constant(1.0), ScalarField::poly(&c));
            let fine = table_1d(128, ScalarField::constant(1.0), ScalarField::poly(&c));
            let p = Polynomial::univariate(&c);
            let d = coarse.domain();
            // a coarse cell straddles {g = s} when g - s changes sign over it
            let straddle: f64 = (0..d.cell_count())
                .filter(|&cell| {
                    let b = d.cell_bounds(cell);
                    let n = 32;
                    let vals: alloc::vec::Vec<f64> = (0..=n)
                        .map(|i| p.eval(Point::new1(b.lower[0] + (b.upper[0] - b.lower[0]) * i as f64 / n as f64)) - s)
                        .collect();
                    vals.iter().any(|&v| v <= 0.0) && vals.iter().any(|&v| v >= 0.0)
                })
                .map(|cell| coarse.cell_weights()[cell])
                .sum();
            prop_assert!((coarse.eval_h(s) - fine.eval_h(s)).abs() <= straddle + 1e-12);
        }
    }
}
