//! Analytic argmin densities of `W_λ + g`.
//!
//! The kernels are
//!
//! ```text
//! Ψ(x, t, h) = 1{t > h(x)} exp(−λ̄ I_h(t))
//! Φ(x, h)    = ∫_{h(x)}^∞ exp(−λ̄ I_h(t)) dt
//! ```
//!
//! with `I_h(t) = ∫_{-∞}^t H_{λ,h}`. On the cell model `I` is piecewise
//! linear, so both are evaluated in closed form. Location densities carry
//! a factor `λ(x)` per argmin: the rate measure contributes `λ(x)/λ̄` and the
//! value law `λ̄`. Without it the marginal does not integrate to one when `λ`
//! is not constant.
//!
//! The `k`-argmin density is a nested integral over the intermediate
//! minimum values `r₁ < … < r_{k−1}`, where after the `j`-th minimum the
//! process restarts with offset `(g − r_j)⁺` ([`ShiftedOffset`]).

use alloc::vec::Vec;

use rand::Rng;

use crate::domain::{BoxDomain, Point};
use crate::error::{Error, Result};
use crate::field::MeasureTable;
use crate::quad::{adaptive_simpson, adaptive_simpson_split, Simpson};
use crate::sampler::RngSeed;

/// The `r` integrals stop where `λ̄ I(r) = R_WINDOW`; the neglected tail is
/// of order `e^{−40}`.
pub const R_WINDOW: f64 = 40.0;

/// Relative tolerance of the nested `r` quadrature.
pub const JOINT_REL_TOL: f64 = 1e-6;

/// Relative tolerance of the inner integral in [`closed_form_rho_delta`].
pub const RHO_DELTA_REL_TOL: f64 = 1e-10;

/// A grid density is rejected when its mass is further than this from 1.
pub const NORMALIZATION_LIMIT: f64 = 1e-3;

/// `Φ(x, g)`; zero outside `D̄`.
pub fn eval_phi(table: &MeasureTable, x: Point) -> f64 {
    table
        .domain()
        .cell_of(x)
        .map_or(0.0, |c| table.tail_integral(table.offset_at_cell(c)))
}

/// `Ψ(x, t, g)`; zero outside `D̄`.
pub fn eval_psi(table: &MeasureTable, x: Point, t: f64) -> f64 {
    match table.domain().cell_of(x) {
        Some(c) if t > table.offset_at_cell(c) => libm::exp(-table.lambda_bar() * table.eval_i(t)),
        _ => 0.0,
    }
}

/// The offset `(g − r)⁺` viewed through the table of `g`.
///
/// Its level CDF is `H_g(s + r)` for `s ≥ 0` and its running integral is
/// `I_g(t + r) − I_g(r)`, so no per-shift table is needed to evaluate `Φ` or
/// `Ψ`; [`to_table`](Self::to_table) materializes one when wanted.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedOffset<'a> {
    table: &'a MeasureTable,
    shift: f64,
    i_at_shift: f64,
}

impl<'a> ShiftedOffset<'a> {
    pub fn new(table: &'a MeasureTable, shift: f64) -> Self {
        ShiftedOffset {
            table,
            shift,
            i_at_shift: table.eval_i(shift),
        }
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn offset_at_cell(&self, cell: usize) -> f64 {
        (self.table.offset_at_cell(cell) - self.shift).max(0.0)
    }

    pub fn eval_h(&self, s: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else {
            self.table.eval_h(s + self.shift)
        }
    }

    pub fn eval_i(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.table.eval_i(t + self.shift) - self.i_at_shift
        }
    }

    /// `Φ(x_cell, (g − r)⁺)`
    pub fn phi_cell(&self, cell: usize) -> f64 {
        let start = self.table.offset_at_cell(cell).max(self.shift);
        libm::exp(self.table.lambda_bar() * self.i_at_shift) * self.table.tail_integral(start)
    }

    /// `Ψ(x_cell, t, (g − r)⁺)`
    pub fn psi_cell(&self, cell: usize, t: f64) -> f64 {
        if t > self.offset_at_cell(cell) {
            libm::exp(-self.table.lambda_bar() * self.eval_i(t))
        } else {
            0.0
        }
    }

    /// `Ψ` with the indicator closed at `t = offset`, used inside the `r`
    /// integrals so that endpoint evaluations see the right limit.
    fn psi_cell_closed(&self, cell: usize, t: f64) -> f64 {
        if t >= self.offset_at_cell(cell) {
            libm::exp(-self.table.lambda_bar() * self.eval_i(t))
        } else {
            0.0
        }
    }

    /// Measure table of `(λ, (g − r)⁺)` derived from the base levels: levels
    /// below `r` collapse onto 0, the rest move down by `r`.
    pub fn to_table(&self) -> MeasureTable {
        let t = self.table;
        let r = self.shift;
        let mut levels = Vec::with_capacity(t.levels().len());
        let mut cum = Vec::with_capacity(t.levels().len());
        for (&s, &h) in t.levels().iter().zip(t.cum_mass()) {
            let level = (s - r).max(0.0);
            if levels.last() == Some(&level) {
                *cum.last_mut().unwrap() = h;
            } else {
                levels.push(level);
                cum.push(h);
            }
        }
        let offsets = t.offsets().iter().map(|g| (g - r).max(0.0)).collect();
        MeasureTable::assemble(
            t.domain().clone(),
            t.rates().to_vec(),
            offsets,
            t.lambda_bar(),
            t.cell_weights().to_vec(),
            levels,
            cum,
        )
    }
}

/// Which density a [`DensityGrid`] tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DensityKind {
    /// Law of `X⁽¹⁾`.
    MarginalArgmin,
    /// Joint law of `(X⁽¹⁾, …, X⁽ᵏ⁾)`.
    JointArgmin(usize),
}

/// Piecewise-constant density over `arity`-tuples of domain cells.
///
/// Tuples are indexed with the first location varying slowest. A sample is
/// `arity · dim` coordinates, location by location.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    domain: BoxDomain,
    arity: usize,
    kind: DensityKind,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(domain: BoxDomain, arity: usize, kind: DensityKind, values: Vec<f64>) -> Result<Self> {
        let expected = domain.cell_count().pow(arity as u32);
        if values.len() != expected {
            return Err(Error::GridSize {
                expected,
                got: values.len(),
            });
        }
        if let Some(cell) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidField { cell });
        }
        Ok(DensityGrid {
            domain,
            arity,
            kind,
            values,
        })
    }

    /// Tabulate `f` over every cell tuple.
    pub fn from_fn<F>(domain: BoxDomain, arity: usize, kind: DensityKind, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Result<f64>,
    {
        let n = domain.cell_count().pow(arity as u32);
        let mut cells = alloc::vec![0usize; arity];
        let mut values = Vec::with_capacity(n);
        for idx in 0..n {
            tuple_of(domain.cell_count(), idx, &mut cells);
            values.push(f(&cells)?);
        }
        Self::new(domain, arity, kind, values)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coords_per_sample(&self) -> usize {
        self.domain.dim() * self.arity
    }

    pub fn cell_volume(&self) -> f64 {
        libm::pow(self.domain.cell_volume(), self.arity as f64)
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// Base-domain cells of tuple `idx`.
    pub fn cell_tuple(&self, idx: usize) -> Vec<usize> {
        let mut cells = alloc::vec![0; self.arity];
        tuple_of(self.domain.cell_count(), idx, &mut cells);
        cells
    }

    /// Per-coordinate `(lower, upper)` of tuple `idx`.
    pub fn cell_extent(&self, idx: usize) -> Vec<(f64, f64)> {
        let dim = self.domain.dim();
        let mut out = Vec::with_capacity(self.coords_per_sample());
        for c in self.cell_tuple(idx) {
            let b = self.domain.cell_bounds(c);
            for a in 0..dim {
                out.push((b.lower[a], b.upper[a]));
            }
        }
        out
    }

    /// Cell-center coordinates of tuple `idx`.
    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        self.cell_extent(idx).iter().map(|(l, u)| 0.5 * (l + u)).collect()
    }

    /// Integrate out every location but the first, giving a marginal grid
    /// over the base domain.
    pub fn first_marginal(&self) -> DensityGrid {
        let n = self.domain.cell_count();
        let rest = self.values.len() / n;
        let w = libm::pow(self.domain.cell_volume(), (self.arity - 1) as f64);
        let values = self.values.chunks(rest).map(|c| c.iter().sum::<f64>() * w).collect();
        DensityGrid {
            domain: self.domain.clone(),
            arity: 1,
            kind: DensityKind::MarginalArgmin,
            values,
        }
    }

    /// Fails with [`Error::Normalization`] when the mass is off by more than
    /// [`NORMALIZATION_LIMIT`].
    pub fn check_normalized(&self) -> Result<()> {
        let total = self.total_mass();
        if (total - 1.0).abs() > NORMALIZATION_LIMIT {
            Err(Error::Normalization { total })
        } else {
            Ok(())
        }
    }
}

/// Cells of tuple `idx` in a grid of `arity`-tuples over `cell_count` cells.
pub fn tuple_cells(cell_count: usize, arity: usize, idx: usize) -> Vec<usize> {
    let mut cells = alloc::vec![0; arity];
    tuple_of(cell_count, idx, &mut cells);
    cells
}

fn tuple_of(n: usize, mut idx: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
}

/// Density of the first argmin: `λ(x) Φ(x, g)` per cell.
pub fn marginal_argmin_density(table: &MeasureTable) -> Result<DensityGrid> {
    let values = (0..table.domain().cell_count())
        .map(|c| table.rate_at_cell(c) * table.tail_integral(table.offset_at_cell(c)))
        .collect();
    let grid = DensityGrid::new(table.domain().clone(), 1, DensityKind::MarginalArgmin, values)?;
    grid.check_normalized()?;
    Ok(grid)
}

/// Law of the minimum value `τ⁽¹⁾`: density `λ̄ H(t) e^{−λ̄ I(t)}`, CDF
/// `1 − e^{−λ̄ I(t)}`.
#[derive(Debug, Clone, Copy)]
pub struct MinValueDensity<'a> {
    table: &'a MeasureTable,
}

pub fn min_value_density(table: &MeasureTable) -> MinValueDensity<'_> {
    MinValueDensity { table }
}

impl MinValueDensity<'_> {
    pub fn density(&self, t: f64) -> f64 {
        let lb = self.table.lambda_bar();
        lb * self.table.eval_h(t) * libm::exp(-lb * self.table.eval_i(t))
    }

    pub fn cdf(&self, t: f64) -> f64 {
        -libm::expm1(-self.table.lambda_bar() * self.table.eval_i(t))
    }

    /// Smallest `t` with `cdf(t) = p`, for `p ∈ [0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        self.table.inverse_i(-libm::log1p(-p) / self.table.lambda_bar())
    }
}

fn locate_cells(table: &MeasureTable, locations: &[Point]) -> Result<Vec<usize>> {
    locations
        .iter()
        .map(|&p| {
            table
                .domain()
                .cell_of(p)
                .ok_or_else(|| Error::OutOfRange(alloc::format!("location {:?} is outside the domain", p.0)))
        })
        .collect()
}

/// Joint density of the first `k ∈ {2, 3}` argmins at `locations`, by
/// adaptive Simpson over the intermediate minimum values.
pub fn joint_density_k(table: &MeasureTable, locations: &[Point]) -> Result<f64> {
    let cells = locate_cells(table, locations)?;
    joint_density_cells(table, &cells, Simpson::with_rel_tol(JOINT_REL_TOL))
}

/// [`joint_density_k`] on cell indices.
pub fn joint_density_cells(table: &MeasureTable, cells: &[usize], opts: Simpson) -> Result<f64> {
    let lo = table.min_offset();
    let hi = table.inverse_i(R_WINDOW / table.lambda_bar());
    let g = |c: usize| table.offset_at_cell(c);
    let prefactor: f64 = cells.iter().map(|&c| table.rate_at_cell(c)).product();
    let first = ShiftedOffset::new(table, lo);
    match *cells {
        [c1, c2] => {
            let f = |r1: f64| first.psi_cell_closed(c1, r1 - lo) * ShiftedOffset::new(table, r1).phi_cell(c2);
            let v = adaptive_simpson_split(f, g(c1), hi, &[g(c2)], opts);
            scale_result(v, prefactor)
        }
        [c1, c2, c3] => {
            let inner_opts = Simpson {
                rel_tol: opts.rel_tol * 0.1,
                ..opts
            };
            let mut inner_failed = false;
            let outer = |r1: f64| {
                let head = first.psi_cell_closed(c1, r1 - lo);
                if head == 0.0 {
                    return 0.0;
                }
                let after_first = ShiftedOffset::new(table, r1);
                let inner = |r2: f64| after_first.psi_cell_closed(c2, r2 - r1) * ShiftedOffset::new(table, r2).phi_cell(c3);
                let v = match adaptive_simpson_split(inner, g(c2).max(r1), hi, &[g(c3)], inner_opts) {
                    Ok(v) => v,
                    Err(Error::Quadrature { estimate }) => {
                        inner_failed = true;
                        estimate
                    }
                    Err(_) => f64::NAN,
                };
                head * v
            };
            let v = adaptive_simpson_split(outer, g(c1), hi, &[g(c2), g(c3)], opts);
            let v = match (v, inner_failed) {
                (Ok(est), true) => Err(Error::Quadrature { estimate: est }),
                (v, _) => v,
            };
            scale_result(v, prefactor)
        }
        _ => Err(Error::Unsupported(alloc::format!(
            "quadrature covers k = 2 or 3, got k = {}; use the Monte Carlo estimator",
            cells.len()
        ))),
    }
}

fn scale_result(v: Result<f64>, factor: f64) -> Result<f64> {
    match v {
        Ok(v) => Ok(v * factor),
        Err(Error::Quadrature { estimate }) => Err(Error::Quadrature {
            estimate: estimate * factor,
        }),
        Err(e) => Err(e),
    }
}

/// Joint density of the first `k ≥ 2` argmins by stratified Monte Carlo over
/// the intermediate minimum values. Returns `(estimate, standard error)`.
///
/// Each `r_j` is drawn as `max(g(x_j), r_{j−1}) + u_j` with `u_j ~ Exp(c)`,
/// `c = λ̄ H(max_j g(x_j)) / 2`, which keeps the importance weights bounded.
/// The first increment is stratified into `mc_n / 2` strata of two draws.
pub fn joint_density_k_mc(table: &MeasureTable, locations: &[Point], mc_n: usize, seed: RngSeed) -> Result<(f64, f64)> {
    let cells = locate_cells(table, locations)?;
    let k = cells.len();
    if k < 2 {
        return Err(Error::OutOfRange("joint density needs k ≥ 2".into()));
    }
    if mc_n < 2 {
        return Err(Error::SampleSize { needed: 2, got: mc_n });
    }
    let lo = table.min_offset();
    let prefactor: f64 = cells.iter().map(|&c| table.rate_at_cell(c)).product();
    let g_star = cells.iter().map(|&c| table.offset_at_cell(c)).fold(f64::MIN, f64::max);
    let c = 0.5 * table.lambda_bar() * table.eval_h(g_star);
    let strata = mc_n / 2;
    let mut rng = seed.rng();
    let mut r = alloc::vec![0.0; k - 1];
    let mut draw = |v1: f64, rng: &mut rand_chacha::ChaCha8Rng| {
        let mut log_q = 0.0;
        let mut prev = lo;
        for (j, rj) in r.iter_mut().enumerate() {
            let v = if j == 0 { v1 } else { rng.random::<f64>() };
            let u = -libm::log1p(-v) / c;
            log_q += libm::log(c) - c * u;
            *rj = table.offset_at_cell(cells[j]).max(prev) + u;
            prev = *rj;
        }
        let mut value = 1.0;
        let mut prev = lo;
        for (j, &rj) in r.iter().enumerate() {
            value *= ShiftedOffset::new(table, prev).psi_cell(cells[j], rj - prev);
            prev = rj;
        }
        value *= ShiftedOffset::new(table, prev).phi_cell(cells[k - 1]);
        value * libm::exp(-log_q)
    };
    let mut sum = 0.0;
    let mut var = 0.0;
    for h in 0..strata {
        let a = draw((h as f64 + rng.random::<f64>()) / strata as f64, &mut rng);
        let b = draw((h as f64 + rng.random::<f64>()) / strata as f64, &mut rng);
        sum += a + b;
        var += (a - b) * (a - b);
    }
    let s = strata as f64;
    let estimate = sum / (2.0 * s) * prefactor;
    let std_err = libm::sqrt(var) / (2.0 * s) * prefactor;
    Ok((estimate, std_err))
}

/// Joint density of the first `k` argmins on every cell tuple (serial).
pub fn joint_density_grid(table: &MeasureTable, k: usize) -> Result<DensityGrid> {
    let opts = Simpson::with_rel_tol(JOINT_REL_TOL);
    let grid = DensityGrid::from_fn(table.domain().clone(), k, DensityKind::JointArgmin(k), |cells| {
        joint_density_cells(table, cells, opts)
    })?;
    grid.check_normalized()?;
    Ok(grid)
}

fn rho_delta_with_final(delta: f64, y: f64, final_term: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::OutOfRange(alloc::format!("delta must be positive, got {delta}")));
    }
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::OutOfRange(alloc::format!("y must lie in [0, 1], got {y}")));
    }
    let a = 2.0 / (3.0 * delta);
    let inner = adaptive_simpson(
        |x| x * libm::exp(-a * x * x * x),
        y,
        1.0,
        Simpson::with_rel_tol(RHO_DELTA_REL_TOL),
    )?;
    Ok(2.0 / delta * inner + final_term)
}

/// Argmin density of `δ W_1 + x²` on `[0, 1]`:
/// `ρ_δ(y) = (2/δ) ∫_y¹ x e^{−2x³/(3δ)} dx + e^{−2/(3δ)}`.
pub fn closed_form_rho_delta(delta: f64, y: f64) -> Result<f64> {
    rho_delta_with_final(delta, y, libm::exp(-2.0 / (3.0 * delta)))
}

/// Same integral with the boundary term `e^{−2δ/3}`; it integrates to one
/// only at `δ = 1`.
pub fn printed_rho_delta(delta: f64, y: f64) -> Result<f64> {
    rho_delta_with_final(delta, y, libm::exp(-2.0 * delta / 3.0))
}

/// `∫₀¹` of [`printed_rho_delta`] in closed form: `1 − e^{−2/(3δ)} + e^{−2δ/3}`.
pub fn printed_rho_delta_mass(delta: f64) -> f64 {
    1.0 - libm::exp(-2.0 / (3.0 * delta)) + libm::exp(-2.0 * delta / 3.0)
}
