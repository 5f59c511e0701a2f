use extremal_core::density::{joint_density_grid, printed_rho_delta_mass};
use extremal_core::quad::{adaptive_simpson, Simpson};
use extremal_core::verify::histogram_vs_density;
use extremal_core::{
    build_measure_table, closed_form_rho_delta, eval_phi, eval_psi, joint_density_k, joint_density_k_mc,
    marginal_argmin_density, min_value_density, BoxDomain, MeasureTable, Point, RecordSampler, RngSeed, ScalarField,
    ShiftedOffset,
};
use proptest::prelude::*;

/// Cell-by-cell model built without the library: rates and offsets at cell
/// midpoints, `λ̄ I(t) = Σ λ_c vol (t − g_c)⁺`.
struct BruteModel {
    rates: Vec<f64>,
    offsets: Vec<f64>,
    vol: f64,
}

impl BruteModel {
    fn new(cells: usize, lambda: &[f64], g: &[f64]) -> Self {
        let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, a| acc * x + a);
        let vol = 1.0 / cells as f64;
        let mids = (0..cells).map(|i| (i as f64 + 0.5) * vol);
        BruteModel {
            rates: mids.clone().map(|x| poly(lambda, x)).collect(),
            offsets: mids.map(|x| poly(g, x)).collect(),
            vol,
        }
    }

    fn lambda_bar(&self) -> f64 {
        self.rates.iter().sum::<f64>() * self.vol
    }

    fn lb_i(&self, t: f64) -> f64 {
        self.rates.iter().zip(&self.offsets).map(|(l, g)| l * self.vol * (t - g).max(0.0)).sum()
    }

    fn psi(&self, cell: usize, t: f64) -> f64 {
        if t > self.offsets[cell] {
            (-self.lb_i(t)).exp()
        } else {
            0.0
        }
    }

    /// Trapezoid rule, 10⁴ panels up to max g and 10⁴ panels over
    /// `[max g, max g + 25/λ̄]`.
    fn phi(&self, cell: usize) -> f64 {
        let gmax = self.offsets.iter().copied().fold(f64::MIN, f64::max);
        let trap = |a: f64, b: f64| {
            let n = 10_000;
            let h = (b - a) / n as f64;
            let mut s = 0.5 * ((-self.lb_i(a)).exp() + (-self.lb_i(b)).exp());
            for i in 1..n {
                s += (-self.lb_i(a + i as f64 * h)).exp();
            }
            s * h
        };
        trap(self.offsets[cell], gmax) + trap(gmax, gmax + 25.0 / self.lambda_bar())
    }
}

fn table(cells: usize, lambda: &[f64], g: &[f64]) -> MeasureTable {
    build_measure_table(&BoxDomain::unit_interval(cells), &ScalarField::poly(lambda), &ScalarField::poly(g)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn phi_psi_match_brute_force(
        l0 in 1.0f64..2.0,
        l1 in 0.0f64..1.0,
        g in proptest::collection::vec(-1.0f64..1.0, 1..4),
        cell in 0usize..100,
        t_frac in 0.0f64..1.5,
    ) {
        let lambda = [l0, l1];
        let t = table(100, &lambda, &g);
        let brute = BruteModel::new(100, &lambda, &g);
        prop_assert!((t.lambda_bar() - brute.lambda_bar()).abs() < 1e-12);
        let x = Point::new1((cell as f64 + 0.5) / 100.0);
        let phi = eval_phi(&t, x);
        prop_assert!((phi - brute.phi(cell)).abs() < 1e-6, "phi {} vs {}", phi, brute.phi(cell));
        let (lo, hi) = (t.min_offset(), t.max_offset() + 1.0);
        let tt = lo + t_frac * (hi - lo);
        prop_assert!((eval_psi(&t, x, tt) - brute.psi(cell, tt)).abs() < 1e-6);
    }
}

#[test]
fn spec_kernel_values() {
    // the last cell sits at g = (1 − 1/2N)², so the gap to e^{−2/3} is O(1/N)
    let quad = table(200_000, &[1.0], &[0.0, 0.0, 1.0]);
    assert!((eval_phi(&quad, Point::new1(1.0)) - (-2.0f64 / 3.0).exp()).abs() < 1e-5);
    let lin = table(2000, &[1.0], &[0.0, 1.0]);
    assert!((eval_psi(&lin, Point::new1(0.0), 1.0) - (-0.5f64).exp()).abs() < 1e-6);
}

#[test]
fn marginals_normalize() {
    let cases: [(&[f64], &[f64]); 4] = [
        (&[1.0], &[0.0]),
        (&[0.2, 2.0], &[0.0]),
        (&[1.0, 0.5], &[0.3, -1.0, 2.0]),
        (&[3.0], &[0.0, 0.0, 0.0, 5.0]),
    ];
    for (l, g) in cases {
        let t = table(300, l, g);
        let m = marginal_argmin_density(&t).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-4, "{l:?} {g:?}: {}", m.total_mass());
    }
    let d2 = BoxDomain::rect([0.0, 0.0], [1.0, 2.0], 30).unwrap();
    let t = build_measure_table(&d2, &ScalarField::constant(1.5), &ScalarField::poly(&[0.0, 1.0])).unwrap();
    assert!((marginal_argmin_density(&t).unwrap().total_mass() - 1.0).abs() < 1e-4);
}

#[test]
fn min_value_density_integrates_to_one() {
    for (l, g) in [(&[1.0][..], &[0.0][..]), (&[2.0, 1.0], &[0.0, 0.0, 1.0]), (&[0.5], &[1.0, -2.0])] {
        let t = table(200, l, g);
        let d = min_value_density(&t);
        let mut cuts = t.levels().to_vec();
        cuts.push(t.max_offset() + 60.0 / t.lambda_bar());
        // H jumps at every level, so each piece is integrated with its
        // right end pulled inside the piece
        let total: f64 = cuts
            .windows(2)
            .map(|w| {
                let inner = w[0] + (w[1] - w[0]) * (1.0 - 1e-13);
                adaptive_simpson(|x| d.density(x.min(inner)), w[0], w[1], Simpson::with_rel_tol(1e-12)).unwrap()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }
    let c = table(10, &[1.0], &[2.0]);
    let d = min_value_density(&c);
    for t in [2.0, 2.5, 4.0] {
        assert!((d.density(t + 1e-12) - (-(t + 1e-12 - 2.0f64)).exp()).abs() < 1e-9);
    }
}

#[test]
fn rho_delta_matches_marginal() {
    let cells = 5000;
    for delta in [0.1, 1.0, 10.0] {
        let t = table(cells, &[1.0 / delta], &[0.0, 0.0, 1.0]);
        let m = marginal_argmin_density(&t).unwrap();
        let tol = if delta == 1.0 { 1e-8 } else { 1e-6 };
        let worst = (0..cells)
            .map(|c| {
                let y = (c as f64 + 0.5) / cells as f64;
                (m.values()[c] - closed_form_rho_delta(delta, y).unwrap()).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < tol, "delta {delta}: {worst:e}");
    }
}

#[test]
fn rho_delta_normalization_and_concentration() {
    for delta in [0.01, 0.1, 1.0, 10.0] {
        let mass = adaptive_simpson(|y| closed_form_rho_delta(delta, y).unwrap(), 0.0, 1.0, Simpson::with_rel_tol(1e-11))
            .unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "delta {delta}: {mass}");
    }
    let head = |delta: f64, b: f64| {
        adaptive_simpson(|y| closed_form_rho_delta(delta, y).unwrap(), 0.0, b, Simpson::with_rel_tol(1e-9)).unwrap()
    };
    // δ = 1e-3 still leaves about 11% of the mass beyond 0.1; by 0.2 it is
    // all but gone
    assert!(head(1e-3, 0.2) > 0.99);
    assert!(head(1e-3, 0.1) > head(1e-2, 0.1));
    let t = table(400, &[1.0], &[0.0, 0.0, 1.0]);
    let s = RecordSampler::new(&t).with_noise_scale(1e-3);
    let n = 20_000;
    let inside = (0..n)
        .filter(|&r| s.sample(1, RngSeed::new(72, r)).unwrap().location(0).x() < 0.1)
        .count() as f64
        / n as f64;
    let p = head(1e-3, 0.1);
    assert!((inside - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{inside} vs {p}");
    assert!((printed_rho_delta_mass(10.0) - 1.0).abs() > 0.1);
}

#[test]
fn rho_delta_matches_scaled_records() {
    let t = table(400, &[1.0], &[0.0, 0.0, 1.0]);
    let s = RecordSampler::new(&t);
    let xs: Vec<f64> = (0..100_000).map(|r| s.sample(1, RngSeed::new(71, r)).unwrap().location(0).x()).collect();
    let m = marginal_argmin_density(&t).unwrap();
    let rep = histogram_vs_density(&xs, &m, 20).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn joint_k2_marginalizes_to_marginal() {
    let t = table(20, &[1.0, 1.0], &[0.1, -0.5, 1.2]);
    let joint = joint_density_grid(&t, 2).unwrap();
    let from_joint = joint.first_marginal();
    let direct = marginal_argmin_density(&t).unwrap();
    for (a, b) in from_joint.values().iter().zip(direct.values()) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn joint_k3_quadrature_agrees_with_monte_carlo() {
    let t = table(50, &[1.0, 1.0], &[0.0, -0.2, 1.0]);
    let pts = [Point::new1(0.15), Point::new1(0.8), Point::new1(0.4)];
    let quad = joint_density_k(&t, &pts).unwrap();
    let (mc, se) = joint_density_k_mc(&t, &pts, 200_000, RngSeed::new(81, 0)).unwrap();
    assert!(se < 0.01 * quad, "se {se} quad {quad}");
    assert!((mc - quad).abs() < 4.0 * se, "mc {mc} ± {se} vs {quad}");
    let pair = [pts[0], pts[1]];
    let quad2 = joint_density_k(&t, &pair).unwrap();
    let (mc2, se2) = joint_density_k_mc(&t, &pair, 200_000, RngSeed::new(82, 0)).unwrap();
    assert!((mc2 - quad2).abs() < 4.0 * se2, "mc {mc2} ± {se2} vs {quad2}");
}

#[test]
fn joint_k4_flat_offset_is_one() {
    let t = table(10, &[1.0], &[0.0]);
    let pts = [Point::new1(0.1), Point::new1(0.3), Point::new1(0.6), Point::new1(0.9)];
    let (est, se) = joint_density_k_mc(&t, &pts, 200_000, RngSeed::new(83, 0)).unwrap();
    assert!(se < 0.01);
    assert!((est - 1.0).abs() < 4.0 * se, "{est} ± {se}");
}

#[test]
fn second_argmin_given_first_value_follows_shifted_offset() {
    let t = table(200, &[1.0], &[0.0, 0.0, 1.0]);
    let s = RecordSampler::new(&t);
    let (r, dr) = (0.4, 0.05);
    let mut xs = Vec::new();
    for i in 0..600_000u64 {
        let rec = s.sample(2, RngSeed::new(91, i)).unwrap();
        if rec.value(0) >= r && rec.value(0) < r + dr {
            xs.push(rec.location(1).x());
        }
    }
    assert!(xs.len() > 10_000, "{} conditioned samples", xs.len());
    let shifted = ShiftedOffset::new(&t, r + 0.5 * dr).to_table();
    let m = marginal_argmin_density(&shifted).unwrap();
    let rep = histogram_vs_density(&xs, &m, 20).unwrap();
    assert!(rep.statistic <= 0.08, "{rep:?}");
}
