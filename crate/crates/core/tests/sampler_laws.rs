use extremal_core::sampler::{DiscreteProcess, NoiseSpec};
use extremal_core::{
    build_measure_table, extract_k_argmins, ks_exponential, ks_two_sample, sample_fn, AxisBox, BoxDomain, ConstructionA,
    RecordSampler, RngSeed, ScalarField,
};
use rand::Rng;

const REPS: u64 = 10_000;

fn unit(cells: usize) -> BoxDomain {
    BoxDomain::unit_interval(cells)
}

fn constant(c: f64) -> ScalarField {
    ScalarField::constant(c)
}

#[test]
fn fn_minimum_is_exponential() {
    let p = DiscreteProcess::new(&unit(50), &constant(1.0), &constant(1.0), &constant(0.0), 100_000, NoiseSpec::Exponential)
        .unwrap();
    let base = RngSeed::new(11, 0);
    let mins: Vec<f64> = (0..REPS).map(|r| p.first_k(1, base.replicate(r)).unwrap().value(0)).collect();
    let rep = ks_exponential(&mins, 1.0).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn fn_rate_two_halves_the_mean() {
    let p = DiscreteProcess::new(&unit(50), &constant(2.0), &constant(1.0), &constant(0.0), 100_000, NoiseSpec::Exponential)
        .unwrap();
    let base = RngSeed::new(12, 0);
    let mean = (0..REPS).map(|r| p.first_k(1, base.replicate(r)).unwrap().value(0)).sum::<f64>() / REPS as f64;
    assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
}

#[test]
fn fn_single_point_value_is_noise() {
    let f = sample_fn(&unit(10), &constant(1.0), &constant(1.0), &constant(0.0), 1, NoiseSpec::Uniform, RngSeed::new(3, 3))
        .unwrap();
    assert_eq!(f.len(), 1);
    assert!(f.values()[0] > 0.0 && f.values()[0] < 1.0);
}

#[test]
fn lazy_fn_matches_full_realization() {
    let d = unit(20);
    let g = ScalarField::poly(&[0.0, 0.0, 1.0]);
    let p = DiscreteProcess::new(&d, &ScalarField::poly(&[1.0, 1.0]), &constant(1.0), &g, 2000, NoiseSpec::Uniform).unwrap();
    let base = RngSeed::new(4, 0);
    let full: Vec<f64> = (0..2000)
        .map(|r| extract_k_argmins(&p.sample(base.replicate(r)), 1).unwrap().value(0))
        .collect();
    let lazy: Vec<f64> = (0..2000)
        .map(|r| p.first_k(1, base.replicate(r + 10_000)).unwrap().value(0))
        .collect();
    assert!(ks_two_sample(&full, &lazy).unwrap().pass);
}

#[test]
fn construction_a_box_minimum_rates() {
    let table = build_measure_table(&unit(100), &constant(1.0), &constant(0.0)).unwrap();
    let a = ConstructionA::new(&table, 100_000).unwrap();
    let boxes = [AxisBox::interval(0.0, 1.0), AxisBox::interval(0.0, 0.5)];
    let base = RngSeed::new(21, 0);
    let mins: Vec<Vec<f64>> = (0..REPS).map(|r| a.box_mins(&boxes, base.replicate(r))).collect();
    for (j, rate) in [1.0, 0.5].into_iter().enumerate() {
        let col: Vec<f64> = mins.iter().map(|m| m[j]).collect();
        assert!(ks_exponential(&col, rate).unwrap().pass, "box {j}");
    }
}

#[test]
fn construction_a_constant_offset_shifts() {
    let table = build_measure_table(&unit(10), &constant(1.0), &constant(10.0)).unwrap();
    let a = ConstructionA::new(&table, 100_000).unwrap();
    let base = RngSeed::new(22, 0);
    let shifted: Vec<f64> = (0..REPS).map(|r| a.first_k(1, base.replicate(r)).unwrap().value(0) - 10.0).collect();
    assert!(ks_exponential(&shifted, 1.0).unwrap().pass);
}

/// Oracle: partial sums of i.i.d. Exp(1) draws.
fn erlang_draws(shape: usize, count: u64, seed: u64) -> Vec<f64> {
    let mut rng = RngSeed::new(seed, 99).rng();
    (0..count)
        .map(|_| (0..shape).map(|_| -(1.0 - rng.random::<f64>()).ln()).sum())
        .collect()
}

#[test]
fn record_values_are_erlang() {
    let table = build_measure_table(&unit(100), &constant(1.0), &constant(0.0)).unwrap();
    let s = RecordSampler::new(&table);
    let base = RngSeed::new(31, 0);
    let recs: Vec<_> = (0..REPS).map(|r| s.sample(3, base.replicate(r)).unwrap()).collect();
    for j in 0..3 {
        let vals: Vec<f64> = recs.iter().map(|rec| rec.value(j)).collect();
        let oracle = erlang_draws(j + 1, REPS, 500 + j as u64);
        let rep = ks_two_sample(&vals, &oracle).unwrap();
        assert!(rep.pass, "order {}: {rep:?}", j + 1);
    }
    let first: Vec<f64> = recs.iter().map(|rec| rec.value(0)).collect();
    assert!(ks_exponential(&first, 1.0).unwrap().pass);
}

#[test]
fn construction_a_agrees_with_records() {
    let d = unit(50);
    let table = build_measure_table(&d, &ScalarField::poly(&[0.5, 1.0]), &ScalarField::poly(&[0.0, -0.3, 1.0])).unwrap();
    let a = ConstructionA::new(&table, 100_000).unwrap();
    let s = RecordSampler::new(&table);
    let n = 10_000;
    let ra: Vec<_> = (0..n).map(|r| a.first_k(1, RngSeed::new(41, r)).unwrap()).collect();
    let rb: Vec<_> = (0..n).map(|r| s.sample(1, RngSeed::new(42, r)).unwrap()).collect();
    let xa: Vec<f64> = ra.iter().map(|r| r.location(0).x()).collect();
    let xb: Vec<f64> = rb.iter().map(|r| r.location(0).x()).collect();
    let va: Vec<f64> = ra.iter().map(|r| r.value(0)).collect();
    let vb: Vec<f64> = rb.iter().map(|r| r.value(0)).collect();
    assert!(ks_two_sample(&xa, &xb).unwrap().pass);
    assert!(ks_two_sample(&va, &vb).unwrap().pass);
}

#[test]
fn scaling_by_delta_matches_rate_over_delta() {
    let d = unit(40);
    let g = ScalarField::poly(&[0.0, 0.0, 1.0]);
    let delta = 0.3;
    let base = build_measure_table(&d, &constant(1.0), &g).unwrap();
    let scaled = RecordSampler::new(&base).with_noise_scale(delta);
    let direct = RecordSampler::new(&build_measure_table(&d, &constant(1.0 / delta), &g).unwrap());
    let n = 10_000;
    let a: Vec<f64> = (0..n).map(|r| scaled.sample(1, RngSeed::new(51, r)).unwrap().value(0)).collect();
    let b: Vec<f64> = (0..n).map(|r| direct.sample(1, RngSeed::new(52, r)).unwrap().value(0)).collect();
    assert!(ks_two_sample(&a, &b).unwrap().pass);

    // g ≡ 0: δ·W_1 agrees with W_{1/δ} directly on the values
    let flat = build_measure_table(&d, &constant(1.0), &constant(0.0)).unwrap();
    let a = ConstructionA::new(&flat, 50_000).unwrap();
    let b = ConstructionA::new(&build_measure_table(&d, &constant(1.0 / delta), &constant(0.0)).unwrap(), 50_000).unwrap();
    let x: Vec<f64> = (0..n).map(|r| delta * a.first_k(1, RngSeed::new(53, r)).unwrap().value(0)).collect();
    let y: Vec<f64> = (0..n).map(|r| b.first_k(1, RngSeed::new(54, r)).unwrap().value(0)).collect();
    assert!(ks_two_sample(&x, &y).unwrap().pass);
}

#[test]
fn continuous_noise_has_no_ties() {
    let table = build_measure_table(&unit(100), &constant(1.0), &ScalarField::poly(&[0.0, 1.0])).unwrap();
    let a = ConstructionA::new(&table, 100_000).unwrap();
    for r in 0..10 {
        let rec = extract_k_argmins(&a.sample(RngSeed::new(61, r)), 5).unwrap();
        assert!(rec.entries.iter().all(|e| e.argmins.len() == 1));
    }
}

#[test]
fn same_seed_same_function() {
    let table = build_measure_table(&unit(30), &constant(2.0), &ScalarField::poly(&[0.1, 0.2])).unwrap();
    let a = ConstructionA::new(&table, 1000).unwrap();
    assert_eq!(a.sample(RngSeed::new(1, 2)), a.sample(RngSeed::new(1, 2)));
    assert_ne!(a.sample(RngSeed::new(1, 2)), a.sample(RngSeed::new(1, 3)));
}
