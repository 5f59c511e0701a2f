//! The four subcommands. Each returns whether everything it checked passed;
//! errors are configuration or mode problems.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use extremal_core::density::{printed_rho_delta_mass, DensityGrid};
use extremal_core::verify::histogram_vs_cdf;
use extremal_core::{
    build_measure_table, extract_k_argmins, marginal_argmin_density, min_value_density, BoxDomain, ConstructionA,
    KArgminRecord, MeasureTable, Point, RecordSampler, RngSeed, SampleFunction, ScalarField, TestReport,
};
use extremal_core::sampler::DiscreteProcess;

use crate::config::{DensityMode, Process, ScenarioConfig};
use crate::output::{fmt_f64, step_points, svg_plot, write_atomic, write_reports_jsonl, write_summary_csv, Csv, Series, PALETTE};
use crate::par;
use crate::suites::{rho, rho_cdf, run_suite, SuiteParams};

/// Settings shared by every subcommand after flag/env/config resolution.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub printed_term: bool,
}

pub const OUT_DIR_ENV: &str = "EXTREMAL_OUT_DIR";

impl RunContext {
    /// `--seed` over the config; `--out` over `EXTREMAL_OUT_DIR` over the
    /// config over `./out`.
    pub fn resolve(cfg: &ScenarioConfig, seed: Option<u64>, out: Option<PathBuf>, printed_term: bool) -> Self {
        let out_dir = out
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        RunContext {
            seed: seed.unwrap_or(cfg.seed),
            out_dir,
            printed_term,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn meta(&self, command: &str, cfg: &ScenarioConfig) -> Vec<(&'static str, String)> {
        vec![
            ("command", command.to_string()),
            ("seed", self.seed.to_string()),
            ("replicates", cfg.replicates.to_string()),
            ("n", cfg.n.to_string()),
            ("k", cfg.k.to_string()),
            ("domain", format!("{:?} x {:?}, {} cells per axis", cfg.domain.lower, cfg.domain.upper, cfg.domain.cells)),
        ]
    }
}

fn coord_names(prefix: &str, dim: usize) -> Vec<String> {
    match dim {
        1 => vec![format!("{prefix}x")],
        _ => vec![format!("{prefix}x"), format!("{prefix}y")],
    }
}

fn push_point(row: &mut Vec<String>, p: Point, dim: usize) {
    row.extend(p.coords(dim).iter().map(|c| fmt_f64(*c)));
}

enum Sampler {
    Records(RecordSampler),
    A(ConstructionA),
    Fn(DiscreteProcess),
}

impl Sampler {
    fn first_k(&self, k: usize, seed: RngSeed) -> Result<KArgminRecord> {
        Ok(match self {
            Sampler::Records(s) => s.sample(k, seed)?,
            Sampler::A(a) => a.first_k(k, seed)?,
            Sampler::Fn(f) => f.first_k(k, seed)?,
        })
    }

    fn full(&self, seed: RngSeed) -> Option<SampleFunction> {
        match self {
            Sampler::Records(_) => None,
            Sampler::A(a) => Some(a.sample(seed)),
            Sampler::Fn(f) => Some(f.sample(seed)),
        }
    }
}

fn table_of(cfg: &ScenarioConfig, domain: &BoxDomain) -> Result<MeasureTable> {
    Ok(build_measure_table(domain, &cfg.lambda()?, &cfg.g()?)?)
}

/// Draw `replicates` realizations and write their first `k` argmins.
///
/// `samples.csv` has one row per (replicate, rank). With `sample.full` the
/// realizations themselves go to `realizations.csv`; those are computed from
/// the same streams, so argmins extracted from them agree with `samples.csv`.
pub fn cmd_sample(cfg: &ScenarioConfig, ctx: &RunContext) -> Result<bool> {
    let domain = cfg.build_domain()?;
    let dim = domain.dim();
    let sampler = match cfg.sample.process {
        Process::Records => Sampler::Records(RecordSampler::new(&table_of(cfg, &domain)?)),
        Process::ConstructionA => Sampler::A(ConstructionA::new(&table_of(cfg, &domain)?, cfg.n)?),
        Process::Fn => Sampler::Fn(DiscreteProcess::new(
            &domain,
            &cfg.lambda()?,
            &cfg.rho()?,
            &cfg.g()?,
            cfg.n,
            cfg.noise_spec()?,
        )?),
    };
    if cfg.sample.full && matches!(sampler, Sampler::Records(_)) {
        bail!("sample.full needs process = \"construction-a\" or \"fn\"");
    }
    let seed = |r| RngSeed::new(ctx.seed, r);
    let full = cfg.sample.full;
    let draws = par::try_replicates(cfg.replicates, |r| -> Result<(KArgminRecord, Option<SampleFunction>)> {
        if full {
            let f = sampler.full(seed(r)).expect("full realization");
            Ok((extract_k_argmins(&f, cfg.k)?, Some(f)))
        } else {
            Ok((sampler.first_k(cfg.k, seed(r))?, None))
        }
    })?;

    let mut meta = ctx.meta("sample", cfg);
    meta.push((
        "process",
        match cfg.sample.process {
            Process::Records => "records",
            Process::ConstructionA => "construction-a",
            Process::Fn => "fn",
        }
        .into(),
    ));
    meta.push(("columns", "replicate, rank (1 = smallest), value, argmin coordinates; one row per point of M_rank".into()));
    let mut header = vec!["replicate".to_string(), "rank".into(), "value".into()];
    header.extend(coord_names("", dim));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&meta, &header);
    for (r, (rec, _)) in draws.iter().enumerate() {
        for (i, e) in rec.entries.iter().enumerate() {
            for p in &e.argmins {
                let mut row = vec![r.to_string(), (i + 1).to_string(), fmt_f64(e.value)];
                push_point(&mut row, *p, dim);
                csv.row(&row);
            }
        }
    }
    csv.write(&ctx.path("samples.csv"))?;

    if full {
        let mut header = vec!["replicate".to_string()];
        header.extend(coord_names("", dim));
        header.push("value".into());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut csv = Csv::new(&ctx.meta("sample", cfg), &header);
        for (r, (_, f)) in draws.iter().enumerate() {
            let f = f.as_ref().expect("full realization");
            for (p, v) in f.points().iter().zip(f.values()) {
                let mut row = vec![r.to_string()];
                push_point(&mut row, *p, dim);
                row.push(fmt_f64(*v));
                csv.row(&row);
            }
        }
        csv.write(&ctx.path("realizations.csv"))?;
    }
    Ok(true)
}

fn write_grid(path: &Path, grid: &DensityGrid, meta: &[(&str, String)]) -> Result<()> {
    let dim = grid.domain().dim();
    let mut header = Vec::new();
    for j in 0..grid.arity() {
        let prefix = if grid.arity() == 1 { String::new() } else { format!("{}", j + 1) };
        header.extend(coord_names("", dim).into_iter().map(|c| format!("{c}{prefix}")));
    }
    header.push("density".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(meta, &header);
    for (idx, v) in grid.values().iter().enumerate() {
        let mut row: Vec<f64> = grid.cell_center(idx);
        row.push(*v);
        csv.num_row(&row);
    }
    csv.write(path)
}

/// Tabulate the requested density and write it as CSV (plus SVG in 1-D).
pub fn cmd_density(cfg: &ScenarioConfig, ctx: &RunContext) -> Result<bool> {
    let domain = cfg.build_domain()?;
    let table = table_of(cfg, &domain)?;
    let mut meta = ctx.meta("density", cfg);
    meta.push(("lambda_bar", fmt_f64(table.lambda_bar())));
    match cfg.density.kind {
        DensityMode::Marginal => {
            let grid = marginal_argmin_density(&table)?;
            meta.push(("kind", "marginal density of the first argmin".into()));
            meta.push(("total_mass", fmt_f64(grid.total_mass())));
            write_grid(&ctx.path("density_marginal.csv"), &grid, &meta)?;
            if domain.dim() == 1 {
                let pts = (0..grid.len()).map(|i| (grid.cell_center(i)[0], grid.values()[i])).collect();
                let svg = svg_plot(
                    "Argmin density",
                    "x",
                    "density",
                    &[Series { label: "λ(x)Φ(x)".into(), points: pts, color: PALETTE[0], dashed: false }],
                );
                write_atomic(&ctx.path("density_marginal.svg"), svg.as_bytes())?;
            }
        }
        DensityMode::Joint => {
            let k = cfg.k;
            if k == 1 {
                bail!("joint density needs k >= 2; use kind = \"marginal\" for k = 1");
            }
            if k > 3 {
                bail!(
                    "grid output covers k <= 3; for k = {k} evaluate single tuples with \
                     extremal_core::joint_density_k_mc (Monte Carlo)"
                );
            }
            let grid = par::joint_density_grid(&table, k)?;
            meta.push(("kind", format!("joint density of the first {k} argmins")));
            meta.push(("total_mass", fmt_f64(grid.total_mass())));
            write_grid(&ctx.path(&format!("density_joint_k{k}.csv")), &grid, &meta)?;
        }
        DensityMode::MinValue => {
            let d = min_value_density(&table);
            let (lo, hi) = (d.quantile(0.0), d.quantile(0.9999));
            let m = cfg.density.points.max(2);
            meta.push(("kind", "density and CDF of the minimum value".into()));
            let mut csv = Csv::new(&meta, &["t", "density", "cdf"]);
            let mut pts = Vec::with_capacity(m);
            for i in 0..m {
                let t = lo + (hi - lo) * i as f64 / (m - 1) as f64;
                csv.num_row(&[t, d.density(t), d.cdf(t)]);
                pts.push((t, d.density(t)));
            }
            csv.write(&ctx.path("density_min_value.csv"))?;
            let svg = svg_plot(
                "Minimum value density",
                "t",
                "density",
                &[Series { label: "λ̄ H(t) exp(−λ̄ I(t))".into(), points: pts, color: PALETTE[0], dashed: false }],
            );
            write_atomic(&ctx.path("density_min_value.svg"), svg.as_bytes())?;
        }
    }
    Ok(true)
}

/// Run the configured builtin suite; `true` iff every report passes.
pub fn cmd_verify(cfg: &ScenarioConfig, ctx: &RunContext) -> Result<bool> {
    let suite = cfg.verify.suite.ok_or_else(|| anyhow!("[verify] needs `suite`"))?;
    let params = SuiteParams {
        seed: ctx.seed,
        replicates: cfg.replicates,
        n: cfg.n,
        bins: cfg.verify.bins,
        rate_scale: cfg.verify.rate_scale,
        printed_term: ctx.printed_term,
    };
    let reports = run_suite(suite, &params)?;
    write_reports_jsonl(&ctx.path("reports.jsonl"), &reports)?;
    write_summary_csv(&ctx.path("summary.csv"), suite.name(), ctx.seed, &reports)?;
    for r in &reports {
        eprintln!(
            "{} {:<32} {:<40} {:.4e} (threshold {:.4e})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.scenario,
            r.statistic,
            r.threshold
        );
    }
    Ok(reports.iter().all(|r| r.pass))
}

/// Curves of `ρ_δ` with record-sampler histograms for each `δ`, the
/// normalization of both final-term variants, and a figure.
pub fn cmd_example_sec4(cfg: &ScenarioConfig, ctx: &RunContext) -> Result<bool> {
    let opts = &cfg.sec4;
    let g = ScalarField::poly(&[0.0, 0.0, 1.0]);
    let domain = BoxDomain::unit_interval(opts.cells);
    let edges: Vec<f64> = (0..=opts.bins).map(|i| i as f64 / opts.bins as f64).collect();
    let ys: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let mut meta = vec![
        ("command", "example-sec4".to_string()),
        ("seed", ctx.seed.to_string()),
        ("samples_per_delta", opts.samples.to_string()),
        ("cells", opts.cells.to_string()),
    ];
    meta.push(("model", "argmin of delta * W_1 + x^2 on [0, 1]".into()));
    meta.push(("curve", if ctx.printed_term { "as-printed final term exp(-2 delta / 3)" } else { "final term exp(-2 / (3 delta))" }.into()));

    let mut series = Vec::new();
    let mut hist_csv = Csv::new(&meta, &["delta", "bin_lower", "bin_upper", "empirical_density", "curve_mass"]);
    let mut norm_csv = Csv::new(
        &meta,
        &["delta", "corrected_final_term", "printed_final_term", "corrected_mass", "printed_mass", "histogram_tv", "tv_threshold"],
    );
    let mut reports: Vec<TestReport> = Vec::new();
    for (j, &delta) in opts.deltas.iter().enumerate() {
        let table = build_measure_table(&domain, &ScalarField::constant(1.0 / delta), &g)?;
        let s = RecordSampler::new(&table);
        let xs: Vec<f64> = par::try_replicates(opts.samples, |r| {
            s.sample(1, RngSeed::new(ctx.seed, ((j as u64) << 40) | r)).map(|rec| rec.location(0).x())
        })?;
        let cdf = |y: f64| rho_cdf(delta, y, ctx.printed_term);
        let rep = histogram_vs_cdf(&xs, &edges, cdf)?.with_context(&format!("delta = {delta}"), ctx.seed);
        let mut counts = vec![0usize; opts.bins];
        for &x in &xs {
            counts[((x * opts.bins as f64) as usize).min(opts.bins - 1)] += 1;
        }
        let width = 1.0 / opts.bins as f64;
        let heights: Vec<f64> = counts.iter().map(|&c| c as f64 / xs.len() as f64 / width).collect();
        for b in 0..opts.bins {
            hist_csv.num_row(&[delta, edges[b], edges[b + 1], heights[b], cdf(edges[b + 1]) - cdf(edges[b])]);
        }
        norm_csv.num_row(&[
            delta,
            (-2.0 / (3.0 * delta)).exp(),
            (-2.0 * delta / 3.0).exp(),
            rho_cdf(delta, 1.0, false),
            printed_rho_delta_mass(delta),
            rep.statistic,
            rep.threshold,
        ]);
        let color = PALETTE[j % PALETTE.len()];
        series.push(Series {
            label: format!("ρ_δ, δ = {delta}"),
            points: ys.iter().map(|&y| (y, rho(delta, y, ctx.printed_term))).collect(),
            color,
            dashed: false,
        });
        series.push(Series {
            label: format!("histogram, δ = {delta}"),
            points: step_points(&edges, &heights),
            color,
            dashed: true,
        });
        reports.push(rep);
    }
    let mut header = vec!["y".to_string()];
    for d in &opts.deltas {
        header.push(format!("rho_corrected_delta_{d}"));
        header.push(format!("rho_printed_delta_{d}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut curves = Csv::new(&meta, &header);
    for &y in &ys {
        let mut row = vec![y];
        for &d in &opts.deltas {
            row.push(rho(d, y, false));
            row.push(rho(d, y, true));
        }
        curves.num_row(&row);
    }
    curves.write(&ctx.path("sec4_curves.csv"))?;
    hist_csv.write(&ctx.path("sec4_histograms.csv"))?;
    norm_csv.write(&ctx.path("sec4_normalization.csv"))?;
    let svg = svg_plot("Distribution of minimizers of x² + δW", "y", "density", &series);
    write_atomic(&ctx.path("sec4.svg"), svg.as_bytes())?;
    write_reports_jsonl(&ctx.path("sec4_reports.jsonl"), &reports)?;
    Ok(true)
}
