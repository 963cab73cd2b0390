use rds_circle::circle::Point;
use rds_circle::classifier::classify_topological;
use rds_circle::conjugacy::{build_conjugacy, conjugation_residual, residual_trend, ConjugacyReport, Target};
use rds_circle::dynamics::{forward_orbit, NoiseWindow};
use rds_circle::family::Family;
use rds_circle::structure::{estimate_minimal_structure, estimate_stationary_histogram};
use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::export::{self, Cell, Csv};
use crate::CliError;

pub fn version() -> String {
    format!("rds-circle {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    version: String,
    config: &'a RunConfig,
    #[serde(flatten)]
    result: R,
}

fn write_json<R: Serialize>(out: &Path, name: &str, cfg: &RunConfig, result: R) -> Result<PathBuf, CliError> {
    let text = export::to_json(&Envelope {
        version: version(),
        config: cfg,
        result,
    })?;
    let path = out.join(name);
    export::write(&path, &text)?;
    Ok(path)
}

fn family(cfg: &RunConfig, i: usize) -> Result<Family<f64>, CliError> {
    Ok(Family::from_spec(cfg.family(i)?, None)?)
}

/// Forward orbit of `x0` on the window seeded by the master seed.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let fam = family(cfg, 0)?;
    let len = cfg.simulate.length.max(1);
    let w = NoiseWindow::generate(fam.noise(), cfg.master_seed, 0, len);
    let orbit = forward_orbit(&fam, &w, 0, Point::from_f64(cfg.simulate.x0), len - 1)?;
    let mut csv = Csv::new(&["n", "x"]);
    for (n, x) in orbit.iter().enumerate() {
        csv.row(&[Cell::Int(n as i64), Cell::Float(x.value())]);
    }
    export::write(&out.join("orbit.csv"), csv.as_str())?;
    Ok(format!("wrote {len} orbit points"))
}

#[derive(Serialize)]
struct StructureResult<'a> {
    structure: &'a rds_circle::MinimalStructure,
}

/// Minimal-set structure plus the stationary histogram it was read from.
pub fn structure(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let fam = family(cfg, 0)?;
    let s = estimate_minimal_structure(&fam, &cfg.mc)?;
    let counts = estimate_stationary_histogram(
        &fam,
        cfg.mc.seed,
        cfg.mc.n_burn,
        cfg.mc.n_samples,
        cfg.mc.n_bins,
        cfg.mc.n_chains,
    )?;
    let total: u64 = counts.iter().sum();
    let nb = counts.len() as f64;
    let mut csv = Csv::new(&["bin", "left", "count", "density"]);
    for (i, c) in counts.iter().enumerate() {
        csv.row(&[
            Cell::Int(i as i64),
            Cell::Float(i as f64 / nb),
            Cell::Int(*c as i64),
            Cell::Float(*c as f64 * nb / total.max(1) as f64),
        ]);
    }
    export::write(&out.join("histogram.csv"), csv.as_str())?;
    write_json(out, "structure.json", cfg, StructureResult { structure: &s })?;
    Ok(format!(
        "k = {}, l = {}, whole_circle = {}, symmetry_order = {}, case = {:?}",
        s.k, s.l, s.whole_circle, s.symmetry_order, s.antonov_case
    ))
}

#[derive(Serialize)]
struct ConjugacyResult<'a> {
    report: &'a ConjugacyReport,
}

/// Conjugacy of the first family to its canonical target, with node export.
pub fn conjugacy(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let fam = family(cfg, 0)?;
    let s = estimate_minimal_structure(&fam, &cfg.mc)?;
    let w = NoiseWindow::symmetric(fam.noise(), cfg.master_seed, cfg.half_width);
    let params = &cfg.conjugacy.params;
    let c = build_conjugacy(&fam, &s, &w, params)?;
    let residual = conjugation_residual(
        &fam,
        Target::Canonical { k: c.k, l: c.l },
        &w,
        &c.h0,
        &c.h1,
        cfg.conjugacy.grid,
    )?;
    let trend = residual_trend(&fam, &s, cfg.master_seed, &cfg.conjugacy.trend, params, cfg.conjugacy.grid)?;
    let report = ConjugacyReport {
        target: (c.k, c.l),
        seed: cfg.master_seed,
        half_width: cfg.half_width,
        node_count: c.h0.len(),
        residual_sup: residual,
        trend,
    };
    let (xs, ys) = c.h0.lifted_nodes();
    let mut csv = Csv::new(&["x", "y"]);
    for (x, y) in xs.iter().zip(ys) {
        csv.row(&[Cell::Float(*x), Cell::Float(*y)]);
    }
    export::write(&out.join("nodes.csv"), csv.as_str())?;
    write_json(out, "conjugacy.json", cfg, ConjugacyResult { report: &report })?;
    Ok(format!(
        "target g_({},{}), {} nodes, residual {:.3e}",
        c.k,
        c.l,
        report.node_count,
        residual
    ))
}

#[derive(Serialize)]
struct ClassifyResult<'a> {
    verdict: &'a rds_circle::Verdict,
}

/// Orientational and topological verdicts for the first two families.
pub fn classify(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let f = family(cfg, 0)?;
    let g = family(cfg, 1)?;
    let v = classify_topological(&f, &g, &cfg.classifier)?;
    write_json(out, "verdict.json", cfg, ClassifyResult { verdict: &v })?;
    let summary = v.summary();
    export::write(&out.join("verdict.txt"), &format!("{summary}\n"))?;
    Ok(summary)
}
