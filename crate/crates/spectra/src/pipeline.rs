//! Experiment pipelines behind the CLI modes: classification tables,
//! comparison spectra, full-operator spectra, eigenvalue predictions with
//! oracle comparison, and the Monte Carlo measure estimate.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Result};
use serde::Serialize;

use spectra_core::asymptotics::{ChiIndex, ExpansionContext, PathOptions};
use spectra_core::classify::{classify_with, estimate_measure_ratio, DomainClass, WitnessScanner};
use spectra_core::geometry::BoxGeometry;
use spectra_core::lattice::{build_lattice_representatives, Direction, LatticeVector};
use spectra_core::params::AsymptoticParams;
use spectra_core::potential::{CouplingTable, MatrixFourierPotential};
use spectra_core::refsolver::{
    comparison_vector, containment_cutoff, eigen_full, match_eigenvalue, FullSpectrum,
    OverlapEngine, ProductBasis,
};
use spectra_core::sturm1d::{self, EigenpairSet};
use spectra_core::CoreError;

use crate::config::{PotentialSource, RunConfig};
use crate::potfile;
use crate::report::{
    convergence_study, fmt_f64, loglog_fit, median, ArtifactSink, Csv, StudyOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Classify,
    Solve1d,
    SolveFull,
    Predict,
    Compare,
    Measure,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Classify => "classify",
            Mode::Solve1d => "solve1d",
            Mode::SolveFull => "solvefull",
            Mode::Predict => "predict",
            Mode::Compare => "compare",
            Mode::Measure => "measure",
        }
    }
}

/// Row-level outcome counts; the CLI maps them to exit codes.
#[derive(Debug, Default, Clone)]
pub struct Outcome {
    pub guard_violations: usize,
    pub no_match: usize,
    pub flags: Vec<String>,
}

pub fn run(mode: Mode, cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let (potential, geometry) = load_potential(cfg)?;
    let mut sink = ArtifactSink::new(out_dir)?;
    // materialize the potential actually used so every run is reproducible
    {
        let mut s = serde_json::to_string_pretty(&potfile::to_file(&potential))?;
        s.push('\n');
        sink.write("potential.json", &s)?;
    }
    let mut outcome = Outcome::default();
    match mode {
        Mode::Classify => run_classify(cfg, &geometry, &mut sink)?,
        Mode::Solve1d => run_solve1d(cfg, &potential, &geometry, &mut sink)?,
        Mode::SolveFull => run_solvefull(cfg, &potential, &geometry, &mut sink)?,
        Mode::Measure => run_measure(cfg, &geometry, &mut sink)?,
        Mode::Predict => run_predict(cfg, &potential, &geometry, &mut sink, false, &mut outcome)?,
        Mode::Compare => run_predict(cfg, &potential, &geometry, &mut sink, true, &mut outcome)?,
    }
    sink.finish(mode.name(), cfg, false, &outcome.flags)?;
    Ok(outcome)
}

pub fn load_potential(cfg: &RunConfig) -> Result<(MatrixFourierPotential, BoxGeometry)> {
    match &cfg.potential {
        PotentialSource::File { path } => {
            let p = potfile::load(path)?;
            if p.l() != cfg.params.l {
                bail!(
                    "potential file has decay order l = {}, config expects {}",
                    p.l(),
                    cfg.params.l
                );
            }
            let geometry = p.geometry().clone();
            Ok((p, geometry))
        }
        PotentialSource::Generate(g) => {
            let geometry = BoxGeometry::new(cfg.geometry.clone()).map_err(|e| anyhow!("{e}"))?;
            if g.l != cfg.params.l {
                bail!(
                    "generator decay order l = {} differs from params.l = {}",
                    g.l,
                    cfg.params.l
                );
            }
            let p = MatrixFourierPotential::generate_random(
                geometry.clone(),
                g.seed,
                g.m,
                g.l,
                g.amplitude,
                g.support_radius,
            )
            .map_err(|e| anyhow!("{e}"))?;
            Ok((p, geometry))
        }
    }
}

pub fn params_for(cfg: &RunConfig, rho: f64, dim: usize) -> Result<AsymptoticParams> {
    AsymptoticParams::new(rho, cfg.params.alpha, cfg.params.l, dim)
        .and_then(|p| p.with_shell(cfg.params.shell[0], cfg.params.shell[1]))
        .map_err(|e| anyhow!("{e}"))
}

fn rho_tag(rho: f64) -> String {
    if rho == rho.trunc() && rho.abs() < 1e9 {
        format!("{}", rho as i64)
    } else {
        format!("{rho}").replace('.', "p")
    }
}

fn index_str(idx: &[i64]) -> String {
    let inner: Vec<String> = idx.iter().map(|n| n.to_string()).collect();
    format!("({})", inner.join(" "))
}

struct ClassifiedShell {
    rows: Vec<(LatticeVector, f64, spectra_core::classify::Classification)>,
    singles: Vec<(LatticeVector, Direction, i64, LatticeVector)>,
}

fn classify_shell(
    cfg: &RunConfig,
    rho: f64,
    geometry: &BoxGeometry,
    params: &AsymptoticParams,
) -> Result<ClassifiedShell> {
    let scan = cfg.scan_for(rho);
    let scanner = WitnessScanner::new(geometry, params).map_err(|e| anyhow!("{e}"))?;
    let mut rows = Vec::new();
    let mut singles = Vec::new();
    for gamma in
        build_lattice_representatives(geometry, scan[1] * rho).map_err(|e| anyhow!("{e}"))?
    {
        let norm = gamma.norm(geometry);
        if !(scan[0] * rho < norm && norm < scan[1] * rho) {
            continue;
        }
        let c = classify_with(&gamma, params, geometry, &scanner)
            .map_err(|e| anyhow!("classify({:?}, rho={rho}): {e}", gamma.index()))?;
        if let DomainClass::SingleResonance { direction, j, beta } = &c.class {
            singles.push((gamma.clone(), *direction, *j, beta.clone()));
        }
        rows.push((gamma, norm * norm, c));
    }
    Ok(ClassifiedShell { rows, singles })
}

fn run_classify(cfg: &RunConfig, geometry: &BoxGeometry, sink: &mut ArtifactSink) -> Result<()> {
    for &rho in &cfg.params.rho_grid {
        let params = params_for(cfg, rho, geometry.dim())?;
        let shell = classify_shell(cfg, rho, geometry, &params)?;
        let mut csv = Csv::new(&[
            "index",
            "gamma_sq",
            "tag",
            "delta",
            "j",
            "beta_index",
            "witness_count",
        ]);
        for (gamma, gamma_sq, c) in &shell.rows {
            let (tag, delta, j, beta) = match &c.class {
                DomainClass::NonResonance => (
                    "non_resonance".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                ),
                DomainClass::SingleResonance { direction, j, beta } => (
                    "single_resonance".to_string(),
                    format!("e{}", direction.axis() + 1),
                    j.to_string(),
                    index_str(beta.index()),
                ),
                DomainClass::HigherResonance { order } => (
                    format!("higher_resonance_{order}"),
                    String::new(),
                    String::new(),
                    String::new(),
                ),
            };
            csv.row(&[
                index_str(gamma.index()),
                fmt_f64(*gamma_sq),
                tag,
                delta,
                j,
                beta,
                c.witnesses.len().to_string(),
            ]);
        }
        sink.write(
            &format!("classification_rho{}.csv", rho_tag(rho)),
            &csv.into_string(),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Spectrum1dOut {
    delta_axis: usize,
    n_trunc: usize,
    m: usize,
    sup_p: f64,
    pairs: Vec<Pair1dOut>,
}

#[derive(Serialize)]
struct Pair1dOut {
    j: usize,
    slot: usize,
    lambda: f64,
    residual: f64,
    /// Sparse coefficients as `[n, i, value]` triples.
    coeffs: Vec<(usize, usize, f64)>,
}

fn spectrum1d_json(set: &EigenpairSet) -> Spectrum1dOut {
    Spectrum1dOut {
        delta_axis: set.delta.axis(),
        n_trunc: set.n_trunc,
        m: set.m,
        sup_p: set.sup_p,
        pairs: set
            .pairs
            .iter()
            .map(|p| Pair1dOut {
                j: p.band,
                slot: p.slot,
                lambda: p.lambda,
                residual: p.residual,
                coeffs: (0..=set.n_trunc)
                    .flat_map(|n| (0..set.m).map(move |i| (n, i)))
                    .filter_map(|(n, i)| {
                        let v = p.coeff(n, i, set.m);
                        (v.abs() > 1e-14).then_some((n, i, v))
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn run_solve1d(
    cfg: &RunConfig,
    potential: &MatrixFourierPotential,
    geometry: &BoxGeometry,
    sink: &mut ArtifactSink,
) -> Result<()> {
    let delta =
        Direction::new(cfg.params.delta_axis, geometry.dim()).map_err(|e| anyhow!("{e}"))?;
    let p = potential.directional_part(delta);
    let set = sturm1d::solve(&p, cfg.params.n_trunc, cfg.params.tol).map_err(|e| anyhow!("{e}"))?;
    sink.write_json("spectrum1d.json", &spectrum1d_json(&set))?;
    Ok(())
}

fn oracle_for(
    cfg: &RunConfig,
    rho: f64,
    potential: &MatrixFourierPotential,
    geometry: &BoxGeometry,
    params: &AsymptoticParams,
) -> Result<FullSpectrum> {
    let scan = cfg.scan_for(rho);
    let cutoff = containment_cutoff(scan[1] * rho, params, potential.support_radius());
    let basis = ProductBasis::new(geometry.clone(), potential.m(), cutoff, cfg.params.size_cap)
        .map_err(|e| anyhow!("oracle basis at rho={rho}: {e}"))?;
    eigen_full(potential, basis, cfg.params.tol).map_err(|e| anyhow!("oracle at rho={rho}: {e}"))
}

fn run_solvefull(
    cfg: &RunConfig,
    potential: &MatrixFourierPotential,
    geometry: &BoxGeometry,
    sink: &mut ArtifactSink,
) -> Result<()> {
    for &rho in &cfg.params.rho_grid {
        let params = params_for(cfg, rho, geometry.dim())?;
        let full = oracle_for(cfg, rho, potential, geometry, &params)?;
        let mut csv = Csv::new(&["N", "Lambda", "residual"]);
        for n in 0..full.count() {
            csv.row(&[
                n.to_string(),
                fmt_f64(full.lambda(n)),
                fmt_f64(full.residual(n)),
            ]);
        }
        sink.write(
            &format!("spectrum_full_rho{}.csv", rho_tag(rho)),
            &csv.into_string(),
        )?;
    }
    Ok(())
}

fn run_measure(cfg: &RunConfig, geometry: &BoxGeometry, sink: &mut ArtifactSink) -> Result<()> {
    let delta =
        Direction::new(cfg.params.delta_axis, geometry.dim()).map_err(|e| anyhow!("{e}"))?;
    let mut csv = Csv::new(&[
        "rho",
        "ratio",
        "accepted",
        "excluded",
        "standard_error",
        "samples",
        "seed",
    ]);
    for &rho in &cfg.params.rho_grid {
        let params = params_for(cfg, rho, geometry.dim())?;
        let est = estimate_measure_ratio(
            delta,
            &params,
            geometry,
            cfg.params.measure_samples,
            cfg.params.measure_seed,
        )
        .map_err(|e| anyhow!("measure at rho={rho}: {e}"))?;
        csv.row(&[
            fmt_f64(rho),
            fmt_f64(est.ratio),
            est.accepted.to_string(),
            est.excluded.to_string(),
            fmt_f64(est.standard_error),
            cfg.params.measure_samples.to_string(),
            cfg.params.measure_seed.to_string(),
        ]);
    }
    sink.write("measure.csv", &csv.into_string())?;
    Ok(())
}

/// One prediction/comparison row.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub rho: f64,
    pub gamma: Vec<i64>,
    pub gamma_sq: f64,
    pub delta_axis: usize,
    pub j: i64,
    pub beta: Vec<i64>,
    pub slot: usize,
    pub lambda_base: Option<f64>,
    /// `E_0..E_order` (present when the expansion succeeded).
    pub e: Vec<f64>,
    /// `Lambda_pred(s) = lambda_base + E_{s-1}` for `s = 1..=order`.
    pub lambda_pred: Vec<f64>,
    /// `budget_constant * rho^(-s alpha_2)`.
    pub error_budget: Vec<f64>,
    pub min_denominator: Option<f64>,
    pub paths_enumerated: u64,
    pub a_sum: Option<f64>,
    pub matched_n: Option<usize>,
    pub lambda_oracle: Option<f64>,
    pub overlap_c: Option<f64>,
    pub match_gap: Option<f64>,
    pub abs_err: Vec<f64>,
    pub parseval_dev: Option<f64>,
    pub binding_excess: Option<f64>,
    pub error: Option<String>,
}

#[derive(Serialize)]
pub struct RhoSummary {
    pub rho: f64,
    pub scan: [f64; 2],
    pub tested_pairs: usize,
    pub predicted: usize,
    pub guard_violations: usize,
    pub no_match: usize,
    pub improved_first_order: usize,
    pub worsened_rows: usize,
    /// Median of `|Lambda_matched - lambda_base|` over matched rows
    /// (independent of expansion success).
    pub median_match_gap: Option<f64>,
    pub median_abs_err: Vec<Option<f64>>,
    pub max_parseval_dev: f64,
    pub max_binding_excess: f64,
    pub max_a_sum: f64,
    pub min_a_sum: f64,
    pub oracle_size: Option<usize>,
    pub oracle_max_residual: Option<f64>,
}

#[derive(Serialize)]
pub struct CompareSummary {
    pub order: u32,
    pub per_rho: Vec<RhoSummary>,
    /// Log-log fit `(slope, intercept, rms)` of median error vs rho per
    /// order; present only when at least three rho values carry data.
    pub slopes: Vec<Option<(f64, f64, f64)>>,
    /// Convergence-study outcome per order (fit or degenerate note).
    pub study: Vec<Option<StudyOutcome>>,
}

fn run_predict(
    cfg: &RunConfig,
    potential: &MatrixFourierPotential,
    geometry: &BoxGeometry,
    sink: &mut ArtifactSink,
    with_oracle: bool,
    outcome: &mut Outcome,
) -> Result<()> {
    let order = cfg.params.order.max(1);
    let m = potential.m();
    let m_norm = potential.sup_norm_bound();
    let options = PathOptions {
        k_max: cfg.params.k_max,
        band_halfwidth: cfg.params.band_halfwidth,
        prune: cfg.params.prune,
        c18_floor: cfg.params.c18_floor,
    };
    let mut summaries = Vec::new();
    let mut medians_per_order: Vec<Vec<(f64, f64)>> = vec![Vec::new(); order as usize];
    for &rho in &cfg.params.rho_grid {
        let params = params_for(cfg, rho, geometry.dim())?;
        let shell = classify_shell(cfg, rho, geometry, &params)?;
        let full = if with_oracle {
            Some(oracle_for(cfg, rho, potential, geometry, &params)?)
        } else {
            None
        };
        // per-direction 1D spectra and coupling tables
        let mut dirs: Vec<Direction> = shell.singles.iter().map(|s| s.1).collect();
        dirs.sort();
        dirs.dedup();
        let mut sets: BTreeMap<usize, (EigenpairSet, CouplingTable)> = BTreeMap::new();
        for &d in &dirs {
            let p = potential.directional_part(d);
            let set = sturm1d::solve(&p, cfg.params.n_trunc, cfg.params.tol)
                .map_err(|e| anyhow!("1D solve along e{} at rho={rho}: {e}", d.axis() + 1))?;
            let table = potential
                .coupling_table(d, &params)
                .map_err(|e| anyhow!("{e}"))?;
            sets.insert(d.axis(), (set, table));
        }
        let engines: BTreeMap<usize, OverlapEngine> = match &full {
            Some(f) => dirs
                .iter()
                .map(|&d| {
                    OverlapEngine::new(potential, d, f)
                        .map(|e| (d.axis(), e))
                        .map_err(|e| anyhow!("{e}"))
                })
                .collect::<Result<_>>()?,
            None => BTreeMap::new(),
        };

        let mut rows: Vec<CompareRow> = Vec::new();
        // overlap table for every tested pair, kept sparse: records whose
        // coefficient is below 1e-8 carry no Parseval mass worth exporting
        let mut overlap_csv = Csv::new(&["j", "beta", "slot", "N", "Lambda", "gap", "c"]);
        for (gamma, direction, j, beta) in &shell.singles {
            let (set, table) = &sets[&direction.axis()];
            let ctx = ExpansionContext::new(set, table, &params, geometry, options.clone())
                .map_err(|e| anyhow!("{e}"))?;
            let band = j.unsigned_abs() as usize;
            for slot in 0..m {
                let mut row = CompareRow {
                    rho,
                    gamma: gamma.index().to_vec(),
                    gamma_sq: gamma.norm_sq(geometry),
                    delta_axis: direction.axis(),
                    j: *j,
                    beta: beta.index().to_vec(),
                    slot,
                    lambda_base: None,
                    e: Vec::new(),
                    lambda_pred: Vec::new(),
                    error_budget: Vec::new(),
                    min_denominator: None,
                    paths_enumerated: 0,
                    a_sum: None,
                    matched_n: None,
                    lambda_oracle: None,
                    overlap_c: None,
                    match_gap: None,
                    abs_err: Vec::new(),
                    parseval_dev: None,
                    binding_excess: None,
                    error: None,
                };
                let base = ChiIndex::new(band, slot, beta.clone());
                match ctx.expansion(base) {
                    Ok(exp) => {
                        row.lambda_base = Some(exp.lambda_base());
                        if let Ok(a_sum) = exp.a_sum_over_q() {
                            row.a_sum = Some(a_sum);
                        }
                        match exp.e_iterate(order) {
                            Ok(state) => {
                                row.e = state.e.clone();
                                row.min_denominator = Some(state.guards.min_denominator);
                                row.paths_enumerated = state.guards.paths_enumerated;
                                for s in 1..=order {
                                    let (pred, budget) = spectra_core::asymptotics::predict(
                                        &state,
                                        s,
                                        cfg.params.budget_constant,
                                        &params,
                                    )
                                    .map_err(|e| anyhow!("{e}"))?;
                                    row.lambda_pred.push(pred);
                                    row.error_budget.push(budget);
                                }
                            }
                            Err(e @ CoreError::SmallDenominator { .. }) => {
                                outcome.guard_violations += 1;
                                record_row_error(&mut row, outcome, rho, &e);
                            }
                            Err(e) => record_row_error(&mut row, outcome, rho, &e),
                        }
                    }
                    Err(e) => record_row_error(&mut row, outcome, rho, &e),
                }
                if let (Some(f), Some(engine)) = (&full, engines.get(&direction.axis())) {
                    let pair = set.band(band)[slot];
                    let chi =
                        comparison_vector(set, pair, beta, &f.basis).map_err(|e| anyhow!("{e}"))?;
                    let records = engine.overlaps(&chi);
                    for rec in &records {
                        if rec.c.abs() > 1e-8 {
                            overlap_csv.row(&[
                                j.to_string(),
                                index_str(beta.index()),
                                slot.to_string(),
                                rec.n_index.to_string(),
                                fmt_f64(f.lambda(rec.n_index)),
                                fmt_f64(rec.gap),
                                fmt_f64(rec.c),
                            ]);
                        }
                    }
                    let parseval: f64 = records.iter().map(|r| r.c * r.c).sum();
                    row.parseval_dev = Some((parseval - 1.0).abs());
                    row.binding_excess = Some(
                        records
                            .iter()
                            .map(|r| (r.binding_lhs - r.binding_rhs).abs() - r.tail_bound)
                            .fold(f64::NEG_INFINITY, f64::max),
                    );
                    match match_eigenvalue(&records, m_norm, &params, *j, beta) {
                        Ok(res) => {
                            row.matched_n = Some(res.n_index);
                            row.lambda_oracle = Some(f.lambda(res.n_index));
                            row.overlap_c = Some(res.c);
                            row.match_gap = Some(res.gap);
                            for pred in &row.lambda_pred {
                                row.abs_err.push((f.lambda(res.n_index) - pred).abs());
                            }
                        }
                        Err(e @ CoreError::NoMatch { .. }) => {
                            outcome.no_match += 1;
                            record_row_error(&mut row, outcome, rho, &e);
                        }
                        Err(e) => record_row_error(&mut row, outcome, rho, &e),
                    }
                }
                rows.push(row);
            }
        }

        let tested_pairs = rows.len();
        let predicted = rows.iter().filter(|r| !r.e.is_empty()).count();
        let guard_violations = rows
            .iter()
            .filter(|r| matches!(&r.error, Some(e) if e.contains("small denominator")))
            .count();
        let no_match = rows
            .iter()
            .filter(|r| matches!(&r.error, Some(e) if e.contains("no oracle eigenvalue")))
            .count();
        let improved = rows
            .iter()
            .filter(|r| r.abs_err.len() >= 2 && r.abs_err[1] < r.abs_err[0])
            .count();
        let worsened = rows
            .iter()
            .filter(|r| r.abs_err.len() >= 2 && r.abs_err[1] > r.abs_err[0])
            .count();
        let mut med = Vec::new();
        for (s, per_order) in medians_per_order.iter_mut().enumerate() {
            let errs: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.abs_err.get(s).copied())
                .collect();
            let mv = median(&errs);
            if let Some(v) = mv {
                if v > 0.0 {
                    per_order.push((rho, v));
                }
            }
            med.push(mv);
        }
        let gaps: Vec<f64> = rows
            .iter()
            .filter_map(|r| r.match_gap.map(f64::abs))
            .collect();
        let max_parseval = rows
            .iter()
            .filter_map(|r| r.parseval_dev)
            .fold(0.0f64, f64::max);
        let max_binding = rows
            .iter()
            .filter_map(|r| r.binding_excess)
            .fold(f64::NEG_INFINITY, f64::max);
        let a_sums: Vec<f64> = rows.iter().filter_map(|r| r.a_sum).collect();
        summaries.push(RhoSummary {
            rho,
            scan: cfg.scan_for(rho),
            tested_pairs,
            predicted,
            guard_violations,
            no_match,
            improved_first_order: improved,
            worsened_rows: worsened,
            median_match_gap: median(&gaps),
            median_abs_err: med,
            max_parseval_dev: max_parseval,
            max_binding_excess: if max_binding.is_finite() {
                max_binding
            } else {
                0.0
            },
            max_a_sum: a_sums.iter().fold(0.0f64, |a, &b| a.max(b)),
            min_a_sum: a_sums.iter().fold(f64::INFINITY, |a, &b| a.min(b)),
            oracle_size: full.as_ref().map(|f| f.count()),
            oracle_max_residual: full.as_ref().map(|f| f.max_residual()),
        });

        let stem = if with_oracle {
            "compare"
        } else {
            "predictions"
        };
        sink.write(
            &format!("{stem}_rho{}.csv", rho_tag(rho)),
            &rows_csv(&rows, order),
        )?;
        sink.write_json(&format!("{stem}_rho{}.json", rho_tag(rho)), &rows)?;
        if with_oracle {
            sink.write(
                &format!("overlaps_rho{}.csv", rho_tag(rho)),
                &overlap_csv.into_string(),
            )?;
        }
    }
    let slopes = medians_per_order
        .iter()
        .map(|pts| {
            if pts.len() >= 3 {
                loglog_fit(pts)
            } else {
                None
            }
        })
        .collect();
    let study = medians_per_order
        .iter()
        .map(|pts| convergence_study(pts).ok())
        .collect();
    let summary = CompareSummary {
        order,
        per_rho: summaries,
        slopes,
        study,
    };
    sink.write_json("summary.json", &summary)?;
    Ok(())
}

fn record_row_error(row: &mut CompareRow, outcome: &mut Outcome, rho: f64, err: &CoreError) {
    let msg = format!("{err}");
    outcome.flags.push(format!(
        "rho={rho} gamma={:?} slot={}: {msg}",
        row.gamma, row.slot
    ));
    row.error = Some(msg);
}

fn rows_csv(rows: &[CompareRow], order: u32) -> String {
    let mut header = vec![
        "gamma".to_string(),
        "gamma_sq".to_string(),
        "delta".to_string(),
        "j".to_string(),
        "beta".to_string(),
        "slot".to_string(),
        "lambda_base".to_string(),
    ];
    for s in 1..=order {
        header.push(format!("lambda_pred_{s}"));
        header.push(format!("error_budget_{s}"));
    }
    header.extend(
        ["matched_N", "lambda_oracle", "overlap_c", "match_gap"]
            .iter()
            .map(|s| s.to_string()),
    );
    for s in 1..=order {
        header.push(format!("abs_err_{s}"));
    }
    header.extend(
        [
            "a_sum",
            "min_denominator",
            "paths_enumerated",
            "parseval_dev",
            "binding_excess",
            "error",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);
    for r in rows {
        let mut cells = vec![
            index_str(&r.gamma),
            fmt_f64(r.gamma_sq),
            format!("e{}", r.delta_axis + 1),
            r.j.to_string(),
            index_str(&r.beta),
            r.slot.to_string(),
            r.lambda_base.map(fmt_f64).unwrap_or_default(),
        ];
        for s in 0..order as usize {
            cells.push(
                r.lambda_pred
                    .get(s)
                    .map(|&v| fmt_f64(v))
                    .unwrap_or_default(),
            );
            cells.push(
                r.error_budget
                    .get(s)
                    .map(|&v| fmt_f64(v))
                    .unwrap_or_default(),
            );
        }
        cells.push(r.matched_n.map(|n| n.to_string()).unwrap_or_default());
        cells.push(r.lambda_oracle.map(fmt_f64).unwrap_or_default());
        cells.push(r.overlap_c.map(fmt_f64).unwrap_or_default());
        cells.push(r.match_gap.map(fmt_f64).unwrap_or_default());
        for s in 0..order as usize {
            cells.push(r.abs_err.get(s).map(|&v| fmt_f64(v)).unwrap_or_default());
        }
        cells.push(r.a_sum.map(fmt_f64).unwrap_or_default());
        cells.push(r.min_denominator.map(fmt_f64).unwrap_or_default());
        cells.push(r.paths_enumerated.to_string());
        cells.push(r.parseval_dev.map(fmt_f64).unwrap_or_default());
        cells.push(r.binding_excess.map(fmt_f64).unwrap_or_default());
        cells.push(r.error.clone().unwrap_or_default());
        csv.row(&cells);
    }
    csv.into_string()
}
