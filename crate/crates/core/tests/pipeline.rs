//! End-to-end run at one energy scale: classify the shell, solve the
//! comparison problem, diagonalise the full operator, match eigenvalues and
//! check that the first correction moves predictions toward the oracle.

use spectra_core::asymptotics::{ChiIndex, ExpansionContext, PathOptions};
use spectra_core::classify::{classify_with, DomainClass, WitnessScanner};
use spectra_core::geometry::BoxGeometry;
use spectra_core::lattice::{build_lattice_representatives, Direction};
use spectra_core::params::AsymptoticParams;
use spectra_core::potential::MatrixFourierPotential;
use spectra_core::refsolver::{
    comparison_vector, containment_cutoff, eigen_full, match_eigenvalue, OverlapEngine,
    ProductBasis,
};
use spectra_core::sturm1d;

const PI: f64 = std::f64::consts::PI;

#[test]
fn first_correction_improves_oracle_agreement() {
    let geom = BoxGeometry::new(vec![PI, PI]).unwrap();
    let rho = 20.0;
    let params = AsymptoticParams::new(rho, 0.04, 17, 2).unwrap();
    let v = MatrixFourierPotential::generate_random(geom.clone(), 7, 2, 17, 2.5e5, 3.0).unwrap();

    // classification over the scan shell [0.5 rho, 1.5 rho]
    let scan_hi = 1.5 * rho;
    let scanner = WitnessScanner::new(&geom, &params).unwrap();
    let mut singles = Vec::new();
    for gamma in build_lattice_representatives(&geom, scan_hi).unwrap() {
        let norm = gamma.norm(&geom);
        if !(0.5 * rho < norm && norm < scan_hi) {
            continue;
        }
        let c = classify_with(&gamma, &params, &geom, &scanner).unwrap();
        if let DomainClass::SingleResonance { direction, j, beta } = c.class {
            singles.push((gamma, direction, j, beta));
        }
    }
    assert!(
        singles.len() >= 4,
        "expected a nonempty single-resonance population, got {}",
        singles.len()
    );

    // one direction at a time (the test shell population is e1-dominated)
    let e1 = Direction::new(0, 2).unwrap();
    let p = v.directional_part(e1);
    let set = sturm1d::solve(&p, 64, 1e-12).unwrap();
    let table = v.coupling_table(e1, &params).unwrap();
    let ctx = ExpansionContext::new(&set, &table, &params, &geom, PathOptions::default()).unwrap();

    let cutoff = containment_cutoff(scan_hi, &params, v.support_radius());
    let basis = ProductBasis::new(geom.clone(), 2, cutoff, 4000).unwrap();
    let full = eigen_full(&v, basis, 1e-12).unwrap();
    let engine = OverlapEngine::new(&v, e1, &full).unwrap();
    let m_norm = v.sup_norm_bound();

    let mut improved = 0usize;
    let mut predicted = 0usize;
    let mut guard_failures = 0usize;
    let mut rows = 0usize;
    let mut max_binding_excess: f64 = 0.0;
    let mut h_checked = 0usize;
    let mut ck_checked = 0usize;
    let p2 = params.p2();
    for (_gamma, direction, j, beta) in &singles {
        if *direction != e1 {
            continue;
        }
        let band = j.unsigned_abs() as usize;
        for slot in 0..2 {
            rows += 1;
            let base = ChiIndex::new(band, slot, beta.clone());
            let pair_entries = set.band(band);
            let chi = comparison_vector(&set, pair_entries[slot], beta, &full.basis).unwrap();
            let records = engine.overlaps(&chi);
            // Parseval within the ball
            let sum_sq: f64 = records.iter().map(|r| r.c * r.c).sum();
            assert!(
                (sum_sq - 1.0).abs() < 1e-6,
                "Parseval failed at (j={j}, beta={:?}, slot={slot}): {sum_sq}",
                beta.index()
            );
            // binding identity within tolerance + computed tail
            for rec in &records {
                let excess = (rec.binding_lhs - rec.binding_rhs).abs() - rec.tail_bound;
                max_binding_excess = max_binding_excess.max(excess);
            }
            let matched = match_eigenvalue(&records, m_norm, &params, *j, beta).unwrap();
            let lambda_oracle = full.lambda(matched.n_index);

            let exp = ctx.expansion(base).unwrap();
            // deep paths can legitimately trip the gap guards at desk scale;
            // those rows are recorded, not fatal
            let state = match exp.e_iterate(2) {
                Ok(s) => s,
                Err(spectra_core::CoreError::SmallDenominator { .. }) => {
                    guard_failures += 1;
                    continue;
                }
                Err(e) => panic!("unexpected error: {e}"),
            };
            assert_eq!(state.e[0], 0.0);
            let pred1 = state.lambda_base; // E_0 = 0
            let pred2 = state.lambda_base + state.e[1];
            let err1 = (lambda_oracle - pred1).abs();
            let err2 = (lambda_oracle - pred2).abs();
            predicted += 1;
            if err2 < err1 {
                improved += 1;
            }

            // auxiliary-vector selection inequality and the residual path
            // sum, checked on the first few matched pairs
            if h_checked < 3 {
                h_checked += 1;
                let psi = full.psi(matched.n_index);
                let mut chi_cache: std::collections::BTreeMap<ChiIndex, f64> =
                    std::collections::BTreeMap::new();
                let mut c_of = |node: &ChiIndex| -> Result<f64, spectra_core::CoreError> {
                    if let Some(&v) = chi_cache.get(node) {
                        return Ok(v);
                    }
                    let node_pair = set.band(node.band)[node.slot];
                    let chi_n = comparison_vector(&set, node_pair, &node.beta, &full.basis)?;
                    let v: f64 = psi.iter().zip(&chi_n.coeffs).map(|(a, b)| a * b).sum();
                    chi_cache.insert(node.clone(), v);
                    Ok(v)
                };
                let hs = exp.h_functions(p2).unwrap();
                assert_eq!(hs.len(), p2 as usize);
                let c_match = matched.c;
                for h in &hs {
                    if h.norm == 0.0 {
                        continue; // degenerate, checks skipped
                    }
                    let mut inner = 0.0;
                    for (node, w) in &h.coeffs {
                        inner += w * c_of(node).unwrap();
                    }
                    let lhs = c_match * c_match;
                    let rhs = (inner / h.norm).powi(2) / (2.0 * p2 as f64);
                    assert!(
                        lhs > rhs,
                        "selection inequality failed for h_{} at (j={j}, beta={:?}): \
                         c^2 = {lhs:e} vs {rhs:e}",
                        h.power,
                        beta.index()
                    );
                }
                // residual path sum: four beta-shifting factors give at
                // least two guarded denominators, so rho^(-2 alpha_2) is
                // the honest desk-scale ceiling
                let ck = exp.c_k_prime(4, state.lambda_base, &mut c_of).unwrap();
                let ceiling = rho.powf(-2.0 * 9.0 * 0.04);
                assert!(
                    ck.abs() <= ceiling,
                    "C_4' = {ck:e} exceeds rho^(-2 alpha_2) = {ceiling:e}"
                );
                ck_checked += 1;
            }
        }
    }
    assert!(
        max_binding_excess <= 1e-6,
        "binding identity residual exceeded tolerance by {max_binding_excess}"
    );
    assert!(predicted >= 6, "too few predicted pairs: {predicted}");
    assert!(
        guard_failures * 4 <= rows,
        "too many guard failures: {guard_failures}/{rows}"
    );
    let frac = improved as f64 / predicted as f64;
    assert!(
        frac >= 0.8,
        "first correction improved only {improved}/{predicted} = {frac:.2}"
    );
    assert_eq!(h_checked, 3);
    assert_eq!(ck_checked, 3);
}
