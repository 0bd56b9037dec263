use rand::Rng;
use rayon::prelude::*;
use sparsedom::{sparse_dominate, verify_sparse, Ratio, VectorFunction};

use super::{domain, operator};
use crate::config::Experiment;
use crate::corpus::{case_rng, random_slots, sample_slots, Profile};
use crate::report::{spread, FamilyRecord, Report, SweepRow};
use crate::Result;

/// Fixed smooth inputs, one profile per slot, all inside `[-0.3, 0.3]`.
pub fn smooth_inputs(arity: usize) -> Vec<Vec<Profile>> {
    let mut slots = vec![vec![Profile::Bump {
        c: 1.0,
        at: 0.0,
        r: 0.3,
    }]];
    for j in 1..arity {
        let shift = 0.05 * j as f64;
        slots.push(vec![Profile::Sum(vec![
            Profile::Bump {
                c: 1.0,
                at: -0.1 + shift,
                r: 0.18,
            },
            Profile::Bump {
                c: -0.5,
                at: 0.12,
                r: 0.15,
            },
        ])]);
    }
    slots
}

/// Constructive sparse domination of `T`.
///
/// Random cases draw `N_seq` uniformly from `1..=nseq`. Each row records
/// `C_emp = max_x ‖{T(f̄^k)(x)}‖ / A_S(‖f_1‖, …)(x)` as `lhs` with `rhs = 1`;
/// the family is checked with `verify_sparse` and for `η = 1/2·3^{-n}`.
/// The fixed smooth inputs run over `smooth_resolutions`.
pub fn run_dominate(e: &Experiment) -> Result<Report> {
    let arity = e.operator.arity();
    let mut report = Report::new(e);
    let mut runs: Vec<(u32, String, Vec<Vec<Profile>>)> = Vec::new();
    for &r in &e.resolutions {
        for c in 0..e.cases {
            let mut rng = case_rng(e.seed, c);
            let n_seq = rng.random_range(1..=e.n_seq);
            runs.push((
                r,
                format!("random-{c}"),
                random_slots(&mut rng, arity, n_seq),
            ));
        }
    }
    for &r in &e.smooth_resolutions {
        runs.push((r, "smooth".into(), smooth_inputs(arity)));
    }
    let results = runs
        .par_iter()
        .map(|(r, label, slots)| {
            let d = domain(*r)?;
            let op = operator(e.operator, d)?;
            let inputs = sample_slots(d, slots);
            let refs: Vec<&VectorFunction> = inputs.iter().collect();
            let res = sparse_dominate(&op, &refs, &e.q)?;
            let eta = Ratio::new(1, 2 * 3u32.pow(d.dim() as u32))?;
            let sparse = verify_sparse(&res.family).is_ok() && res.family.eta() == eta;
            let row = SweepRow::new(
                e.kind,
                *r,
                label.clone(),
                inputs[0].len() as f64,
                res.c_emp,
                1.0,
            );
            Ok((
                row,
                FamilyRecord {
                    resolution: *r,
                    case: label.clone(),
                    c_emp: res.c_emp,
                    sparse,
                    stats: res.stats,
                    family: res.family,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    for (row, family) in results {
        report.rows.push(row);
        report.families.push(family);
    }
    let random: Vec<&FamilyRecord> = report
        .families
        .iter()
        .filter(|f| f.case != "smooth")
        .collect();
    let c_max = random.iter().map(|f| f.c_emp).fold(0.0, f64::max);
    let all_sparse = random.iter().all(|f| f.sparse);
    let child = random
        .iter()
        .map(|f| f.stats.max_child_fraction)
        .fold(0.0, f64::max);
    report.metric("c_emp_max", c_max);
    report.metric("all_sparse", if all_sparse { 1.0 } else { 0.0 });
    report.metric("max_child_fraction", child);
    let smooth: Vec<f64> = report
        .families
        .iter()
        .filter(|f| f.case == "smooth")
        .map(|f| f.c_emp)
        .collect();
    for (&r, &c) in e.smooth_resolutions.iter().zip(&smooth) {
        report.metric(format!("smooth_c_emp[r={r}]"), c);
    }
    if !smooth.is_empty() {
        let sparse = report
            .families
            .iter()
            .filter(|f| f.case == "smooth")
            .all(|f| f.sparse);
        report.metric("smooth_sparse", if sparse { 1.0 } else { 0.0 });
        report.metric("smooth_variation", spread(&smooth));
    }
    Ok(report)
}
