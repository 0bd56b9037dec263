use rayon::prelude::*;
use sparsedom::{
    eval_sparse, lq_norm, m_tau, multilinear_commutator, sharp_maximal, weak_type_functional,
    CubeCollection, DyadicGrid, GridFunction, OperatorHandle, SparseOperatorSpec, VectorFunction,
};

use super::lemmas::{random_nested_family, DELTA};
use super::{domain, operator};
use crate::config::Experiment;
use crate::corpus::{case_rng, random_log, random_slots, random_step, sample_slots};
use crate::report::{ratio, Report, SweepRow};
use crate::Result;

/// Levels are spread over `[λ_max / LAMBDA_RANGE, λ_max]`.
pub const LAMBDA_RANGE: f64 = 64.0;

/// `n` log-spaced points from `lo` to `hi`. The grid with `2n - 1` points contains this one.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = (hi / lo).ln();
    (0..n)
        .map(|i| lo * (span * (i as f64 / (n - 1) as f64)).exp())
        .collect()
}

/// `max_λ |{‖{T_b̄ f̄^k}‖_{l^q} > λ}| / Π_j (∫ Φ(‖{f_j^k}‖_{l^{q_j}} / λ^{1/m}))^{1/m}`
/// over `lambdas`, with `Φ(t) = t log^{1/s_*}(1 + t)` and `w̄ ≡ 1`.
pub fn thm13_ratio(
    out: &VectorFunction,
    q: f64,
    inputs: &[VectorFunction],
    qs: &[f64],
    s_min: f64,
    lambdas: &[f64],
) -> Result<f64> {
    let d = *out.domain();
    let norms = inputs
        .iter()
        .zip(qs)
        .map(|(f, &q)| lq_norm(f, q))
        .collect::<sparsedom::Result<Vec<_>>>()?;
    Ok(weak_type_functional(
        out,
        q,
        &GridFunction::constant(d, 1.0),
        |lambda| 1.0 / thm13_product(&norms, s_min, lambda),
        lambdas,
    )?)
}

fn thm13_product(norms: &[GridFunction], s_min: f64, lambda: f64) -> f64 {
    let m = norms.len() as f64;
    let scale = lambda.powf(1.0 / m);
    norms
        .iter()
        .map(|g| {
            let h = g.domain().cell_measure();
            let s: f64 = g
                .values()
                .iter()
                .map(|&v| {
                    let t = v / scale;
                    t * t.ln_1p().powf(1.0 / s_min)
                })
                .sum();
            (s * h).powf(1.0 / m)
        })
        .product()
}

/// Weak endpoint bound for `T_b̄` with `w̄ ≡ 1`.
///
/// One row per case and level of the `lambda_points` grid. The metrics compare the
/// corpus maximum on that grid with the maximum on the doubled grid of `2n - 1` points.
pub fn run_thm13(e: &Experiment) -> Result<Report> {
    let arity = e.operator.arity();
    let q = 1.0 / e.q.iter().map(|q| 1.0 / q).sum::<f64>();
    let s_min = e.s.iter().copied().fold(f64::INFINITY, f64::min);
    let mut report = Report::new(e);
    let mut worst_case_change = 0.0f64;
    let (mut coarse_max, mut fine_max) = (0.0f64, 0.0f64);
    for &r in &e.resolutions {
        let d = domain(r)?;
        let op = operator(e.operator, d)?;
        let results = (0..e.cases)
            .into_par_iter()
            .map(|c| {
                let mut rng = case_rng(e.seed, c);
                let slots = random_slots(&mut rng, arity, e.n_seq);
                let symbols: Vec<GridFunction> =
                    (0..arity).map(|_| random_log(&mut rng).sample(d)).collect();
                let inputs = sample_slots(d, &slots);
                let bs: Vec<Option<&GridFunction>> = symbols.iter().map(Some).collect();
                let outputs = (0..e.n_seq)
                    .map(|k| {
                        let entries: Vec<&GridFunction> =
                            inputs.iter().map(|v| &v.entries()[k]).collect();
                        multilinear_commutator(&op as &dyn OperatorHandle, &bs, &entries)
                    })
                    .collect::<sparsedom::Result<Vec<_>>>()?;
                let out = VectorFunction::new(outputs)?;
                let g = lq_norm(&out, q)?;
                let top = g.max_abs();
                if top == 0.0 {
                    return Ok((Vec::new(), 0.0, 0.0));
                }
                let norms = inputs
                    .iter()
                    .zip(&e.q)
                    .map(|(f, &qj)| lq_norm(f, qj))
                    .collect::<sparsedom::Result<Vec<_>>>()?;
                let coarse = log_grid(top / LAMBDA_RANGE, top, e.lambda_points);
                let fine = log_grid(top / LAMBDA_RANGE, top, 2 * e.lambda_points - 1);
                let h = d.cell_measure();
                let rows: Vec<SweepRow> = coarse
                    .iter()
                    .map(|&lambda| {
                        let above = g.values().iter().filter(|&&v| v > lambda).count() as f64 * h;
                        let p = thm13_product(&norms, s_min, lambda);
                        SweepRow::new(e.kind, r, format!("random-{c}"), lambda, above, p)
                    })
                    .collect();
                let m_coarse = thm13_ratio(&out, q, &inputs, &e.q, s_min, &coarse)?;
                let m_fine = thm13_ratio(&out, q, &inputs, &e.q, s_min, &fine)?;
                Ok((rows, m_coarse, m_fine))
            })
            .collect::<Result<Vec<_>>>()?;
        for (rows, mc, mf) in results {
            report.rows.extend(rows);
            coarse_max = coarse_max.max(mc);
            fine_max = fine_max.max(mf);
            worst_case_change = worst_case_change.max(relative_change(mc, mf));
        }
    }
    report.record_ladder(&e.resolutions);
    report.metric("max_ratio", coarse_max);
    report.metric("max_ratio_doubled", fine_max);
    report.metric("grid_change", relative_change(coarse_max, fine_max));
    report.metric("grid_change_worst_case", worst_case_change);
    Ok(report)
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a).abs() / a.abs().max(b.abs())
    }
}

/// Good-λ comparison `sup_λ Φ(λ)|{M_δ h > λ}|` against `sup_λ Φ(λ)|{M♯_δ h > λ}|` on one
/// dyadic grid, for `h = A_S(f̄)` on random nested families and `Φ(λ) = λ^{1/m}`.
///
/// Both suprema are exact: the levels are every attained value of either maximal function.
pub fn run_endpoint(e: &Experiment) -> Result<Report> {
    let m = e.operator.arity();
    let mut report = Report::new(e);
    for &r in &e.resolutions {
        let d = domain(r)?;
        let grid = DyadicGrid::standard(d);
        let unit = GridFunction::constant(d, 1.0);
        let rows = (0..e.cases)
            .into_par_iter()
            .map(|c| {
                let mut rng = case_rng(e.seed, c);
                let family = random_nested_family(&mut rng, d)?;
                let fs: Vec<GridFunction> = (0..m)
                    .map(|_| random_step(&mut rng, 0.0, 1.0).sample(d))
                    .collect();
                let refs: Vec<&GridFunction> = fs.iter().collect();
                let h = eval_sparse(&SparseOperatorSpec::averages(family, m)?, &refs)?;
                let mh = m_tau(&h, DELTA, &CubeCollection::Dyadic(grid))?;
                let sh = sharp_maximal(&h, DELTA, &grid)?;
                let mut levels: Vec<f64> = mh
                    .values()
                    .iter()
                    .chain(sh.values())
                    .copied()
                    .filter(|&v| v > 0.0)
                    .map(f64::next_down)
                    .collect();
                levels.sort_by(f64::total_cmp);
                levels.dedup();
                if levels.is_empty() {
                    return Ok(SweepRow::new(
                        e.kind,
                        r,
                        format!("random-{c}"),
                        DELTA,
                        0.0,
                        0.0,
                    ));
                }
                let phi = |l: f64| l.powf(1.0 / m as f64);
                let lhs =
                    weak_type_functional(&VectorFunction::single(mh), 1.0, &unit, phi, &levels)?;
                let rhs =
                    weak_type_functional(&VectorFunction::single(sh), 1.0, &unit, phi, &levels)?;
                Ok(SweepRow::new(
                    e.kind,
                    r,
                    format!("random-{c}"),
                    DELTA,
                    lhs,
                    rhs,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        report.rows.extend(rows);
    }
    report.record_ladder(&e.resolutions);
    let worst = report
        .rows
        .iter()
        .map(|row| ratio(row.lhs, row.rhs))
        .fold(0.0, f64::max);
    report.metric("max_ratio", worst);
    Ok(report)
}
