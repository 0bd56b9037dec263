use rayon::prelude::*;
use sparsedom::{
    mixed_norm, multilinear_commutator, osc_exp_ls, Cube, CubeCollection, Domain, GridFunction,
    OperatorHandle, VectorFunction, WeightSystem,
};

use super::{domain, operator, weight_constants, weight_system};
use crate::config::Experiment;
use crate::corpus::{case_rng, random_log, random_slots, sample_slots, Profile};
use crate::report::{Constants, Report, SweepRow};
use crate::Result;

struct Case {
    label: String,
    slots: Vec<Vec<Profile>>,
    symbols: Vec<Profile>,
}

/// Weighted vector-valued bound for `T`: per weight and case,
/// `lhs = ‖{T(f̄^k)}‖_{L^p(l^q, ν)}` and
/// `rhs = [w̄]_{A_P̄}^{max{1, p_j'/p}} Π_j ‖{f_j^k}‖_{L^{p_j}(l^{q_j}, w_j)}`.
pub fn run_thm11(e: &Experiment) -> Result<Report> {
    run_sweep(e, false)
}

/// Same sweep for `T_b̄ = Σ_j [b_j, T]_j` with logarithmic symbols; the right
/// side gains `(Σ_j ‖b_j‖_{Osc_{exp L^{s_j}}})·([ν]_{A_∞}^{1/s_*} + Σ_i [σ_i]_{A_∞}^{1/s_i})`.
pub fn run_thm12(e: &Experiment) -> Result<Report> {
    run_sweep(e, true)
}

fn run_sweep(e: &Experiment, commutator: bool) -> Result<Report> {
    let arity = e.operator.arity();
    let cases: Vec<Case> = (0..e.cases)
        .map(|c| {
            let mut rng = case_rng(e.seed, c);
            Case {
                label: format!("random-{c}"),
                slots: random_slots(&mut rng, arity, e.n_seq),
                symbols: (0..arity).map(|_| random_log(&mut rng)).collect(),
            }
        })
        .collect();
    let fixed_symbols: Vec<Profile> = [0.0, 0.125, -0.125]
        .iter()
        .take(arity)
        .map(|&at| Profile::Log {
            at,
            lo: -1.0,
            hi: 1.0,
        })
        .collect();
    let mut report = Report::new(e);
    for &r in &e.resolutions {
        let d = domain(r)?;
        let op = operator(e.operator, d)?;
        let all = CubeCollection::AllMeshAligned(d);
        let shifted = CubeCollection::UnionOfShifted(d);
        let systems = e
            .sweep()
            .par_iter()
            .map(|&a| {
                let ws = weight_system(e, a, d)?;
                let c = weight_constants(&ws, &all, commutator.then_some(&shifted))?;
                Ok((a, ws, c))
            })
            .collect::<Result<Vec<_>>>()?;
        let random = cases
            .par_iter()
            .map(|case| {
                let inputs = sample_slots(d, &case.slots);
                let symbols = sample_symbols(commutator, &case.symbols, d);
                let out = evaluate(&op, &inputs, &symbols)?;
                systems
                    .iter()
                    .map(|(a, ws, c)| {
                        let (lhs, rhs) = sweep_ratio(e, ws, c, &out, &inputs, &symbols)?;
                        Ok(SweepRow::new(e.kind, r, case.label.clone(), *a, lhs, rhs)
                            .with_constants(c))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let extremal = systems
            .par_iter()
            .map(|(a, ws, c)| {
                let inputs = extremal_inputs(ws, e.n_seq)?;
                let symbols = sample_symbols(commutator, &fixed_symbols, d);
                let out = evaluate(&op, &inputs, &symbols)?;
                let (lhs, rhs) = sweep_ratio(e, ws, c, &out, &inputs, &symbols)?;
                Ok(SweepRow::new(e.kind, r, "extremal", *a, lhs, rhs).with_constants(c))
            })
            .collect::<Result<Vec<_>>>()?;
        report.rows.extend(random.into_iter().flatten());
        report.rows.extend(extremal);
    }
    report.record_ladder(&e.resolutions);
    Ok(report)
}

fn sample_symbols(commutator: bool, symbols: &[Profile], d: Domain) -> Vec<GridFunction> {
    if commutator {
        symbols.iter().map(|p| p.sample(d)).collect()
    } else {
        Vec::new()
    }
}

/// `{T(f̄^k)}`, or `{T_b̄(f̄^k)}` when symbols are given.
fn evaluate(
    op: &dyn OperatorHandle,
    inputs: &[VectorFunction],
    symbols: &[GridFunction],
) -> Result<VectorFunction> {
    let bs: Vec<Option<&GridFunction>> = symbols.iter().map(Some).collect();
    let outputs = (0..inputs[0].len())
        .map(|k| {
            let entries: Vec<&GridFunction> = inputs.iter().map(|v| &v.entries()[k]).collect();
            if symbols.is_empty() {
                op.eval(&entries)
            } else {
                multilinear_commutator(op, &bs, &entries)
            }
        })
        .collect::<sparsedom::Result<Vec<_>>>()?;
    Ok(VectorFunction::new(outputs)?)
}

/// `σ_j χ_{[-1/4, 1/4)}` and `σ_j χ_{[0, 1/4)}` alternating along the sequence.
fn extremal_inputs(ws: &WeightSystem, n_seq: usize) -> Result<Vec<VectorFunction>> {
    let d = *ws.domain();
    let wide = Cube::interval(d, -0.25, 0.25)?;
    let half = Cube::interval(d, 0.0, 0.25)?;
    (0..ws.exponents().m())
        .map(|j| {
            let sigma = match ws.sigma(j) {
                Some(s) => s.as_function().clone(),
                None => GridFunction::constant(d, 1.0),
            };
            let entries = (0..n_seq)
                .map(|k| sigma.restrict(if k % 2 == 0 { &wide } else { &half }))
                .collect();
            Ok(VectorFunction::new(entries)?)
        })
        .collect()
}

/// Left and right sides of the weighted bound for precomputed outputs `out`.
///
/// Symbols switch on the commutator form of the right side.
pub fn sweep_ratio(
    e: &Experiment,
    ws: &WeightSystem,
    c: &Constants,
    out: &VectorFunction,
    inputs: &[VectorFunction],
    symbols: &[GridFunction],
) -> Result<(f64, f64)> {
    let ex = ws.exponents();
    let q = 1.0 / e.q.iter().map(|q| 1.0 / q).sum::<f64>();
    let lhs = mixed_norm(out, ex.p(), q, ws.nu().as_function())?;
    let mut rhs = c.ap_multi.powf(ex.sharp_power());
    for (j, f) in inputs.iter().enumerate() {
        rhs *= mixed_norm(f, ex.p_j(j), e.q[j], ws.weights()[j].as_function())?;
    }
    if !symbols.is_empty() {
        let shifted = CubeCollection::UnionOfShifted(*ws.domain());
        let mut osc = 0.0;
        for (b, &s) in symbols.iter().zip(&e.s) {
            osc += osc_exp_ls(b, s, &shifted)?;
        }
        let s_min = e.s.iter().copied().fold(f64::INFINITY, f64::min);
        let nu = c.nu_ainfty.unwrap_or(1.0).powf(1.0 / s_min);
        let sigmas: f64 = c
            .sigma_ainfty
            .iter()
            .zip(&e.s)
            .map(|(a, &s)| a.powf(1.0 / s))
            .sum();
        rhs *= osc * (nu + sigmas);
    }
    Ok((lhs, rhs))
}
