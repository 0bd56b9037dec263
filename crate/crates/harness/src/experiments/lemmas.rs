use rand::Rng;
use rayon::prelude::*;
use sparsedom::{
    average, eval_sparse, grand_maximal, hl_maximal, m_tau, orlicz_llogl, osc_exp_ls, Cube,
    CubeCollection, Domain, DyadicGrid, GridFunction, OperatorHandle, Ratio, SparseFamily,
    SparseMode, SparseOperatorSpec, VectorFunction,
};

use super::{domain, operator};
use crate::config::Experiment;
use crate::corpus::{case_rng, random_log, random_step};
use crate::report::{ratio, spread, Report, SweepRow};
use crate::Result;

/// Exponent `δ` of the oscillation in the sparse-operator lemma.
pub const DELTA: f64 = 0.25;
/// Exponent `γ ∈ (δ, 1/2)` of the maximal function on its right side.
pub const GAMMA: f64 = 0.375;
/// Finest level of random families; level `k` cubes have side `2^{-k}`.
pub const FAMILY_LEVEL: u32 = 6;

/// Pointwise bound `M_T(f̄) ≤ C (M_τ(T f̄) + Π_j M f_j)` with `τ = 1/(m+1)`.
///
/// All maximal functions run over the union of the shifted dyadic grids. Each
/// row holds the worst cell of one case; `C[r=…]` is the corpus maximum.
pub fn run_lemma32(e: &Experiment) -> Result<Report> {
    let arity = e.operator.arity();
    let tau = 1.0 / (arity as f64 + 1.0);
    let mut report = Report::new(e);
    let mut constants = Vec::new();
    for &r in &e.resolutions {
        let d = domain(r)?;
        let op = operator(e.operator, d)?;
        let cubes = CubeCollection::UnionOfShifted(d);
        let rows = (0..e.cases)
            .into_par_iter()
            .map(|c| {
                let mut rng = case_rng(e.seed, c);
                let fs: Vec<GridFunction> = (0..arity)
                    .map(|_| random_step(&mut rng, -1.0, 1.0).sample(d))
                    .collect();
                let refs: Vec<&GridFunction> = fs.iter().collect();
                let singles: Vec<VectorFunction> =
                    fs.iter().cloned().map(VectorFunction::single).collect();
                let vrefs: Vec<&VectorFunction> = singles.iter().collect();
                let lhs = grand_maximal(&op, &vrefs, 1.0, &cubes)?;
                let mut rhs = m_tau(&op.eval(&refs)?, tau, &cubes)?;
                let mut product = GridFunction::constant(d, 1.0);
                for f in &fs {
                    product = product.mul(&hl_maximal(f, &cubes)?)?;
                }
                rhs = rhs.add(&product)?;
                let (l, rr) = worst_cell(&lhs, &rhs);
                Ok(SweepRow::new(e.kind, r, format!("random-{c}"), tau, l, rr))
            })
            .collect::<Result<Vec<_>>>()?;
        report.rows.extend(rows);
        let c = report.max_ratio(r);
        report.metric(format!("C[r={r}]"), c);
        constants.push(c);
    }
    report.metric("stability", spread(&constants));
    Ok(report)
}

/// `(lhs, rhs)` at the cell maximising `lhs/rhs` among cells with `lhs > 0`.
fn worst_cell(lhs: &GridFunction, rhs: &GridFunction) -> (f64, f64) {
    let mut best = (0.0, 1.0);
    let mut worst = 0.0;
    for (&l, &r) in lhs.values().iter().zip(rhs.values()) {
        let q = ratio(l, r);
        if q > worst {
            worst = q;
            best = (l, r);
        }
    }
    best
}

/// Random nested family rooted at the level-1 cubes `[-1/2, 0)` and `[0, 1/2)` of the standard grid.
///
/// The roots leave a margin inside the level-0 cubes, so `A_S` vanishes near the
/// boundary of the domain as a compactly supported function would.
/// Each cube keeps at most two of its four grandchildren, so its witness `Q \ ∪ kids` has at least half its measure and the
/// family is `1/2`-sparse. Cubes stop at level [`FAMILY_LEVEL`]; the draws do not
/// depend on the resolution, so the family is the same set of intervals on every mesh
/// of resolution at least `FAMILY_LEVEL + 1`.
pub fn random_nested_family(rng: &mut impl Rng, d: Domain) -> Result<SparseFamily> {
    fn grow(rng: &mut impl Rng, lo: f64, w: f64, level: u32, out: &mut Vec<(f64, f64, Vec<f64>)>) {
        let mut kids = Vec::new();
        if level + 2 <= FAMILY_LEVEL {
            for i in 0..4 {
                if kids.len() < 2 && rng.random_bool(0.45) {
                    kids.push(lo + i as f64 * w / 4.0);
                }
            }
        }
        out.push((lo, w, kids.clone()));
        for k in kids {
            grow(rng, k, w / 4.0, level + 2, out);
        }
    }
    let mut nodes = Vec::new();
    for root in [-0.5, 0.0] {
        if rng.random_bool(0.9) {
            grow(rng, root, 0.5, 1, &mut nodes);
        }
    }
    let mut family = SparseFamily::empty(d, Ratio::new(1, 2)?);
    for (lo, w, kids) in nodes {
        let q = Cube::interval(d, lo, lo + w)?;
        let mut witness = Vec::new();
        let mut start = q.corner()[0] as usize;
        for k in kids {
            let kid = Cube::interval(d, k, k + w / 4.0)?;
            let a = kid.corner()[0] as usize;
            if a > start {
                witness.push((start, a));
            }
            start = a + kid.extent()[0] as usize;
        }
        let end = (q.corner()[0] + q.extent()[0]) as usize;
        if end > start {
            witness.push((start, end));
        }
        family.push(q, witness)?;
    }
    Ok(family)
}

/// Largest ratios of the two oscillation estimates over the standard-grid test cubes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Lemma44Ratios {
    /// `inf_c ⟨|A_{S,β̄}(f̄) - c|^δ⟩_I^{1/δ}` against `Π_j ‖f_j‖_{L(log L)^{β_j}, I}`: `(lhs, rhs)` at the worst cube.
    pub orlicz: (f64, f64),
    /// `inf_c ⟨|A_{S,b̄}(f̄) - c|^δ⟩_I^{1/δ}` against `inf_{y∈I} M_γ(A_S f̄)(y) + Π_j ⟨|f_j|⟩_I`.
    pub commutator: (f64, f64),
}

impl Lemma44Ratios {
    pub fn orlicz_ratio(&self) -> f64 {
        ratio(self.orlicz.0, self.orlicz.1)
    }

    pub fn commutator_ratio(&self) -> f64 {
        ratio(self.commutator.0, self.commutator.1)
    }
}

/// Both estimates on every cube of the standard grid from level 0 down to single triples of cells.
pub fn lemma44_ratios(
    family: &SparseFamily,
    fs: &[&GridFunction],
    betas: &[f64],
    symbols: &[GridFunction],
) -> Result<Lemma44Ratios> {
    let d = *family.domain();
    let m = fs.len();
    let grid = DyadicGrid::standard(d);
    let orlicz = SparseOperatorSpec::new(family.clone(), m, SparseMode::Orlicz(betas.to_vec()))?;
    let plain = SparseOperatorSpec::averages(family.clone(), m)?;
    let comm =
        SparseOperatorSpec::new(family.clone(), m, SparseMode::Commutator(symbols.to_vec()))?;
    let a_orlicz = eval_sparse(&orlicz, fs)?;
    let a_plain = eval_sparse(&plain, fs)?;
    let a_comm = eval_sparse(&comm, fs)?;
    let mg = m_tau(&a_plain, GAMMA, &CubeCollection::Dyadic(grid))?;
    let mut out = Lemma44Ratios::default();
    for k in 0..=grid.finest_level() {
        for cube in grid.cubes_at(k) {
            let lhs = oscillation(&a_orlicz.gather(&cube), DELTA);
            let mut rhs = 1.0;
            for (f, &b) in fs.iter().zip(betas) {
                rhs *= orlicz_llogl(f, &cube, b)?;
            }
            if ratio(lhs, rhs) > out.orlicz_ratio() {
                out.orlicz = (lhs, rhs);
            }
            let lhs = oscillation(&a_comm.gather(&cube), DELTA);
            let inf_m = mg.gather(&cube).into_iter().fold(f64::INFINITY, f64::min);
            let mut avg = 1.0;
            for f in fs {
                avg *= average(&f.abs(), &cube, None)?;
            }
            let rhs = inf_m + avg;
            if ratio(lhs, rhs) > out.commutator_ratio() {
                out.commutator = (lhs, rhs);
            }
        }
    }
    Ok(out)
}

/// `inf_c (mean |v - c|^δ)^{1/δ}`. For `δ < 1` the sum is concave between data
/// points, so the infimum is attained at one of the values.
fn oscillation(values: &[f64], delta: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for x in v {
        match distinct.last_mut() {
            Some((y, n)) if *y == x => *n += 1,
            _ => distinct.push((x, 1)),
        }
    }
    if distinct.len() <= 1 {
        return 0.0;
    }
    let best = distinct
        .iter()
        .map(|&(c, _)| {
            distinct
                .iter()
                .map(|&(x, n)| n as f64 * (x - c).abs().powf(delta))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    (best / values.len() as f64).powf(1.0 / delta)
}

/// Oscillation estimates for sparse operators on random nested families.
///
/// Symbols are logarithms normalised to unit `Osc_{exp L^{s_j}}` norm. Besides the
/// random corpus, two degenerate cases are recorded as metrics: constant inputs with
/// constant symbols and `S = {[0, 1)}`, and the empty family. Both must give exactly 0.
pub fn run_lemma44(e: &Experiment) -> Result<Report> {
    let m = e.operator.arity();
    let mut report = Report::new(e);
    let mut maxima = (Vec::new(), Vec::new());
    for &r in &e.resolutions {
        let d = domain(r)?;
        let shifted = CubeCollection::UnionOfShifted(d);
        let results = (0..e.cases)
            .into_par_iter()
            .map(|c| {
                let mut rng = case_rng(e.seed, c);
                let family = random_nested_family(&mut rng, d)?;
                let fs: Vec<GridFunction> = (0..m)
                    .map(|_| random_step(&mut rng, -1.0, 1.0).sample(d))
                    .collect();
                let symbols = (0..m)
                    .map(|j| {
                        let b = random_log(&mut rng).sample(d);
                        let osc = osc_exp_ls(&b, e.s[j], &shifted)?;
                        Ok(b.scale(1.0 / osc))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let refs: Vec<&GridFunction> = fs.iter().collect();
                lemma44_ratios(&family, &refs, &e.beta, &symbols)
            })
            .collect::<Result<Vec<_>>>()?;
        for (c, res) in results.iter().enumerate() {
            let (l, rr) = res.orlicz;
            report.rows.push(SweepRow::new(
                e.kind,
                r,
                format!("random-{c}/orlicz"),
                DELTA,
                l,
                rr,
            ));
            let (l, rr) = res.commutator;
            report.rows.push(SweepRow::new(
                e.kind,
                r,
                format!("random-{c}/commutator"),
                GAMMA,
                l,
                rr,
            ));
        }
        let m42 = results
            .iter()
            .map(Lemma44Ratios::orlicz_ratio)
            .fold(0.0, f64::max);
        let m43 = results
            .iter()
            .map(Lemma44Ratios::commutator_ratio)
            .fold(0.0, f64::max);
        report.metric(format!("max_ratio_orlicz[r={r}]"), m42);
        report.metric(format!("max_ratio_commutator[r={r}]"), m43);
        maxima.0.push(m42);
        maxima.1.push(m43);

        let ones: Vec<GridFunction> = (0..m).map(|_| GridFunction::constant(d, 1.0)).collect();
        let refs: Vec<&GridFunction> = ones.iter().collect();
        let flat: Vec<GridFunction> = (0..m).map(|_| GridFunction::zeros(d)).collect();
        let single = SparseFamily::disjoint(d, vec![Cube::interval(d, 0.0, 1.0)?])?
            .with_eta(Ratio::new(1, 2)?);
        let constant = lemma44_ratios(&single, &refs, &e.beta, &flat)?;
        let mut rng = case_rng(e.seed, e.cases);
        let fs: Vec<GridFunction> = (0..m)
            .map(|_| random_step(&mut rng, -1.0, 1.0).sample(d))
            .collect();
        let symbols: Vec<GridFunction> = (0..m).map(|_| random_log(&mut rng).sample(d)).collect();
        let frefs: Vec<&GridFunction> = fs.iter().collect();
        let empty = lemma44_ratios(
            &SparseFamily::empty(d, Ratio::new(1, 2)?),
            &frefs,
            &e.beta,
            &symbols,
        )?;
        report.metric(
            format!("constant_case[r={r}]"),
            constant.orlicz_ratio().max(constant.commutator_ratio()),
        );
        report.metric(
            format!("empty_case[r={r}]"),
            empty.orlicz_ratio().max(empty.commutator_ratio()),
        );
    }
    report.metric("stability_orlicz", spread(&maxima.0));
    report.metric("stability_commutator", spread(&maxima.1));
    Ok(report)
}
