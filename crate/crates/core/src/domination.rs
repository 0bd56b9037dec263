//! Constructive sparse domination: exceptional sets, the Calderón–Zygmund
//! decomposition of `χ_E` and the stopping-time recursion.
//!
//! The domain is split into `3^n` top cubes of side `N/3`. Inputs must live
//! in the central one, so every top cube `Q` has the supports inside `3Q`.
//! Top cubes have side `2^{J+K+1}`, which halves down to single cells.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::calderon::{check_vector_inputs, commutator_restricted, slot_entries, OperatorHandle};
use crate::dyadic::{
    children, dilate, dyadic_descendants, ranges_from_cells, Cube, Ratio, SparseFamily,
};
use crate::error::{Error, Result};
use crate::mesh::{lq_combine, lq_norm, Domain, GridFunction, PrefixSum, VectorFunction};
use crate::sparse_ops::{
    eval_sparse, eval_sparse_commutator, eval_sparse_mixed, SparseMode, SparseOperatorSpec,
};

/// Doublings of `C_2` tried before giving up.
const MAX_DOUBLINGS: u32 = 1100;

/// A sorted set of flat cell indices.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CellSet {
    domain: Domain,
    cells: Vec<usize>,
}

impl CellSet {
    pub fn new(domain: Domain, mut cells: Vec<usize>) -> Result<Self> {
        cells.sort_unstable();
        cells.dedup();
        if cells.last().is_some_and(|&c| c >= domain.cell_count()) {
            return Err(Error::OutsideDomain);
        }
        Ok(Self { domain, cells })
    }

    pub fn empty(domain: Domain) -> Self {
        Self {
            domain,
            cells: Vec::new(),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn measure(&self) -> f64 {
        self.cells.len() as f64 * self.domain.cell_measure()
    }

    /// Number of cells of `q` in the set.
    pub fn count_in(&self, q: &Cube) -> usize {
        q.row_ranges()
            .iter()
            .map(|&(a, b)| {
                let lo = self.cells.partition_point(|&c| c < a);
                let hi = self.cells.partition_point(|&c| c < b);
                hi - lo
            })
            .sum()
    }

    fn indicator(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.domain.cell_count()];
        for &c in &self.cells {
            v[c] = 1.0;
        }
        v
    }
}

/// Maximal cubes `P` among the dyadic descendants of `q0` with `|P ∩ E| > level·|P|`.
///
/// Requires `|Q0 ∩ E| <= level·|Q0|`. The result is sorted.
pub fn cz_decompose_indicator(e: &CellSet, q0: &Cube, level: f64) -> Result<Vec<Cube>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Parameter("level must lie in (0, 1)"));
    }
    if e.domain() != q0.domain() {
        return Err(Error::DomainMismatch);
    }
    let sums = PrefixSum::from_values(*e.domain(), &e.indicator());
    let dense = |p: &Cube| sums.sum(p) > level * p.cell_count() as f64;
    if dense(q0) {
        return Err(Error::Precondition("the set is too dense in the top cube"));
    }
    let mut out = Vec::new();
    let mut stack = if q0.can_subdivide() {
        children(q0)?
    } else {
        Vec::new()
    };
    while let Some(p) = stack.pop() {
        if sums.sum(&p) == 0.0 {
            continue;
        }
        if dense(&p) {
            out.push(p);
        } else if p.can_subdivide() {
            stack.extend(children(&p)?);
        }
    }
    out.sort();
    Ok(out)
}

/// Cellwise data on a stopping cube `Q0` that does not depend on `C_2`.
struct LocalData {
    // Π_j ‖{f_j^k(x)}‖_{l^{q_j}} on the cells of Q0
    product: Vec<f64>,
    // ‖{M_T(f̄^k χ_{3Q0})(x)}‖ over D(Q0)
    grand: Vec<f64>,
    // Π_j ⟨‖{f_j^k}‖_{l^{q_j}}⟩_{3Q0}
    theta: f64,
}

fn position(q0: &Cube, cell: usize) -> usize {
    let d = q0.domain();
    let [x, y] = d.coords(cell);
    let c = q0.corner();
    let e = q0.extent();
    (y - c[1] as usize) * e[0] as usize + (x - c[0] as usize)
}

fn local_data(
    op: &dyn OperatorHandle,
    inputs: &[&VectorFunction],
    norms: &[GridFunction],
    norm_sums: &[PrefixSum],
    q: f64,
    q0: &Cube,
) -> Result<LocalData> {
    let outer = dilate(q0, 3)?;
    let theta: f64 = norm_sums.iter().map(|s| s.mean(&outer)).product();
    let cells = q0.cells();
    let product: Vec<f64> = cells
        .iter()
        .map(|&i| norms.iter().map(|g| g.values()[i]).product())
        .collect();
    let mut grand = vec![0.0; cells.len()];
    if theta == 0.0 {
        return Ok(LocalData {
            product,
            grand,
            theta,
        });
    }
    let n_seq = inputs[0].len();
    let base: Vec<Vec<f64>> = (0..n_seq)
        .map(|k| op.eval_restricted(&slot_entries(inputs, k), &outer, q0))
        .collect::<Result<_>>()?;
    for p in dyadic_descendants(q0).iter().skip(1) {
        let support = match dilate(p, 3)?.intersect(&outer) {
            Some(s) => s,
            None => continue,
        };
        let local: Vec<Vec<f64>> = (0..n_seq)
            .map(|k| op.eval_restricted(&slot_entries(inputs, k), &support, p))
            .collect::<Result<_>>()?;
        let pos: Vec<usize> = p.cells().iter().map(|&c| position(q0, c)).collect();
        let value = pos
            .iter()
            .enumerate()
            .map(|(t, &s)| lq_combine(base.iter().zip(&local).map(|(b, l)| b[s] - l[t]), q))
            .fold(0.0, f64::max);
        for &s in &pos {
            if value > grand[s] {
                grand[s] = value;
            }
        }
    }
    Ok(LocalData {
        product,
        grand,
        theta,
    })
}

fn level_set(q0: &Cube, data: &LocalData, c2: f64) -> Result<CellSet> {
    let t = c2 * data.theta;
    let cells = q0
        .cells()
        .into_iter()
        .enumerate()
        .filter(|&(s, _)| data.product[s] > t || data.grand[s] > t)
        .map(|(_, c)| c)
        .collect();
    CellSet::new(*q0.domain(), cells)
}

fn l_q_norms(inputs: &[&VectorFunction], qs: &[f64]) -> Result<Vec<GridFunction>> {
    inputs
        .iter()
        .zip(qs)
        .map(|(v, &qj)| lq_norm(v, qj))
        .collect()
}

fn combined_exponent(qs: &[f64]) -> Result<f64> {
    if qs.iter().any(|&q| !(q > 0.0)) {
        return Err(Error::Parameter("sequence exponents must be positive"));
    }
    Ok(1.0 / qs.iter().map(|q| 1.0 / q).sum::<f64>())
}

/// `E = {x ∈ Q0 : Π_j ‖{f_j^k(x)}‖ > C_2 θ} ∪ {x ∈ Q0 : ‖{M_T(f̄^k χ_{3Q0})(x)}‖ > C_2 θ}`
/// with `θ = Π_j ⟨‖{f_j^k}‖_{l^{q_j}}⟩_{3Q0}` and `M_T` taken over the dyadic descendants of `Q0`.
pub fn exceptional_set(
    op: &dyn OperatorHandle,
    q0: &Cube,
    inputs: &[&VectorFunction],
    qs: &[f64],
    c2: f64,
) -> Result<CellSet> {
    check_vector_inputs(op, inputs)?;
    if qs.len() != inputs.len() {
        return Err(Error::Length {
            expected: inputs.len(),
            found: qs.len(),
        });
    }
    if q0.domain() != op.domain() {
        return Err(Error::DomainMismatch);
    }
    let q = combined_exponent(qs)?;
    let outer = dilate(q0, 3)?;
    let restricted: Vec<VectorFunction> = inputs
        .iter()
        .map(|v| VectorFunction::new(v.entries().iter().map(|f| f.restrict(&outer)).collect()))
        .collect::<Result<_>>()?;
    let refs: Vec<&VectorFunction> = restricted.iter().collect();
    let norms = l_q_norms(&refs, qs)?;
    let sums: Vec<PrefixSum> = norms.iter().map(PrefixSum::new).collect();
    let data = local_data(op, &refs, &norms, &sums, q, q0)?;
    level_set(q0, &data, c2)
}

/// Recursion statistics.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DominationStats {
    /// Deepest stopping generation (top cubes are generation 0).
    pub depth: usize,
    /// Number of stopping cubes processed.
    pub cubes: usize,
    /// Stopping cubes of a single cell, where the recursion bottoms out.
    pub leaf_truncations: usize,
    /// Largest `C_2` needed by any stopping cube.
    pub c2_max: f64,
    /// Largest `Σ_j |P_j| / |Q0|` over all stopping cubes.
    pub max_child_fraction: f64,
}

/// Output of [`sparse_dominate`] and [`sparse_dominate_commutator`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DominationResult {
    pub family: SparseFamily,
    /// `max_x LHS(x) / RHS(x)` over cells where the left side is nonzero.
    pub c_emp: f64,
    pub stats: DominationStats,
}

/// The `3^n` top cubes of side `N/3` and the central one.
fn top_cubes(d: Domain) -> Result<(Vec<Cube>, Cube)> {
    let s = (d.axis_cells() / 3) as i64;
    let mut out = Vec::new();
    if d.dim() == 1 {
        for i in 0..3 {
            out.push(Cube::new(d, [i * s, 0], s)?);
        }
        Ok((out, Cube::new(d, [s, 0], s)?))
    } else {
        for j in 0..3 {
            for i in 0..3 {
                out.push(Cube::new(d, [i * s, j * s], s)?);
            }
        }
        Ok((out, Cube::new(d, [s, s], s)?))
    }
}

fn build_family(
    op: &dyn OperatorHandle,
    inputs: &[&VectorFunction],
    qs: &[f64],
) -> Result<(SparseFamily, DominationStats, Vec<GridFunction>)> {
    check_vector_inputs(op, inputs)?;
    if qs.len() != inputs.len() {
        return Err(Error::Length {
            expected: inputs.len(),
            found: qs.len(),
        });
    }
    let q = combined_exponent(qs)?;
    let d = *op.domain();
    let (tops, central) = top_cubes(d)?;
    for v in inputs {
        if v.entries().iter().any(|f| !f.supported_in(&central)) {
            return Err(Error::Precondition(
                "inputs must be supported in the central top cube",
            ));
        }
    }
    let n = d.dim() as u32;
    let eta = Ratio::new(1, 2 * 3u32.pow(n))?;
    let norms = l_q_norms(inputs, qs)?;
    let sums: Vec<PrefixSum> = norms.iter().map(PrefixSum::new).collect();
    let mut family = SparseFamily::empty(d, eta);
    let mut stats = DominationStats::default();
    let budget = 1.0 / f64::from(1u32 << (n + 2));
    let cz_level = 1.0 / f64::from(1u32 << (n + 1));
    let mut stack: Vec<(Cube, usize)> = tops.into_iter().rev().map(|c| (c, 0)).collect();
    while let Some((q0, generation)) = stack.pop() {
        let outer = dilate(&q0, 3)?;
        let restricted: Vec<VectorFunction> = inputs
            .iter()
            .map(|v| VectorFunction::new(v.entries().iter().map(|f| f.restrict(&outer)).collect()))
            .collect::<Result<_>>()?;
        let refs: Vec<&VectorFunction> = restricted.iter().collect();
        let data = local_data(op, &refs, &norms, &sums, q, &q0)?;
        if data.theta == 0.0 {
            continue;
        }
        stats.cubes += 1;
        stats.depth = stats.depth.max(generation);
        if q0.cell_count() == 1 {
            stats.leaf_truncations += 1;
        }
        let allowed = budget * q0.cell_count() as f64;
        let mut c2 = 1.0;
        let mut e = level_set(&q0, &data, c2)?;
        let mut tries = 0;
        while e.len() as f64 > allowed {
            tries += 1;
            if tries > MAX_DOUBLINGS {
                return Err(Error::Precondition(
                    "no finite C_2 shrinks the exceptional set",
                ));
            }
            c2 *= 2.0;
            e = level_set(&q0, &data, c2)?;
        }
        stats.c2_max = stats.c2_max.max(c2);
        let selected = cz_decompose_indicator(&e, &q0, cz_level)?;
        let covered: u64 = selected.iter().map(Cube::cell_count).sum();
        stats.max_child_fraction = stats
            .max_child_fraction
            .max(covered as f64 / q0.cell_count() as f64);
        let witness: Vec<usize> = q0
            .cells()
            .into_iter()
            .filter(|&c| !selected.iter().any(|p| p.contains_cell(c)))
            .collect();
        family.push(outer, ranges_from_cells(&witness))?;
        stack.extend(selected.into_iter().rev().map(|p| (p, generation + 1)));
    }
    Ok((family, stats, norms))
}

fn ratio_max(lhs: &GridFunction, rhs: &GridFunction) -> f64 {
    lhs.values()
        .iter()
        .zip(rhs.values())
        .filter(|(l, _)| **l > 0.0)
        .map(|(l, r)| if *r > 0.0 { l / r } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

/// Builds the `1/(2·3^n)`-sparse family of the stopping-time construction and
/// measures `max_x ‖{T(f̄^k)(x)}‖_{l^q} / A_S(‖{f_1^k}‖_{l^{q_1}}, …)(x)`.
pub fn sparse_dominate(
    op: &dyn OperatorHandle,
    inputs: &[&VectorFunction],
    qs: &[f64],
) -> Result<DominationResult> {
    let (family, stats, norms) = build_family(op, inputs, qs)?;
    let q = combined_exponent(qs)?;
    let outputs: Vec<GridFunction> = (0..inputs[0].len())
        .map(|k| op.eval(&slot_entries(inputs, k)))
        .collect::<Result<_>>()?;
    let lhs = lq_norm(&VectorFunction::new(outputs)?, q)?;
    let c_emp = if family.is_empty() {
        ratio_max(&lhs, &GridFunction::zeros(*op.domain()))
    } else {
        let spec = SparseOperatorSpec::new(
            family.clone(),
            norms.len(),
            SparseMode::Orlicz(vec![0.0; norms.len()]),
        )?;
        let refs: Vec<&GridFunction> = norms.iter().collect();
        ratio_max(&lhs, &eval_sparse(&spec, &refs)?)
    };
    Ok(DominationResult {
        family,
        c_emp,
        stats,
    })
}

/// Domination of `[b, T]_i` by the two sparse terms
/// `|b(x) - ⟨b⟩_Q| Π_j ⟨‖f_j‖⟩_Q` and `⟨|b - ⟨b⟩_Q| ‖f_i‖⟩_Q Π_{j≠i} ⟨‖f_j‖⟩_Q`
/// over the family built for `T`.
pub fn sparse_dominate_commutator(
    op: &dyn OperatorHandle,
    b: &GridFunction,
    inputs: &[&VectorFunction],
    qs: &[f64],
    slot: usize,
) -> Result<DominationResult> {
    if slot >= op.arity() {
        return Err(Error::Parameter("slot out of range"));
    }
    let (family, stats, norms) = build_family(op, inputs, qs)?;
    let q = combined_exponent(qs)?;
    let whole = op.domain().whole();
    let outputs: Vec<GridFunction> = (0..inputs[0].len())
        .map(|k| {
            let v = commutator_restricted(op, b, slot, &slot_entries(inputs, k), &whole, &whole)?;
            GridFunction::new(*op.domain(), v)
        })
        .collect::<Result<_>>()?;
    let lhs = lq_norm(&VectorFunction::new(outputs)?, q)?;
    let c_emp = if family.is_empty() {
        ratio_max(&lhs, &GridFunction::zeros(*op.domain()))
    } else {
        let refs: Vec<&GridFunction> = norms.iter().collect();
        let symbols = (0..norms.len())
            .map(|j| {
                if j == slot {
                    b.clone()
                } else {
                    GridFunction::zeros(*op.domain())
                }
            })
            .collect();
        let spec =
            SparseOperatorSpec::new(family.clone(), norms.len(), SparseMode::Commutator(symbols))?;
        let first = eval_sparse_commutator(&spec, &refs)?;
        let second = eval_sparse_mixed(&family, b, slot, &refs)?;
        ratio_max(&lhs, &first.add(&second)?)
    };
    Ok(DominationResult {
        family,
        c_emp,
        stats,
    })
}
