//! Truncated Calderón commutators, pointwise commutators with symbols and
//! the grand maximal operator `M_T`.
//!
//! For `x` the centre of cell `i` and `y` in cell `c`, write `x - y = h v`
//! with `v ∈ [u - 1/2, u + 1/2]`, `u = i - c`. On that cell
//! `A_j(x) - A_j(y) = h (r_j + s_j v)` with `s_j = a_j(c)` and
//! `r_j = Σ_{c ≤ k < i} a_j(k) + a_j(i)/2 - a_j(c)(u + 1/2)`, so the
//! per-cell integral of the kernel is `∫ Π_j (r_j + s_j v) v^{-m-1} dv`,
//! free of `h`. Its moments are tabulated once per domain.

use alloc::vec;
use alloc::vec::Vec;

use crate::dyadic::{dilate, Cube, CubeCollection};
use crate::error::{Error, Result};
use crate::math;
use crate::maximal::sup_over_cubes;
use crate::mesh::{lq_combine, Domain, GridFunction, VectorFunction};

/// Contract consumed by the domination engine: a multilinear operator that
/// can be evaluated on inputs restricted to a box.
pub trait OperatorHandle {
    /// Number of input slots.
    fn arity(&self) -> usize;

    fn domain(&self) -> &Domain;

    /// Truncation scale `ε`: cells whose centres lie closer than `ε` to `x` are skipped.
    fn truncation(&self) -> f64;

    /// `T(f_1 χ_S, …, f_m χ_S)` on the cells of `target`, row-major.
    fn eval_restricted(
        &self,
        inputs: &[&GridFunction],
        support: &Cube,
        target: &Cube,
    ) -> Result<Vec<f64>>;

    /// `T(f_1, …, f_m)` on the whole domain.
    fn eval(&self, inputs: &[&GridFunction]) -> Result<GridFunction> {
        let whole = self.domain().whole();
        GridFunction::new(
            *self.domain(),
            self.eval_restricted(inputs, &whole, &whole)?,
        )
    }
}

/// Slopes `a_j` of Lipschitz functions `A_j` with `A_j(-2^J) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzData {
    slopes: Vec<GridFunction>,
    edges: Vec<Vec<f64>>,
}

impl LipschitzData {
    pub fn new(slopes: Vec<GridFunction>) -> Result<Self> {
        let d = *slopes
            .first()
            .ok_or(Error::Parameter("at least one slope is required"))?
            .domain();
        if d.dim() != 1 {
            return Err(Error::Unsupported(
                "Calderón commutators are one-dimensional",
            ));
        }
        if slopes.iter().any(|a| *a.domain() != d) {
            return Err(Error::DomainMismatch);
        }
        let h = d.cell_width();
        let edges = slopes
            .iter()
            .map(|a| {
                let mut out = Vec::with_capacity(a.values().len() + 1);
                let (mut s, mut c) = (0.0f64, 0.0f64);
                out.push(0.0);
                for &v in a.values() {
                    let t = s + v;
                    c += if s.abs() >= v.abs() {
                        (s - t) + v
                    } else {
                        (v - t) + s
                    };
                    s = t;
                    out.push((s + c) * h);
                }
                out
            })
            .collect();
        Ok(Self { slopes, edges })
    }

    pub fn m(&self) -> usize {
        self.slopes.len()
    }

    pub fn domain(&self) -> &Domain {
        self.slopes[0].domain()
    }

    pub fn slopes(&self) -> &[GridFunction] {
        &self.slopes
    }

    /// `A_j` at the cell edges.
    pub fn antiderivative_edges(&self, j: usize) -> &[f64] {
        &self.edges[j]
    }

    /// `A_j(x)`, linear between cell edges and constant outside the domain.
    pub fn antiderivative(&self, j: usize, x: f64) -> f64 {
        let d = self.domain();
        let e = &self.edges[j];
        let n = d.axis_cells();
        let t = (x - d.left()) * d.cells_per_unit() as f64;
        if t <= 0.0 {
            return 0.0;
        }
        if t >= n as f64 {
            return e[n];
        }
        let i = (libm::floor(t) as usize).min(n - 1);
        let frac = t - i as f64;
        e[i] + (e[i + 1] - e[i]) * frac
    }
}

/// `K(x, y_1, …, y_{m+1}) = (-1)^{m e(y_{m+1} - x)} (x - y_{m+1})^{-m-1} Π_j χ_{(min, max)}(y_j)`,
/// where `(min, max)` is the open interval between `x` and `y_{m+1}` and `e = χ_{[0, ∞)}`.
pub fn kernel_c(x: f64, ys: &[f64]) -> Result<f64> {
    if ys.len() < 2 {
        return Err(Error::Parameter("the kernel needs m + 1 >= 2 variables"));
    }
    let m = ys.len() - 1;
    let y = ys[m];
    if y == x {
        return Err(Error::Singular);
    }
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    if ys[..m].iter().any(|&t| !(t > lo && t < hi)) {
        return Ok(0.0);
    }
    let sign = if y >= x && m % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign / math::powi(x - y, m as i32 + 1))
}

/// The truncated commutator `C_{m+1}(a_1, …, a_m, f)`, `m ∈ {1, 2}`.
///
/// Slots are `[a_1, …, a_m, f]`. Cells with `|i - c| <= radius` are skipped.
#[derive(Clone, Debug)]
pub struct CalderonCommutator {
    domain: Domain,
    m: usize,
    radius: usize,
    // per-cell moments ∫ v^{-k} dv over [u - 1/2, u + 1/2], u = 1..N
    inv1: Vec<f64>,
    inv2: Vec<f64>,
    inv3: Vec<f64>,
}

impl CalderonCommutator {
    pub fn new(domain: Domain, m: usize) -> Result<Self> {
        Self::with_radius(domain, m, 0)
    }

    pub fn with_radius(domain: Domain, m: usize, radius: usize) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::Unsupported(
                "Calderón commutators are one-dimensional",
            ));
        }
        if m != 1 && m != 2 {
            return Err(Error::Unsupported("only C_2 and C_3 are implemented"));
        }
        let n = domain.axis_cells();
        let mut inv1 = vec![0.0; n + 1];
        let mut inv2 = vec![0.0; n + 1];
        let mut inv3 = vec![0.0; n + 1];
        for u in 1..=n {
            let uf = u as f64;
            let q = uf * uf - 0.25;
            inv1[u] = math::ln_1p(1.0 / (uf - 0.5));
            inv2[u] = 1.0 / q;
            inv3[u] = uf / (q * q);
        }
        Ok(Self {
            domain,
            m,
            radius,
            inv1,
            inv2,
            inv3,
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// `(∫ v^{-1}, ∫ v^{-2}, ∫ v^{-3})` over the cell at signed offset `u ≠ 0`.
    #[inline]
    fn moments(&self, u: i64) -> (f64, f64, f64) {
        let k = u.unsigned_abs() as usize;
        if u > 0 {
            (self.inv1[k], self.inv2[k], self.inv3[k])
        } else {
            (-self.inv1[k], self.inv2[k], -self.inv3[k])
        }
    }
}

impl OperatorHandle for CalderonCommutator {
    fn arity(&self) -> usize {
        self.m + 1
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn truncation(&self) -> f64 {
        (self.radius + 1) as f64 * self.domain.cell_width()
    }

    fn eval_restricted(
        &self,
        inputs: &[&GridFunction],
        support: &Cube,
        target: &Cube,
    ) -> Result<Vec<f64>> {
        if inputs.len() != self.m + 1 {
            return Err(Error::Length {
                expected: self.m + 1,
                found: inputs.len(),
            });
        }
        if inputs.iter().any(|f| *f.domain() != self.domain)
            || *support.domain() != self.domain
            || *target.domain() != self.domain
        {
            return Err(Error::DomainMismatch);
        }
        let s0 = support.corner()[0] as usize;
        let s1 = s0 + support.extent()[0] as usize;
        let t0 = target.corner()[0] as usize;
        let t1 = t0 + target.extent()[0] as usize;
        let f = inputs[self.m].values();
        let slopes: Vec<&[f64]> = inputs[..self.m].iter().map(|a| a.values()).collect();
        // prefix sums of the slopes over the support, indexed by edge - s0
        let prefix: Vec<Vec<f64>> = slopes
            .iter()
            .map(|a| {
                let mut p = Vec::with_capacity(s1 - s0 + 1);
                let mut acc = 0.0;
                p.push(0.0);
                for &v in &a[s0..s1] {
                    acc += v;
                    p.push(acc);
                }
                p
            })
            .collect();
        let inside = |k: usize| (s0..s1).contains(&k);
        let at = |p: &[f64], k: usize| p[k.clamp(s0, s1) - s0];
        let r = self.radius as i64;
        let mut out = vec![0.0; t1 - t0];
        for (slot, i) in (t0..t1).enumerate() {
            let mut acc = 0.0;
            let half: Vec<f64> = slopes
                .iter()
                .map(|a| if inside(i) { 0.5 * a[i] } else { 0.0 })
                .collect();
            for c in s0..s1 {
                let fc = f[c];
                if fc == 0.0 {
                    continue;
                }
                let u = i as i64 - c as i64;
                if u.abs() <= r {
                    continue;
                }
                let (m1, m2, m3) = self.moments(u);
                let shift = u as f64 + 0.5;
                let coef = |j: usize| {
                    let s = slopes[j][c];
                    let rj = (at(&prefix[j], i) - prefix[j][c - s0]) + half[j] - s * shift;
                    (rj, s)
                };
                let val = if self.m == 1 {
                    let (r1, s1) = coef(0);
                    r1 * m2 + s1 * m1
                } else {
                    let (r1, s1) = coef(0);
                    let (r2, s2) = coef(1);
                    r1 * r2 * m3 + (r1 * s2 + r2 * s1) * m2 + s1 * s2 * m1
                };
                acc += fc * val;
            }
            out[slot] = acc;
        }
        Ok(out)
    }
}

/// `C_{m+1}(a_1, …, a_m, f)` with the own cell excluded.
pub fn apply_c(lip: &LipschitzData, f: &GridFunction) -> Result<GridFunction> {
    if f.domain() != lip.domain() {
        return Err(Error::DomainMismatch);
    }
    let op = CalderonCommutator::new(*lip.domain(), lip.m())?;
    let mut inputs: Vec<&GridFunction> = lip.slopes.iter().collect();
    inputs.push(f);
    op.eval(&inputs)
}

fn is_constant(b: &GridFunction) -> bool {
    let v = b.values();
    v.iter().all(|&x| x == v[0])
}

/// `[b, T]_j(f̄)(x) = b(x) T(f̄)(x) - T(…, b f_j, …)(x)` on `target`, inputs restricted to `support`.
pub fn commutator_restricted(
    op: &dyn OperatorHandle,
    b: &GridFunction,
    slot: usize,
    inputs: &[&GridFunction],
    support: &Cube,
    target: &Cube,
) -> Result<Vec<f64>> {
    if slot >= op.arity() {
        return Err(Error::Parameter("slot out of range"));
    }
    if b.domain() != op.domain() {
        return Err(Error::DomainMismatch);
    }
    if is_constant(b) {
        return Ok(vec![0.0; target.cell_count() as usize]);
    }
    let plain = op.eval_restricted(inputs, support, target)?;
    let bf = inputs[slot].mul(b)?;
    let mut swapped: Vec<&GridFunction> = inputs.to_vec();
    swapped[slot] = &bf;
    let moved = op.eval_restricted(&swapped, support, target)?;
    let mut out = Vec::with_capacity(plain.len());
    let mut k = 0;
    target.for_each_cell(|i| {
        out.push(b.values()[i] * plain[k] - moved[k]);
        k += 1;
    });
    Ok(out)
}

/// `[b, T]_j(f̄)` on the whole domain.
pub fn commutator(
    op: &dyn OperatorHandle,
    b: &GridFunction,
    slot: usize,
    inputs: &[&GridFunction],
) -> Result<GridFunction> {
    let whole = op.domain().whole();
    GridFunction::new(
        *op.domain(),
        commutator_restricted(op, b, slot, inputs, &whole, &whole)?,
    )
}

/// `T_b̄(f̄) = Σ_j [b_j, T]_j(f̄)` over the slots carrying a symbol.
pub fn multilinear_commutator(
    op: &dyn OperatorHandle,
    bs: &[Option<&GridFunction>],
    inputs: &[&GridFunction],
) -> Result<GridFunction> {
    if bs.len() != op.arity() {
        return Err(Error::Length {
            expected: op.arity(),
            found: bs.len(),
        });
    }
    let mut total = GridFunction::zeros(*op.domain());
    for (j, b) in bs.iter().enumerate() {
        if let Some(b) = b {
            total = total.add(&commutator(op, b, j, inputs)?)?;
        }
    }
    Ok(total)
}

/// Entry `k` of every slot.
pub(crate) fn slot_entries<'a>(inputs: &'a [&VectorFunction], k: usize) -> Vec<&'a GridFunction> {
    inputs.iter().map(|v| &v.entries()[k]).collect()
}

pub(crate) fn check_vector_inputs(
    op: &dyn OperatorHandle,
    inputs: &[&VectorFunction],
) -> Result<usize> {
    if inputs.len() != op.arity() {
        return Err(Error::Length {
            expected: op.arity(),
            found: inputs.len(),
        });
    }
    let n = inputs[0].len();
    if inputs.iter().any(|v| v.len() != n) {
        return Err(Error::Parameter("all slots need the same sequence length"));
    }
    if inputs.iter().any(|v| v.domain() != op.domain()) {
        return Err(Error::DomainMismatch);
    }
    Ok(n)
}

/// `M_T(f̄)(x) = sup_{Q ∋ x} sup_{ξ ∈ Q} ‖{T(f̄^k)(ξ) - T(f̄^k χ_{3Q})(ξ)}‖_{l^q}`.
pub fn grand_maximal(
    op: &dyn OperatorHandle,
    inputs: &[&VectorFunction],
    q: f64,
    cubes: &CubeCollection,
) -> Result<GridFunction> {
    let n_seq = check_vector_inputs(op, inputs)?;
    if !(q > 0.0) {
        return Err(Error::Parameter("exponent must be positive"));
    }
    if cubes.domain() != Some(*op.domain()) {
        return Err(Error::DomainMismatch);
    }
    let full: Vec<GridFunction> = (0..n_seq)
        .map(|k| op.eval(&slot_entries(inputs, k)))
        .collect::<Result<_>>()?;
    let mut failure = None;
    let out = sup_over_cubes(*op.domain(), cubes, |cube| {
        if failure.is_some() {
            return 0.0;
        }
        let three = match dilate(cube, 3) {
            Ok(c) => c,
            Err(e) => {
                failure = Some(e);
                return 0.0;
            }
        };
        let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(n_seq);
        for (k, fk) in full.iter().enumerate() {
            match op.eval_restricted(&slot_entries(inputs, k), &three, cube) {
                Ok(local) => {
                    let mut d = Vec::with_capacity(local.len());
                    let mut t = 0;
                    cube.for_each_cell(|i| {
                        d.push(fk.values()[i] - local[t]);
                        t += 1;
                    });
                    diffs.push(d);
                }
                Err(e) => {
                    failure = Some(e);
                    return 0.0;
                }
            }
        }
        (0..diffs[0].len())
            .map(|t| lq_combine(diffs.iter().map(|d| d[t]), q))
            .fold(0.0, f64::max)
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
