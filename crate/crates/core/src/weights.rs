//! Weights and the constants `[w]_{A_p}`, `[u]_{A_∞}` and `[w̄]_{A_P̄}`.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::dyadic::{Cube, CubeCollection};
use crate::error::{Error, Result};
use crate::math;
use crate::maximal::local_maximal;
use crate::mesh::{Domain, GridFunction, PrefixSum};

/// Smallest value a weight may take.
pub const WEIGHT_FLOOR: f64 = 1e-8;

/// A positive function, floored at [`WEIGHT_FLOOR`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Weight(GridFunction);

impl Weight {
    /// Rejects nonpositive or non-finite cells and lifts small ones to the floor.
    pub fn new(f: GridFunction) -> Result<Self> {
        for (cell, &value) in f.values().iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Weight { cell, value });
            }
        }
        Ok(Self(f.map(|v| v.max(WEIGHT_FLOOR))))
    }

    pub fn unit(domain: Domain) -> Self {
        Self(GridFunction::constant(domain, 1.0))
    }

    pub fn as_function(&self) -> &GridFunction {
        &self.0
    }

    pub fn into_function(self) -> GridFunction {
        self.0
    }

    pub fn domain(&self) -> &Domain {
        self.0.domain()
    }

    /// `w^e`, floored again.
    pub fn powf(&self, e: f64) -> Self {
        Self(self.0.map(|v| math::powf(v, e).max(WEIGHT_FLOOR)))
    }

    /// `w(Q)`.
    pub fn measure(&self, q: &Cube) -> f64 {
        let mut s = 0.0;
        q.for_each_cell(|i| s += self.0.values()[i]);
        s * self.0.domain().cell_measure()
    }
}

/// Exponents `p_1, …, p_m ≥ 1` and `1/p = Σ 1/p_j`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ExponentTuple {
    ps: Vec<f64>,
    p: f64,
}

impl ExponentTuple {
    pub fn new(ps: &[f64]) -> Result<Self> {
        if ps.is_empty() {
            return Err(Error::Parameter("empty exponent tuple"));
        }
        if ps.iter().any(|&p| !(p >= 1.0 && p.is_finite())) {
            return Err(Error::Parameter("exponents must be finite and at least 1"));
        }
        let inv: f64 = ps.iter().map(|p| 1.0 / p).sum();
        Ok(Self {
            ps: ps.to_vec(),
            p: 1.0 / inv,
        })
    }

    pub fn m(&self) -> usize {
        self.ps.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.ps
    }

    pub fn p_j(&self, j: usize) -> f64 {
        self.ps[j]
    }

    /// The combined exponent `p`.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// `p_j' = p_j / (p_j - 1)`, infinite when `p_j = 1`.
    pub fn dual(&self, j: usize) -> f64 {
        let pj = self.ps[j];
        if pj == 1.0 {
            f64::INFINITY
        } else {
            pj / (pj - 1.0)
        }
    }

    /// `max{1, p_1'/p, …, p_m'/p}`.
    pub fn sharp_power(&self) -> f64 {
        (0..self.m()).fold(1.0f64, |m, j| m.max(self.dual(j) / self.p))
    }
}

/// Weights `w_1, …, w_m` with `ν = Π w_k^{p/p_k}` and `σ_j = w_j^{-1/(p_j-1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSystem {
    weights: Vec<Weight>,
    exponents: ExponentTuple,
    nu: Weight,
    sigmas: Vec<Option<Weight>>,
}

impl WeightSystem {
    pub fn new(weights: Vec<Weight>, exponents: ExponentTuple) -> Result<Self> {
        if weights.len() != exponents.m() {
            return Err(Error::Length {
                expected: exponents.m(),
                found: weights.len(),
            });
        }
        let domain = *weights[0].domain();
        if weights.iter().any(|w| *w.domain() != domain) {
            return Err(Error::DomainMismatch);
        }
        let p = exponents.p();
        let mut nu = vec![1.0; domain.cell_count()];
        for (w, &pk) in weights.iter().zip(exponents.exponents()) {
            let e = p / pk;
            for (n, &v) in nu.iter_mut().zip(w.0.values()) {
                *n *= math::powf(v, e);
            }
        }
        let nu = Weight::new(GridFunction::new(domain, nu)?)?;
        let sigmas = weights
            .iter()
            .zip(exponents.exponents())
            .map(|(w, &pk)| (pk > 1.0).then(|| w.powf(-1.0 / (pk - 1.0))))
            .collect();
        Ok(Self {
            weights,
            exponents,
            nu,
            sigmas,
        })
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn exponents(&self) -> &ExponentTuple {
        &self.exponents
    }

    pub fn nu(&self) -> &Weight {
        &self.nu
    }

    /// `σ_j`, absent when `p_j = 1`.
    pub fn sigma(&self, j: usize) -> Option<&Weight> {
        self.sigmas[j].as_ref()
    }

    pub fn domain(&self) -> &Domain {
        self.nu.domain()
    }
}

fn check_collection(cubes: &CubeCollection, domain: &Domain) -> Result<()> {
    if cubes.is_empty() {
        return Err(Error::Parameter("empty cube collection"));
    }
    if cubes.domain() != Some(*domain) {
        return Err(Error::DomainMismatch);
    }
    Ok(())
}

/// Maximum of `value(Q)` over the collection. Cube values must be nonnegative.
fn max_over(cubes: &CubeCollection, mut value: impl FnMut(&Cube) -> f64) -> f64 {
    let mut best = 0.0f64;
    cubes.for_each_cube(|q| best = best.max(value(q)));
    best
}

/// Range minimum over 1D cells, or a direct scan in 2D.
struct MinTable {
    domain: Domain,
    values: Vec<f64>,
    levels: Vec<Vec<f64>>,
}

impl MinTable {
    fn new(f: &GridFunction) -> Self {
        let mut levels = Vec::new();
        if f.domain().dim() == 1 {
            let n = f.values().len();
            let mut cur = f.values().to_vec();
            let mut w = 1;
            while 2 * w <= n {
                let next: Vec<f64> = (0..=cur.len() - 2 * w)
                    .map(|i| cur[i].min(cur[i + w]))
                    .collect();
                levels.push(core::mem::replace(&mut cur, next));
                w *= 2;
            }
            levels.push(cur);
        }
        Self {
            domain: *f.domain(),
            values: f.values().to_vec(),
            levels,
        }
    }

    fn min(&self, q: &Cube) -> f64 {
        if self.domain.dim() == 1 {
            let a = q.corner()[0] as usize;
            let len = q.extent()[0] as usize;
            let lvl = (usize::BITS - 1 - len.leading_zeros()) as usize;
            let w = 1usize << lvl;
            self.levels[lvl][a].min(self.levels[lvl][a + len - w])
        } else {
            let mut m = f64::INFINITY;
            q.for_each_cell(|i| m = m.min(self.values[i]));
            m
        }
    }
}

/// `max_Q ⟨w⟩_Q ⟨w^{-1/(p-1)}⟩_Q^{p-1}`.
pub fn ap_constant(w: &Weight, p: f64, cubes: &CubeCollection) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Parameter("A_p needs 1 < p < ∞"));
    }
    check_collection(cubes, w.domain())?;
    let e = -1.0 / (p - 1.0);
    let sigma = w.0.map(|v| math::powf(v, e));
    let pw = PrefixSum::new(&w.0);
    let ps = PrefixSum::new(&sigma);
    Ok(max_over(cubes, |q| {
        pw.mean(q) * math::powf(ps.mean(q), p - 1.0)
    }))
}

/// Fujii–Wilson constant `max_Q u(Q)^{-1} ∫_Q M(uχ_Q)`, with `M` over the same collection.
pub fn ainfty_constant(u: &Weight, cubes: &CubeCollection) -> Result<f64> {
    check_collection(cubes, u.domain())?;
    let pu = PrefixSum::new(&u.0);
    let mut best = 0.0f64;
    let mut visit = |q: &Cube| {
        let m = local_maximal(&pu, q, cubes);
        let total: f64 = m.iter().sum();
        best = best.max(total / pu.sum(q));
    };
    match cubes {
        // grid levels repeat clipped cubes; visit each once
        CubeCollection::Dyadic(_) | CubeCollection::UnionOfShifted(_) => {
            cubes.to_vec().iter().for_each(&mut visit)
        }
        _ => cubes.for_each_cube(visit),
    }
    Ok(best)
}

/// `max_Q ⟨ν⟩_Q Π_k ⟨σ_k⟩_Q^{p/p_k'}`, with `(min_Q w_k)^{-p}` for `p_k = 1`.
pub fn multi_ap_constant(ws: &WeightSystem, cubes: &CubeCollection) -> Result<f64> {
    check_collection(cubes, ws.domain())?;
    let p = ws.exponents.p();
    let pn = PrefixSum::new(&ws.nu.0);
    enum Factor {
        Avg(PrefixSum, f64),
        Inf(MinTable),
    }
    let factors: Vec<Factor> = (0..ws.exponents.m())
        .map(|k| match &ws.sigmas[k] {
            Some(s) => Factor::Avg(PrefixSum::new(&s.0), p / ws.exponents.dual(k)),
            None => Factor::Inf(MinTable::new(&ws.weights[k].0)),
        })
        .collect();
    Ok(max_over(cubes, |q| {
        let mut v = pn.mean(q);
        for f in &factors {
            v *= match f {
                Factor::Avg(ps, e) => math::powf(ps.mean(q), *e),
                Factor::Inf(t) => math::powf(t.min(q), -p),
            };
        }
        v
    }))
}

/// `|x|^a` averaged exactly over every cell of a 1D domain.
pub fn power_weight(a: f64, domain: Domain) -> Result<Weight> {
    if domain.dim() != 1 {
        return Err(Error::Unsupported("power weights are one-dimensional"));
    }
    if !(a.abs() < 1.0) {
        return Err(Error::Parameter(
            "power weight exponent must satisfy |a| < 1",
        ));
    }
    if a == 0.0 {
        return Ok(Weight::unit(domain));
    }
    let f = GridFunction::from_antiderivative(domain, |x| {
        let v = math::powf(x.abs(), a + 1.0) / (a + 1.0);
        if x < 0.0 {
            -v
        } else {
            v
        }
    })?;
    Weight::new(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::dyadic_descendants;

    fn two_cell() -> (Domain, Weight, CubeCollection) {
        let d = Domain::new(1, 0, 1).unwrap();
        let w = GridFunction::from_fn(d, |x| if (0.0..0.5).contains(&x[0]) { 2.0 } else { 1.0 });
        let q = Cube::interval(d, 0.0, 1.0).unwrap();
        let cubes = CubeCollection::Explicit(vec![q, children(&q)[0], children(&q)[1]]);
        (d, Weight::new(w).unwrap(), cubes)
    }

    fn children(q: &Cube) -> Vec<Cube> {
        crate::dyadic::children(q).unwrap()
    }

    #[test]
    fn unit_weight_constants() {
        let d = Domain::new(1, 0, 2).unwrap();
        let u = Weight::unit(d);
        let c = CubeCollection::UnionOfShifted(d);
        assert!((ap_constant(&u, 2.0, &c).unwrap() - 1.0).abs() < 1e-14);
        assert!((ainfty_constant(&u, &c).unwrap() - 1.0).abs() < 1e-14);
        let e = ExponentTuple::new(&[2.0, 3.0]).unwrap();
        let ws = WeightSystem::new(vec![u.clone(), u], e).unwrap();
        assert!((multi_ap_constant(&ws, &c).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_cell_ap() {
        let (_, w, cubes) = two_cell();
        assert!((ap_constant(&w, 2.0, &cubes).unwrap() - 1.125).abs() < 1e-14);
    }

    #[test]
    fn constant_weights_multi_ap() {
        let d = Domain::new(1, 0, 2).unwrap();
        let e = ExponentTuple::new(&[1.5, 4.0]).unwrap();
        let ws = WeightSystem::new(
            vec![
                Weight::new(GridFunction::constant(d, 3.0)).unwrap(),
                Weight::new(GridFunction::constant(d, 0.2)).unwrap(),
            ],
            e,
        )
        .unwrap();
        let c = CubeCollection::Explicit(dyadic_descendants(&Cube::interval(d, 0.0, 1.0).unwrap()));
        assert!((multi_ap_constant(&ws, &c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_weight_cells() {
        let d = Domain::new(1, 0, 3).unwrap();
        assert_eq!(power_weight(0.0, d).unwrap(), Weight::unit(d));
        let w = power_weight(0.5, d).unwrap();
        let h = d.cell_width();
        let i = d.edge_index(0.0) as usize;
        let expect = (2.0 / 3.0) * h.sqrt();
        assert!((w.as_function().values()[i] - expect).abs() < 1e-13);
        assert!(power_weight(1.0, d).is_err());
    }

    #[test]
    fn exponent_tuple() {
        let e = ExponentTuple::new(&[2.0, 2.0]).unwrap();
        assert_eq!(e.p(), 1.0);
        assert_eq!(e.dual(0), 2.0);
        assert_eq!(e.sharp_power(), 2.0);
        assert!(ExponentTuple::new(&[0.5]).is_err());
    }
}
