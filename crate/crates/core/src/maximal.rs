//! Maximal operators over a chosen collection of cubes.

use alloc::vec;
use alloc::vec::Vec;

pub use crate::dyadic::CubeCollection;
use crate::dyadic::{Cube, DyadicGrid};
use crate::error::{Error, Result};
use crate::localnorms::llogl_norm;
use crate::math;
use crate::mesh::{Domain, GridFunction, PrefixSum};
use crate::weights::Weight;

fn check(f: &GridFunction, cubes: &CubeCollection) -> Result<()> {
    if cubes.is_empty() {
        return Err(Error::Parameter("empty cube collection"));
    }
    if cubes.domain() != Some(*f.domain()) {
        return Err(Error::DomainMismatch);
    }
    Ok(())
}

/// Cellwise `max_{Q ∋ x} value(Q)` over the collection; zero where no cube applies.
///
/// In 1D the all-interval collection is handled in `O(N^2)` calls by a
/// suffix maximum over right endpoints for every left endpoint.
pub fn sup_over_cubes(
    domain: Domain,
    cubes: &CubeCollection,
    mut value: impl FnMut(&Cube) -> f64,
) -> GridFunction {
    let mut out = vec![0.0f64; domain.cell_count()];
    match cubes {
        CubeCollection::AllMeshAligned(d) if d.dim() == 1 => {
            let n = d.axis_cells();
            let mut suffix = vec![0.0f64; n + 1];
            for i in 0..n {
                let mut run = 0.0f64;
                for j in (i + 1..=n).rev() {
                    let q = Cube::from_box(*d, [i as i64, 0], [(j - i) as i64, 1]);
                    run = run.max(value(&q));
                    suffix[j] = run;
                }
                for x in i..n {
                    if suffix[x + 1] > out[x] {
                        out[x] = suffix[x + 1];
                    }
                }
            }
        }
        _ => cubes.for_each_cube(|q| {
            let v = value(q);
            q.for_each_cell(|i| {
                if v > out[i] {
                    out[i] = v;
                }
            });
        }),
    }
    GridFunction::new(domain, out).expect("sized to the domain")
}

/// Hardy–Littlewood maximal function `sup_{Q ∋ x} ⟨|f|⟩_Q`.
pub fn hl_maximal(f: &GridFunction, cubes: &CubeCollection) -> Result<GridFunction> {
    check(f, cubes)?;
    let ps = PrefixSum::new(&f.abs());
    Ok(sup_over_cubes(*f.domain(), cubes, |q| ps.mean(q)))
}

/// `M_τ f = (M |f|^τ)^{1/τ}`.
pub fn m_tau(f: &GridFunction, tau: f64, cubes: &CubeCollection) -> Result<GridFunction> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Parameter("tau must lie in (0, 1)"));
    }
    let m = hl_maximal(&f.map(|v| math::abs_pow(v, tau)), cubes)?;
    Ok(m.map(|v| math::abs_pow(v, 1.0 / tau)))
}

/// `sup_{I ∋ x, I ∈ grid} (u(I)^{-1} ∫_I |f|^ρ u)^{1/ρ}`.
pub fn dyadic_weighted_maximal(
    f: &GridFunction,
    u: &Weight,
    rho: f64,
    grid: &DyadicGrid,
) -> Result<GridFunction> {
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(Error::Parameter("rho must be at least 1"));
    }
    if f.domain() != grid.domain() || u.domain() != grid.domain() {
        return Err(Error::DomainMismatch);
    }
    let fu = f.zip_with(u.as_function(), |a, w| math::abs_pow(a, rho) * w)?;
    let pf = PrefixSum::new(&fu);
    let pu = PrefixSum::new(u.as_function());
    let m = sup_over_cubes(*f.domain(), &CubeCollection::Dyadic(*grid), |q| {
        pf.sum(q) / pu.sum(q)
    });
    Ok(m.map(|v| math::abs_pow(v, 1.0 / rho)))
}

/// Mean absolute deviation from the lower median.
fn min_mean_deviation(buf: &mut [f64]) -> f64 {
    let mid = (buf.len() - 1) / 2;
    let (_, &mut c, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    buf.iter().map(|v| (v - c).abs()).sum::<f64>() / buf.len() as f64
}

/// `M♯_{D,δ} f = [sup_{Q ∋ x} inf_c ⟨||f|^δ - c|⟩_Q]^{1/δ}` over one grid.
pub fn sharp_maximal(f: &GridFunction, delta: f64, grid: &DyadicGrid) -> Result<GridFunction> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter("delta must lie in (0, 1)"));
    }
    if f.domain() != grid.domain() {
        return Err(Error::DomainMismatch);
    }
    let g = f.map(|v| math::abs_pow(v, delta));
    let mut buf = Vec::new();
    let m = sup_over_cubes(*f.domain(), &CubeCollection::Dyadic(*grid), |q| {
        buf.clear();
        q.for_each_cell(|i| buf.push(g.values()[i]));
        min_mean_deviation(&mut buf)
    });
    Ok(m.map(|v| math::abs_pow(v, 1.0 / delta)))
}

/// `sup_{Q ∋ x} Π_j ‖f_j‖_{L(log L)^{β_j}, Q}`.
pub fn multilinear_orlicz_maximal(
    fs: &[&GridFunction],
    betas: &[f64],
    cubes: &CubeCollection,
) -> Result<GridFunction> {
    if fs.is_empty() || fs.len() != betas.len() {
        return Err(Error::Parameter("one beta per function is required"));
    }
    if betas.iter().any(|&b| !(b >= 0.0)) {
        return Err(Error::Parameter("beta must be nonnegative"));
    }
    for f in fs {
        check(f, cubes)?;
    }
    let domain = *fs[0].domain();
    if betas.iter().all(|&b| b == 0.0) {
        let sums: Vec<PrefixSum> = fs.iter().map(|f| PrefixSum::new(&f.abs())).collect();
        return Ok(sup_over_cubes(domain, cubes, |q| {
            sums.iter().map(|s| s.mean(q)).product()
        }));
    }
    let mut buf = Vec::new();
    Ok(sup_over_cubes(domain, cubes, |q| {
        let mut v = 1.0;
        for (f, &b) in fs.iter().zip(betas) {
            buf.clear();
            q.for_each_cell(|i| buf.push(f.values()[i]));
            v *= llogl_norm(&buf, b);
            if v == 0.0 {
                break;
            }
        }
        v
    }))
}

/// `M_C(uχ_Q)` on the cells of `q` (row-major within `q`), given prefix sums of `u`.
pub(crate) fn local_maximal(pu: &PrefixSum, q: &Cube, cubes: &CubeCollection) -> Vec<f64> {
    let [qx, qy] = q.corner();
    let [ex, ey] = q.extent();
    let mut out = vec![0.0f64; (ex * ey) as usize];
    let mut scatter = |r: &Cube, v: f64| {
        let [rx, ry] = r.corner();
        let [rex, rey] = r.extent();
        for y in ry..ry + rey {
            for x in rx..rx + rex {
                let k = ((y - qy) * ex + (x - qx)) as usize;
                if v > out[k] {
                    out[k] = v;
                }
            }
        }
    };
    match cubes {
        CubeCollection::AllMeshAligned(d) if d.dim() == 1 => {
            // shrinking an interval to its part inside q only raises the average
            let n = ex as usize;
            let a = qx as usize;
            let mut suffix = vec![0.0f64; n + 1];
            for i in 0..n {
                let mut run = 0.0f64;
                for j in (i + 1..=n).rev() {
                    run = run.max(pu.range_sum(a + i, a + j) / (j - i) as f64);
                    suffix[j] = run;
                }
                for x in i..n {
                    if suffix[x + 1] > out[x] {
                        out[x] = suffix[x + 1];
                    }
                }
            }
        }
        CubeCollection::Dyadic(_) | CubeCollection::UnionOfShifted(_) => {
            for g in cubes.grids() {
                for k in g.levels() {
                    for r in g.cubes_at_within(k, q) {
                        let part = r.intersect(q).expect("grid cube meets q");
                        scatter(&part, pu.sum(&part) / r.cell_count() as f64);
                    }
                }
            }
        }
        _ => cubes.for_each_cube(|r| {
            if let Some(part) = r.intersect(q) {
                scatter(&part, pu.sum(&part) / r.cell_count() as f64);
            }
        }),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::dyadic_descendants;

    fn d1() -> Domain {
        Domain::new(1, 0, 2).unwrap()
    }

    #[test]
    fn constant_is_fixed() {
        let d = d1();
        let one = GridFunction::constant(d, 1.0);
        for c in [
            CubeCollection::AllMeshAligned(d),
            CubeCollection::UnionOfShifted(d),
        ] {
            let m = hl_maximal(&one, &c).unwrap();
            assert!(m.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
            let t = m_tau(&one.scale(3.0), 0.5, &c).unwrap();
            assert!(t.values().iter().all(|&v| (v - 3.0).abs() < 1e-12));
        }
    }

    #[test]
    fn half_indicator_tail() {
        let d = Domain::new(1, 0, 3).unwrap();
        let f = GridFunction::from_fn(d, |x| if (0.0..0.5).contains(&x[0]) { 1.0 } else { 0.0 });
        let m = hl_maximal(&f, &CubeCollection::AllMeshAligned(d)).unwrap();
        for i in d.edge_index(0.5) as usize..d.axis_cells() {
            let right = d.edge(i as i64 + 1);
            assert!((m.values()[i] - 0.5 / right).abs() < 1e-12);
            assert!(m.values()[i] >= f.values()[i]);
        }
    }

    #[test]
    fn sharp_examples() {
        let d = Domain::new(1, 0, 3).unwrap();
        let g = DyadicGrid::standard(d);
        let c = GridFunction::constant(d, 2.0);
        assert!(sharp_maximal(&c, 0.5, &g)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let f = GridFunction::from_fn(d, |x| if (0.0..0.5).contains(&x[0]) { 1.0 } else { 0.0 });
        let m = sharp_maximal(&f, 0.5, &g).unwrap();
        let i = d.edge_index(0.75) as usize;
        assert!((m.values()[i] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn orlicz_maximal_examples() {
        let d = Domain::new(1, 0, 3).unwrap();
        let f = GridFunction::from_fn(d, |x| if (0.0..0.5).contains(&x[0]) { 1.0 } else { 0.0 });
        let all = CubeCollection::AllMeshAligned(d);
        let m = multilinear_orlicz_maximal(&[&f, &f], &[0.0, 0.0], &all).unwrap();
        assert!((m.values()[d.edge_index(0.25) as usize] - 1.0).abs() < 1e-14);
        let single = multilinear_orlicz_maximal(&[&f], &[0.0], &all).unwrap();
        assert_eq!(single, hl_maximal(&f, &all).unwrap());
        let z = GridFunction::zeros(d);
        let mz =
            multilinear_orlicz_maximal(&[&f, &z], &[1.0, 0.5], &CubeCollection::UnionOfShifted(d))
                .unwrap();
        assert!(mz.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weighted_dyadic_reduces() {
        let d = Domain::new(1, 0, 2).unwrap();
        let g = DyadicGrid::standard(d);
        let f = GridFunction::from_fn(d, |x| libm::cos(5.0 * x[0]));
        let a = dyadic_weighted_maximal(&f, &Weight::unit(d), 1.0, &g).unwrap();
        let b = hl_maximal(&f, &CubeCollection::Dyadic(g)).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn local_maximal_of_unit_weight() {
        let d = Domain::new(1, 0, 2).unwrap();
        let u = GridFunction::constant(d, 1.0);
        let pu = PrefixSum::new(&u);
        let q = Cube::interval(d, 0.0, 0.5).unwrap();
        for c in [
            CubeCollection::AllMeshAligned(d),
            CubeCollection::UnionOfShifted(d),
            CubeCollection::Explicit(dyadic_descendants(&q)),
        ] {
            let m = local_maximal(&pu, &q, &c);
            assert!(m.iter().all(|&v| (v - 1.0).abs() < 1e-14), "{}", c.tag());
        }
    }
}
