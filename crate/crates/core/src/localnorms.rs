//! Local averages, `L(log L)^β` Luxemburg norms and exponential oscillation.

use alloc::vec::Vec;

use crate::dyadic::{Cube, CubeCollection};
use crate::error::{Error, Result};
use crate::math;
use crate::mesh::GridFunction;
use crate::weights::Weight;

/// Relative width at which the bisections stop.
const REL_TOL: f64 = 1e-12;

/// Young function family of a local norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrliczParams {
    /// `t log^β(1 + t)`, `β ≥ 0`.
    LlogL(f64),
    /// `exp(t^s)` normalized by `2`, `s ≥ 1`.
    Exp(f64),
}

impl OrliczParams {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::LlogL(b) if b >= 0.0 => Ok(()),
            Self::Exp(s) if s >= 1.0 => Ok(()),
            _ => Err(Error::Parameter("Orlicz exponent out of range")),
        }
    }

    /// Local norm of `f` on `q`.
    pub fn norm(&self, f: &GridFunction, q: &Cube) -> Result<f64> {
        self.validate()?;
        check_domain(f, q)?;
        let values = f.gather(q);
        Ok(match *self {
            Self::LlogL(b) => llogl_norm(&values, b),
            Self::Exp(s) => exp_norm(&values, s),
        })
    }
}

fn check_domain(f: &GridFunction, q: &Cube) -> Result<()> {
    if f.domain() != q.domain() {
        Err(Error::DomainMismatch)
    } else {
        Ok(())
    }
}

/// `(1/u(Q)) ∫_Q f u`, or the plain mean when `u` is absent.
pub fn average(f: &GridFunction, q: &Cube, u: Option<&Weight>) -> Result<f64> {
    check_domain(f, q)?;
    match u {
        None => {
            let mut s = 0.0;
            q.for_each_cell(|i| s += f.values()[i]);
            Ok(s / q.cell_count() as f64)
        }
        Some(u) => {
            check_domain(u.as_function(), q)?;
            let (mut num, mut den) = (0.0, 0.0);
            q.for_each_cell(|i| {
                let ui = u.as_function().values()[i];
                num += f.values()[i] * ui;
                den += ui;
            });
            Ok(num / den)
        }
    }
}

#[inline]
fn phi_llogl(t: f64, beta: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if beta == 1.0 {
        t * math::ln_1p(t)
    } else {
        t * math::powf(math::ln_1p(t), beta)
    }
}

fn phi_average(values: &[f64], lambda: f64, beta: f64) -> f64 {
    let inv = 1.0 / lambda;
    values
        .iter()
        .map(|&v| phi_llogl(v.abs() * inv, beta))
        .sum::<f64>()
        / values.len() as f64
}

/// Geometric bisection for the smallest `λ` with `g(λ) ≤ 1`, `g` decreasing.
/// Returns the upper end of the final bracket.
fn bisect_decreasing(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    while hi / lo - 1.0 > REL_TOL {
        let mid = math::sqrt(lo * hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Luxemburg `L(log L)^β` norm of a list of cell values with equal weights.
pub(crate) fn llogl_norm(values: &[f64], beta: f64) -> f64 {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let mean = values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64;
    if beta == 0.0 {
        return mean;
    }
    let g = |l: f64| phi_average(values, l, beta);
    let mut hi = mean;
    while g(hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = max * math::powi(2.0, -60);
    while g(lo) <= 1.0 {
        lo *= 0.5;
    }
    bisect_decreasing(lo, hi, g)
}

/// Smallest `C` with `mean exp((|v|/C)^s) ≤ 2`; zero for zero data.
pub(crate) fn exp_norm(values: &[f64], s: f64) -> f64 {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let n = values.len() as f64;
    let g = |c: f64| {
        values
            .iter()
            .map(|&v| math::exp(math::powf(v.abs() / c, s)))
            .sum::<f64>()
            / (2.0 * n)
    };
    // at this C every term is at most 2
    let hi = max / math::powf(core::f64::consts::LN_2, 1.0 / s);
    let mut lo = 0.5 * hi;
    while g(lo) <= 1.0 {
        lo *= 0.5;
    }
    bisect_decreasing(lo, hi, g)
}

/// `‖f‖_{L(log L)^β, Q}`.
pub fn orlicz_llogl(f: &GridFunction, q: &Cube, beta: f64) -> Result<f64> {
    OrliczParams::LlogL(beta).norm(f, q)
}

/// `sup_Q ‖b - ⟨b⟩_Q‖_{exp L^s, Q}` over the collection.
pub fn osc_exp_ls(b: &GridFunction, s: f64, cubes: &CubeCollection) -> Result<f64> {
    OrliczParams::Exp(s).validate()?;
    if cubes.is_empty() {
        return Err(Error::Parameter("empty cube collection"));
    }
    if cubes.domain() != Some(*b.domain()) {
        return Err(Error::DomainMismatch);
    }
    let mut best = 0.0f64;
    let mut buf: Vec<f64> = Vec::new();
    cubes.for_each_cube(|q| {
        buf.clear();
        q.for_each_cell(|i| buf.push(b.values()[i]));
        let mean = buf.iter().sum::<f64>() / buf.len() as f64;
        for v in buf.iter_mut() {
            *v -= mean;
        }
        best = best.max(exp_norm(&buf, s));
    });
    Ok(best)
}

/// `⟨|fg|⟩_Q / (‖f‖_{L(log L)^β,Q} ‖g‖_{exp L^{1/β},Q})`, with `L^∞` for `g` when `β = 0`.
///
/// A zero denominator yields `+∞`.
pub fn holder_orlicz_check(f: &GridFunction, g: &GridFunction, q: &Cube, beta: f64) -> Result<f64> {
    if beta < 0.0 {
        return Err(Error::Parameter("beta must be nonnegative"));
    }
    check_domain(f, q)?;
    check_domain(g, q)?;
    let fv = f.gather(q);
    let gv = g.gather(q);
    let num = fv.iter().zip(&gv).map(|(a, b)| (a * b).abs()).sum::<f64>() / fv.len() as f64;
    let nf = llogl_norm(&fv, beta);
    let ng = if beta == 0.0 {
        gv.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        exp_norm(&gv, 1.0 / beta)
    };
    let den = nf * ng;
    Ok(if den > 0.0 { num / den } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::dyadic_descendants;
    use crate::mesh::Domain;

    fn setup() -> (Domain, Cube) {
        let d = Domain::new(1, 0, 3).unwrap();
        (d, Cube::interval(d, 0.0, 1.0).unwrap())
    }

    #[test]
    fn average_examples() {
        let (d, q) = setup();
        let f = GridFunction::indicator(&Cube::interval(d, 0.0, 0.5).unwrap(), 1.0);
        assert_eq!(average(&f, &q, None).unwrap(), 0.5);
        let c = GridFunction::constant(d, 2.5);
        let u = Weight::new(GridFunction::from_fn(d, |x| 1.0 + x[0] * x[0])).unwrap();
        assert!((average(&c, &q, Some(&u)).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn constant_llogl() {
        let (d, q) = setup();
        let one = GridFunction::constant(d, 1.0);
        let lam = orlicz_llogl(&one, &q, 1.0).unwrap();
        // 1/λ solves u·ln(1+u) = 1
        let u = 1.0 / lam;
        assert!((u * libm::log1p(u) - 1.0).abs() < 1e-10);
        assert!((lam - 0.8065).abs() < 1e-3);
        assert_eq!(orlicz_llogl(&GridFunction::zeros(d), &q, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn oscillation_of_sign_step() {
        let (d, q) = setup();
        let b = GridFunction::from_fn(d, |x| if x[0] < 0.5 { 1.0 } else { -1.0 });
        let cubes = CubeCollection::Explicit(dyadic_descendants(&q));
        let c = osc_exp_ls(&b, 1.0, &cubes).unwrap();
        assert!((c - 1.0 / core::f64::consts::LN_2).abs() < 1e-10);
        let two = osc_exp_ls(&b.scale(2.0), 1.0, &cubes).unwrap();
        assert!((two - 2.0 * c).abs() < 1e-10);
        let flat = GridFunction::constant(d, 3.0);
        assert_eq!(osc_exp_ls(&flat, 2.0, &cubes).unwrap(), 0.0);
    }

    #[test]
    fn holder_examples() {
        let (d, q) = setup();
        let f = GridFunction::from_fn(d, |x| x[0] * x[0] + 0.1);
        let one = GridFunction::constant(d, 1.0);
        assert!((holder_orlicz_check(&f, &one, &q, 0.0).unwrap() - 1.0).abs() < 1e-14);
        let c = GridFunction::constant(d, 3.0);
        assert!(holder_orlicz_check(&c, &c, &q, 1.0).unwrap() <= 1.0);
        let z = GridFunction::zeros(d);
        assert_eq!(holder_orlicz_check(&z, &c, &q, 1.0).unwrap(), f64::INFINITY);
    }
}
