//! Input generators. Every profile is described physically, so the same
//! profile sampled at two resolutions gives the same function up to cell averaging.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparsedom::{Domain, GridFunction, VectorFunction};

/// Breakpoints of random step functions are multiples of this width.
pub const STEP_WIDTH: f64 = 1.0 / 64.0;

/// Random inputs live in `[-SUPPORT, SUPPORT)`, inside the central third of `[-1, 1)`.
pub const SUPPORT: f64 = 20.0 * STEP_WIDTH;

#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `values[i]` on `[lo + i·w, lo + (i+1)·w)` with `w = STEP_WIDTH`.
    Step {
        lo: f64,
        values: Vec<f64>,
    },
    /// `c·|x|^e` on `[lo, hi)`, `e > -1`.
    Power {
        c: f64,
        e: f64,
        lo: f64,
        hi: f64,
    },
    /// `ln|x - at|` on `[lo, hi)`.
    Log {
        at: f64,
        lo: f64,
        hi: f64,
    },
    /// `c·exp(1 - 1/(1 - ((x - at)/r)^2))` on `|x - at| < r`, sampled at cell centres.
    Bump {
        c: f64,
        at: f64,
        r: f64,
    },
    Sum(Vec<Profile>),
}

impl Profile {
    pub fn indicator(lo: f64, hi: f64) -> Self {
        Self::Power {
            c: 1.0,
            e: 0.0,
            lo,
            hi,
        }
    }

    /// Cell averages on a one-dimensional domain.
    pub fn sample(&self, d: Domain) -> GridFunction {
        match self {
            Self::Step { lo, values } => {
                let (lo, values) = (*lo, values.clone());
                antiderivative(d, move |x| {
                    let t = ((x - lo) / STEP_WIDTH).max(0.0);
                    let k = (t.floor() as usize).min(values.len());
                    let full: f64 = values[..k].iter().sum();
                    let part = if k < values.len() {
                        values[k] * (t - k as f64)
                    } else {
                        0.0
                    };
                    (full + part) * STEP_WIDTH
                })
            }
            &Self::Power { c, e, lo, hi } => antiderivative(d, move |x| {
                let t = x.clamp(lo, hi);
                c * t.signum() * t.abs().powf(e + 1.0) / (e + 1.0)
            }),
            &Self::Log { at, lo, hi } => antiderivative(d, move |x| {
                let u = x.clamp(lo, hi) - at;
                if u == 0.0 {
                    0.0
                } else {
                    u * u.abs().ln() - u
                }
            }),
            &Self::Bump { c, at, r } => GridFunction::from_fn(d, |p| {
                let s = (p[0] - at) / r;
                if s.abs() < 1.0 {
                    c * (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }),
            Self::Sum(parts) => parts
                .iter()
                .map(|p| p.sample(d))
                .reduce(|a, b| a.add(&b).expect("same domain"))
                .unwrap_or_else(|| GridFunction::zeros(d)),
        }
    }
}

fn antiderivative(d: Domain, f: impl Fn(f64) -> f64) -> GridFunction {
    GridFunction::from_antiderivative(d, f).expect("harness domains are one-dimensional")
}

/// Generator for case `case` of a run seeded with `seed`; independent of the resolution.
pub fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (case as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Random step function on a random subinterval of `[-SUPPORT, SUPPORT)`, values in `[lo, hi)`.
pub fn random_step(rng: &mut impl Rng, lo: f64, hi: f64) -> Profile {
    let slots = (2.0 * SUPPORT / STEP_WIDTH) as usize;
    let start = rng.random_range(0..slots / 2);
    let len = rng.random_range(4..=slots - start);
    let values = (0..len).map(|_| rng.random_range(lo..hi)).collect();
    Profile::Step {
        lo: -SUPPORT + start as f64 * STEP_WIDTH,
        values,
    }
}

/// `ln|x - c|` on the whole of `[-1, 1)` with `c` drawn from `[-1/4, 1/4]`.
pub fn random_log(rng: &mut impl Rng) -> Profile {
    Profile::Log {
        at: rng.random_range(-0.25..=0.25),
        lo: -1.0,
        hi: 1.0,
    }
}

/// One vector-valued input per slot, each a sequence of `n_seq` sampled profiles.
pub fn sample_slots(d: Domain, slots: &[Vec<Profile>]) -> Vec<VectorFunction> {
    slots
        .iter()
        .map(|seq| {
            VectorFunction::new(seq.iter().map(|p| p.sample(d)).collect())
                .expect("sequences are nonempty and share the domain")
        })
        .collect()
}

/// `arity` slots of `n_seq` random steps with values in `[-1, 1)`.
pub fn random_slots(rng: &mut impl Rng, arity: usize, n_seq: usize) -> Vec<Vec<Profile>> {
    (0..arity)
        .map(|_| (0..n_seq).map(|_| random_step(rng, -1.0, 1.0)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_sample_to_cell_averages() {
        let p = Profile::Step {
            lo: -0.25,
            values: vec![1.0, -2.0, 3.0],
        };
        for r in [7, 9] {
            let d = Domain::unit(1, r).unwrap();
            let f = p.sample(d);
            assert!((f.integral() - (1.0 - 2.0 + 3.0) * STEP_WIDTH).abs() < 1e-13);
            assert!((f.values()[d.edge_index(-0.25) as usize] - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn power_and_log_integrals_match_closed_forms() {
        let d = Domain::unit(1, 8).unwrap();
        let f = Profile::Power {
            c: 2.0,
            e: -0.5,
            lo: 0.0,
            hi: 0.25,
        }
        .sample(d);
        assert!((f.integral() - 2.0 * 2.0 * 0.5).abs() < 1e-12);
        let g = Profile::Log {
            at: 0.0,
            lo: 0.0,
            hi: 1.0,
        }
        .sample(d);
        assert!((g.integral() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn case_streams_do_not_depend_on_resolution() {
        let a = random_step(&mut case_rng(5, 3), 0.0, 1.0);
        let b = random_step(&mut case_rng(5, 3), 0.0, 1.0);
        assert_eq!(a, b);
        assert_ne!(a, random_step(&mut case_rng(5, 4), 0.0, 1.0));
        if let Profile::Step { lo, values } = a {
            assert!(lo >= -SUPPORT && lo + values.len() as f64 * STEP_WIDTH <= SUPPORT + 1e-12);
        }
    }
}
