//! Sparse operators built from local averages over a sparse family.

use alloc::vec;
use alloc::vec::Vec;

use crate::dyadic::{verify_sparse, Cube, SparseFamily};
use crate::error::{Error, Result};
use crate::localnorms::llogl_norm;
use crate::mesh::{GridFunction, PrefixSum};
use crate::weights::Weight;

/// How each cube of the family weighs the inputs.
#[derive(Clone, Debug, PartialEq)]
pub enum SparseMode {
    /// `Π_j ‖f_j‖_{L(log L)^{β_j}, Q}`.
    Orlicz(Vec<f64>),
    /// `Π_j ⟨f_j⟩^{σ_j}_Q ⟨σ_j⟩_Q = Π_j ⟨|f_j| σ_j⟩_Q`.
    Weighted(Vec<Weight>),
    /// `(Σ_i |b_i(x) - ⟨b_i⟩_Q|) Π_j ⟨|f_j|⟩_Q`.
    Commutator(Vec<GridFunction>),
}

/// A verified sparse family together with an arity and a mode.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperatorSpec {
    family: SparseFamily,
    arity: usize,
    mode: SparseMode,
}

impl SparseOperatorSpec {
    pub fn new(family: SparseFamily, arity: usize, mode: SparseMode) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Parameter("arity must be positive"));
        }
        verify_sparse(&family).map_err(Error::NotSparse)?;
        let d = *family.domain();
        match &mode {
            SparseMode::Orlicz(b) => {
                if b.len() != arity {
                    return Err(Error::Length {
                        expected: arity,
                        found: b.len(),
                    });
                }
                if b.iter().any(|&x| !(x >= 0.0)) {
                    return Err(Error::Parameter("beta must be nonnegative"));
                }
            }
            SparseMode::Weighted(s) => {
                if s.len() != arity {
                    return Err(Error::Length {
                        expected: arity,
                        found: s.len(),
                    });
                }
                if s.iter().any(|w| *w.domain() != d) {
                    return Err(Error::DomainMismatch);
                }
            }
            SparseMode::Commutator(b) => {
                if b.len() != arity {
                    return Err(Error::Length {
                        expected: arity,
                        found: b.len(),
                    });
                }
                if b.iter().any(|f| *f.domain() != d) {
                    return Err(Error::DomainMismatch);
                }
            }
        }
        Ok(Self {
            family,
            arity,
            mode,
        })
    }

    /// Plain averages, `β̄ = 0`.
    pub fn averages(family: SparseFamily, arity: usize) -> Result<Self> {
        Self::new(family, arity, SparseMode::Orlicz(vec![0.0; arity]))
    }

    pub fn family(&self) -> &SparseFamily {
        &self.family
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn mode(&self) -> &SparseMode {
        &self.mode
    }
}

fn check_inputs(family: &SparseFamily, arity: usize, fs: &[&GridFunction]) -> Result<()> {
    if fs.len() != arity {
        return Err(Error::Length {
            expected: arity,
            found: fs.len(),
        });
    }
    if fs.iter().any(|f| f.domain() != family.domain()) {
        return Err(Error::DomainMismatch);
    }
    Ok(())
}

/// Cube indices in sorted cube order, so scatters add in a fixed order.
fn sorted_order(family: &SparseFamily) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..family.len()).collect();
    idx.sort_by(|&a, &b| family.cubes()[a].cmp(&family.cubes()[b]).then(a.cmp(&b)));
    idx
}

/// Product of plain averages `Π_j ⟨|f_j|⟩_Q`.
fn average_product(sums: &[PrefixSum], q: &Cube) -> f64 {
    sums.iter().map(|s| s.mean(q)).product()
}

/// `Σ_{Q ∈ S} c_Q χ_Q` for per-cube scalars.
fn scatter_scalars(family: &SparseFamily, mut c: impl FnMut(&Cube) -> f64) -> GridFunction {
    let d = *family.domain();
    let mut out = vec![0.0; d.cell_count()];
    for k in sorted_order(family) {
        let q = &family.cubes()[k];
        let v = c(q);
        if v != 0.0 {
            q.for_each_cell(|i| out[i] += v);
        }
    }
    GridFunction::new(d, out).expect("sized to the domain")
}

/// Evaluates the sparse operator; commutator mode forwards to [`eval_sparse_commutator`].
pub fn eval_sparse(spec: &SparseOperatorSpec, fs: &[&GridFunction]) -> Result<GridFunction> {
    check_inputs(&spec.family, spec.arity, fs)?;
    match &spec.mode {
        SparseMode::Orlicz(betas) => {
            if betas.iter().all(|&b| b == 0.0) {
                let sums: Vec<PrefixSum> = fs.iter().map(|f| PrefixSum::new(&f.abs())).collect();
                return Ok(scatter_scalars(&spec.family, |q| average_product(&sums, q)));
            }
            let mut buf = Vec::new();
            Ok(scatter_scalars(&spec.family, |q| {
                let mut v = 1.0;
                for (f, &b) in fs.iter().zip(betas) {
                    buf.clear();
                    q.for_each_cell(|i| buf.push(f.values()[i]));
                    v *= llogl_norm(&buf, b);
                }
                v
            }))
        }
        SparseMode::Weighted(sigmas) => {
            let sums = fs
                .iter()
                .zip(sigmas)
                .map(|(f, s)| {
                    f.zip_with(s.as_function(), |a, w| a.abs() * w)
                        .map(|g| PrefixSum::new(&g))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(scatter_scalars(&spec.family, |q| average_product(&sums, q)))
        }
        SparseMode::Commutator(_) => eval_sparse_commutator(spec, fs),
    }
}

/// `Σ_Q (Σ_i |b_i(x) - ⟨b_i⟩_Q|) Π_j ⟨|f_j|⟩_Q χ_Q(x)`.
pub fn eval_sparse_commutator(
    spec: &SparseOperatorSpec,
    fs: &[&GridFunction],
) -> Result<GridFunction> {
    let bs = match &spec.mode {
        SparseMode::Commutator(bs) => bs,
        _ => return Err(Error::Parameter("operator is not in commutator mode")),
    };
    check_inputs(&spec.family, spec.arity, fs)?;
    let d = *spec.family.domain();
    let sums: Vec<PrefixSum> = fs.iter().map(|f| PrefixSum::new(&f.abs())).collect();
    let bsums: Vec<PrefixSum> = bs.iter().map(PrefixSum::new).collect();
    let mut out = vec![0.0; d.cell_count()];
    for k in sorted_order(&spec.family) {
        let q = &spec.family.cubes()[k];
        let c = average_product(&sums, q);
        if c == 0.0 {
            continue;
        }
        let means: Vec<f64> = bsums.iter().map(|s| s.mean(q)).collect();
        q.for_each_cell(|i| {
            let osc: f64 = bs
                .iter()
                .zip(&means)
                .map(|(b, m)| (b.values()[i] - m).abs())
                .sum();
            out[i] += osc * c;
        });
    }
    GridFunction::new(d, out)
}

/// `Σ_Q ⟨|b - ⟨b⟩_Q| |f_i|⟩_Q Π_{j≠i} ⟨|f_j|⟩_Q χ_Q`, the mixed term of commutator domination.
pub fn eval_sparse_mixed(
    family: &SparseFamily,
    b: &GridFunction,
    slot: usize,
    fs: &[&GridFunction],
) -> Result<GridFunction> {
    check_inputs(family, fs.len(), fs)?;
    if slot >= fs.len() {
        return Err(Error::Parameter("slot out of range"));
    }
    if b.domain() != family.domain() {
        return Err(Error::DomainMismatch);
    }
    let sums: Vec<PrefixSum> = fs.iter().map(|f| PrefixSum::new(&f.abs())).collect();
    let bs = PrefixSum::new(b);
    Ok(scatter_scalars(family, |q| {
        let others: f64 = sums
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != slot)
            .map(|(_, s)| s.mean(q))
            .product();
        if others == 0.0 {
            return 0.0;
        }
        let m = bs.mean(q);
        let mut acc = 0.0;
        q.for_each_cell(|i| acc += (b.values()[i] - m).abs() * fs[slot].values()[i].abs());
        others * acc / q.cell_count() as f64
    }))
}
