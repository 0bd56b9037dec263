//! One runner per CLI subcommand. Runners are deterministic functions of the
//! experiment description; cases run in parallel on the current rayon pool
//! and rows are emitted in case order.

mod buckley;
mod constants;
mod dominate;
mod endpoint;
mod lemmas;
mod sweeps;

pub use buckley::{least_squares_slope, run_buckley};
pub use constants::run_constants;
pub use dominate::{run_dominate, smooth_inputs};
pub use endpoint::{run_endpoint, run_thm13, thm13_ratio};
pub use lemmas::{lemma44_ratios, random_nested_family, run_lemma32, run_lemma44, Lemma44Ratios};
pub use sweeps::{run_thm11, run_thm12, sweep_ratio};

use sparsedom::{
    ainfty_constant, multi_ap_constant, CalderonCommutator, CubeCollection, Domain, ExponentTuple,
    GridFunction, Weight, WeightSystem, WEIGHT_FLOOR,
};

use crate::config::{Experiment, ExperimentKind, OperatorKind, WeightRecipe};
use crate::report::{Constants, Report};
use crate::Result;

/// Runs the experiment named by `e.kind`.
pub fn run(e: &Experiment) -> Result<Report> {
    e.validate()?;
    match e.kind {
        ExperimentKind::Constants => run_constants(e),
        ExperimentKind::Dominate => run_dominate(e),
        ExperimentKind::Thm11 => run_thm11(e),
        ExperimentKind::Thm12 => run_thm12(e),
        ExperimentKind::Thm13 => run_thm13(e),
        ExperimentKind::Buckley => run_buckley(e),
        ExperimentKind::Lemma32 => run_lemma32(e),
        ExperimentKind::Lemma44 => run_lemma44(e),
        ExperimentKind::Endpoint => run_endpoint(e),
    }
}

/// `[-1, 1)` with `3·2^r` cells.
pub fn domain(r: u32) -> Result<Domain> {
    Ok(Domain::unit(1, r)?)
}

pub fn operator(kind: OperatorKind, d: Domain) -> Result<CalderonCommutator> {
    Ok(CalderonCommutator::new(d, kind.order())?)
}

/// The same weight of the recipe in each of `slots` slots; `a` is the sweep exponent.
pub fn slot_weights(recipe: &WeightRecipe, a: f64, d: Domain, slots: usize) -> Result<Vec<Weight>> {
    let w = match recipe {
        WeightRecipe::Unit => Weight::unit(d),
        WeightRecipe::Power(_) => sparsedom::power_weight(a, d)?,
        &WeightRecipe::TwoCell(l, r) => {
            Weight::new(GridFunction::from_fn(d, |x| if x[0] < 0.0 { l } else { r }))?
        }
    };
    Ok(vec![w; slots])
}

pub fn weight_system(e: &Experiment, a: f64, d: Domain) -> Result<WeightSystem> {
    let ws = slot_weights(&e.weights, a, d, e.p.len())?;
    Ok(WeightSystem::new(ws, ExponentTuple::new(&e.p)?)?)
}

/// `[w̄]_{A_P̄}` over `ap_cubes`, and the `A_∞` constants of `ν` and the `σ_j` over `ainfty_cubes`.
pub fn weight_constants(
    ws: &WeightSystem,
    ap_cubes: &CubeCollection,
    ainfty_cubes: Option<&CubeCollection>,
) -> Result<Constants> {
    let ap_multi = multi_ap_constant(ws, ap_cubes)?;
    let (nu_ainfty, sigma_ainfty) = match ainfty_cubes {
        Some(c) => {
            let nu = ainfty_constant(ws.nu(), c)?;
            let sigmas = (0..ws.exponents().m())
                .filter_map(|j| ws.sigma(j))
                .map(|s| ainfty_constant(s, c))
                .collect::<sparsedom::Result<Vec<_>>>()?;
            (Some(nu), sigmas)
        }
        None => (None, Vec::new()),
    };
    let floor = ws.weights().iter().any(|w| {
        w.as_function()
            .values()
            .iter()
            .any(|&v| v <= 2.0 * WEIGHT_FLOOR)
    });
    let finite = ap_multi.is_finite()
        && nu_ainfty.is_none_or(f64::is_finite)
        && sigma_ainfty.iter().all(|s| s.is_finite());
    Ok(Constants {
        ap_multi,
        nu_ainfty,
        sigma_ainfty,
        flagged: floor || !finite,
    })
}
