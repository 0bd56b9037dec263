//! Numerical toolkit for sparse domination of multilinear singular integrals.
//!
//! Everything lives on a uniform mesh of `[-2^J, 2^J)^n`, `n ∈ {1, 2}`, with
//! `3·2^K` cells per unit length. The factor three keeps dyadic cubes, their
//! triples and the one-third shifted grids exact unions of cells.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `serde` feature for
//! serializable data types.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod calderon;
pub mod domination;
pub mod dyadic;
mod error;
pub mod localnorms;
mod math;
pub mod maximal;
pub mod mesh;
pub mod sparse_ops;
pub mod weights;

pub use error::{Error, Result};

pub use calderon::{
    apply_c, commutator, grand_maximal, kernel_c, multilinear_commutator, CalderonCommutator,
    LipschitzData, OperatorHandle,
};
pub use domination::{
    cz_decompose_indicator, exceptional_set, sparse_dominate, sparse_dominate_commutator, CellSet,
    DominationResult, DominationStats,
};
pub use dyadic::{
    children, dilate, shifted_grids, verify_sparse, Cube, CubeCollection, DyadicGrid, Ratio,
    SparseFamily, SparseViolation,
};
pub use localnorms::{average, holder_orlicz_check, orlicz_llogl, osc_exp_ls, OrliczParams};
pub use maximal::{
    dyadic_weighted_maximal, hl_maximal, m_tau, multilinear_orlicz_maximal, sharp_maximal,
    sup_over_cubes,
};
pub use mesh::{
    lq_norm, mixed_norm, weak_norm, weak_type_functional, Domain, GridFunction, PrefixSum,
    VectorFunction,
};
pub use sparse_ops::{
    eval_sparse, eval_sparse_commutator, eval_sparse_mixed, SparseMode, SparseOperatorSpec,
};
pub use weights::{
    ainfty_constant, ap_constant, multi_ap_constant, power_weight, ExponentTuple, Weight,
    WeightSystem, WEIGHT_FLOOR,
};
