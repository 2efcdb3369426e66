//! Confidence intervals with exact constant coverage whose width adapts to
//! prior information: FAB z- and t-intervals, multigroup empirical
//! procedures, hierarchical-model fits and a Monte Carlo study engine.
//!
//! Numerical code is generic over [`scalar::Real`]; the `*F64` aliases below
//! are what most callers want.

pub mod data;
pub mod distributions;
pub mod error;
pub mod fab_t;
pub mod fab_z;
pub mod fixtures;
pub mod hierarchy;
pub mod interval;
pub mod isotonic;
pub mod multigroup;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod scalar;
pub mod sim;
pub mod special;
pub mod wfn;

pub use data::{GroupSummary, GroupedData};
pub use error::{FabError, Result};
pub use fab_t::{
    build_w_table, fab_t_interval, umau_t_interval, BayesW, NormalInvGammaPrior, QuadratureConfig, WFunctionTable,
};
pub use fab_z::{fab_z_interval, umau_z_interval, HomoHierParams, PrattW};
pub use interval::{Interval, Method, ThetaGrid};
pub use multigroup::{
    eb_all, fab_heteroscedastic, fab_homoscedastic, umau_all, HeteroOptions, HomoOptions, MultigroupResult,
};
pub use scalar::Real;
pub use sim::{simulate_study, Procedure, SimConfig, SimResult, Truth};
pub use wfn::{ConstantW, WFunction, Weight};

pub type IntervalF64 = Interval<f64>;
pub type HomoHierParamsF64 = HomoHierParams<f64>;
pub type PrattWF64 = PrattW<f64>;
pub type NormalInvGammaPriorF64 = NormalInvGammaPrior<f64>;
pub type BayesWF64 = BayesW<f64>;
pub type WFunctionTableF64 = WFunctionTable<f64>;
pub type ThetaGridF64 = ThetaGrid<f64>;
