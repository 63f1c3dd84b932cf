//! Truncated coefficient-space operators: differentiation `D_k`, conversion
//! `S_k`, multiplication `M_k[a]` and integration `Q`, stored as
//! [`AlmostBandedMatrix`] sections, plus matrix-free fast products.
//!
//! Sections are exact: a `rows x cols` builder returns the leading block of
//! the infinite matrix, and compositions are formed from rectangular factors
//! large enough that no entry is lost at the truncation edge.

mod almost_banded;
mod builders;
mod sparsity;
mod structured;
mod truncation;

pub use almost_banded::AlmostBandedMatrix;
pub use builders::{
    conv_chain, conv_op, conv_op_rect, diff_op, diff_op_rect, diff_scale, integration_op,
    integration_op_rect, integration_power, mult_op_cheb, mult_op_cheb_rect, mult_op_ultra,
    mult_op_ultra_rect, multiply_series,
};
pub use sparsity::{default_threshold, SparsityPattern};
pub use structured::{
    fast_matvec, Hankel, LinearOperator, MultiplicationOperator, OperatorProduct, OperatorSum,
    Toeplitz, FFT_DEGREE_THRESHOLD,
};
pub use truncation::OperatorTruncation;
