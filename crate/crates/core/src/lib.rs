// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dephasing;
pub mod linops;
pub mod liouville;
pub mod oracle;
pub mod spectral;
pub mod thermo;
