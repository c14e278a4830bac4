// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod element;
pub mod error;
pub mod kinematics;
pub mod material;
pub mod mesh;
pub mod oracles;
pub mod postprocess;
pub mod solver;
pub mod verify;
