//! Finite-dimensional toolkit for Grothendieck-bounded bilinear and
//! multilinear functionals.
//!
//! * [`spaces`]: normed spaces, bilinear forms, tensor elements, norm
//!   certificates and membership tests against the Grothendieck constant.
//! * [`sdp`]: the low-rank Grothendieck semidefinite relaxation, hyperplane
//!   rounding and Hilbert-space factorization witnesses.
//! * [`fubini`]: partial-integration operators, order-exchange checks and
//!   dense multilinear forms.
//! * [`kernels`]: Nyström discretizations of integral operators, spectral
//!   reports, the 1-D Dirichlet Green's kernel and kernel composition.
//!
//! Data-parallel loops (sign enumeration, SDP restarts, hyperplane samples,
//! kernel assembly) run on rayon when the `parallel` feature is enabled and
//! fall back to plain iterators otherwise. Results do not depend on the
//! number of worker threads.

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod fubini;
pub mod io;
pub mod kernels;
mod par;
pub mod rng;
pub mod sdp;
pub mod spaces;

pub use config::{Constants, NormOptions};
pub use error::{Error, Result};
