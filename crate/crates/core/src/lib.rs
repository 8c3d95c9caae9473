//! Core machinery for 1-independent bond percolation bounds.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`grid`] — finite grid graphs (hypercubes `Q_k`, the 4×2 rectangle),
//!   exhaustive edge-subset enumeration and the connectivity / good-pair
//!   event classifications that LP objectives are built from.
//! * [`lp`] — an equality-constrained minimization solver over nonnegative
//!   variables (dense two-phase simplex) whose every answer ships with a
//!   dual certificate that can be re-verified independently, in floating
//!   point with directed error bounds or in exact rational arithmetic.
//! * [`relax`] — the specific relaxation LPs: connectivity of `Q_3` under
//!   a 1-independent model, and the θ-weighted two-probability LPs on the
//!   4×2 rectangle that drive the 2×2 renormalization.
//! * [`cascade`] — closed-form iterations: the hypercube recurrences with
//!   the golden-ratio threshold, the Z² upper-bound iteration, the 1−10q²
//!   crude tail and the origin-probability sum.
//! * [`models`] — the three explicit 1-independent constructions (UDLR-A,
//!   direction, signs) with exact finite-window laws and an exhaustive
//!   1-independence verifier.

pub mod cascade;
pub mod grid;
pub mod lp;
pub mod models;
pub mod relax;
