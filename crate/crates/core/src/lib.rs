//! Lipschitz analysis on finite metric measure spaces.
//!
//! The pieces, bottom up:
//! - [`space`]: finite metric spaces with weights, nets, covering counts.
//! - [`fragment`]: discrete curve fragments, derivatives along them, cones.
//! - [`poset`]: the chain order on cylinder nodes, longest chains, Mirsky levels.
//! - [`approx`]: strips, McShane extension and the integrated approximant.
//! - [`alberti`]: fragment-averaged representations of a measure and their derivations.
//! - [`lipscape`]: pointwise Lipschitz profiles, porosity and gap detection.
//! - [`io`]: file formats for spaces, fragments, representations and function tables.
//! - [`zahorski`]: truncation and the independent-function construction on exact samples.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alberti;
pub mod approx;
pub mod field;
pub mod fragment;
pub mod io;
pub mod lipscape;
pub mod poset;
pub mod space;
pub mod zahorski;
