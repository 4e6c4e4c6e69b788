//! Liénard reduction and limit-cycle / isochronous-centre classification for
//! two-species polynomial kinetics, with a numerical integration oracle.
//!
//! Pipeline: [`vecfield`] parses and evaluates the kinetic system, [`lienard`]
//! rewrites it as `z'' = sum A_nm z^n z'^m` and applies the damping sign test,
//! [`rg`] evaluates first-order renormalization-group flows for the supported
//! truncations, [`sim`] integrates trajectories to check every analytic verdict,
//! and [`sweep`] scans parameter planes and traces the `F(0,0) = 0` boundary.
//! [`models`] holds the built-in oscillators with their closed forms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod lienard;
pub mod models;
pub mod poly;
pub mod rg;
pub mod sim;
pub mod svg;
pub mod sweep;
pub mod vecfield;

pub use lienard::{Classification, LienardForm, TransformSpec, Verdict};
pub use models::{ModelFamily, ModelOutput};
pub use vecfield::{parse_model, FixedPoint, PolyVectorField};
