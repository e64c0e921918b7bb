//! Demonstration-driven game playtesting.
//!
//! The crate is organised along the pipeline:
//!
//! - [`trace`]: getevent-style multitouch traces, gesture segmentation and classification.
//! - [`scene`]: frames, icon templates, template matching, grid detection and contexts.
//! - [`infer`]: turning recorded `<context, action>` pairs into a [`infer::TacticSet`].
//! - [`apply`]: matching live contexts against tactics and synthesizing concrete actions.

pub mod apply;
pub mod geometry;
pub mod infer;
pub mod scene;
pub mod trace;

pub use geometry::{Point, Rect, Screen};
