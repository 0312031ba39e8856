//! Closed-form hybrid controller synthesis for omega-regular tasks on
//! strict-feedback plants.
//!
//! The pipeline: parse a Büchi automaton over workspace propositions, extract
//! an accepting run fragment and its overlapping state triplets, turn each
//! triplet into a reach-avoid task between labeled workspace regions, solve
//! each task with a spatiotemporal tube, and run a funnel controller that
//! keeps the plant output inside the active tube while a switching machine
//! walks the triplet sequence. No plant model enters the control law; only
//! the tube boundaries and the measured output do.

pub mod automaton;
pub mod config;
pub mod controller;
pub mod disturbance;
pub mod geometry;
pub mod hybrid;
pub mod integrator;
pub mod monitor;
pub mod plants;
pub mod sim;
pub mod tubes;
pub mod workspace;

#[cfg(test)]
pub(crate) mod testutil;
