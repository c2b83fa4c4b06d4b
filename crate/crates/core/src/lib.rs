//! Consistency-based fault localization for VHDL-RTL designs and gate
//! netlists.
//!
//! A design becomes a [`model::ComponentModel`] through [`builder`] (one
//! instant), [`temporal`] (unfolded over time points) or
//! [`builder::build_model_from_netlist`]. [`diag::compute_diagnoses`] then
//! searches for the minimal sets of components whose failure explains the
//! observations. [`report`] ties these steps together; the guide in `book/`
//! walks through each of them.

pub mod bench;
pub mod builder;
pub mod diag;
pub mod fixtures;
pub mod hdl;
pub mod logic;
pub mod model;
pub mod netlist;
pub mod prop;
pub mod report;
pub mod sim;
pub mod stimulus;
pub mod temporal;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/component-models.md")]
    mod component_models {}
    #[doc = include_str!("../../../book/src/diagnosis.md")]
    mod diagnosis {}
    #[doc = include_str!("../../../book/src/vhdl-subset.md")]
    mod vhdl_subset {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/temporal.md")]
    mod temporal {}
    #[doc = include_str!("../../../book/src/netlists.md")]
    mod netlists {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
