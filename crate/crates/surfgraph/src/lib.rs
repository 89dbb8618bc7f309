//! Exact counting, structural decomposition, genus testing, asymptotic
//! formulas and Monte Carlo sampling for random graphs on surfaces.

pub mod graph;

pub use graph::{
    Component, ComponentClass, ComponentView, GraphError, Label, LabeledGraph, LabeledMultigraph,
    Part,
};
pub mod decompose;
pub mod genus;
pub mod enumerate;
pub mod asymptotics;
pub mod montecarlo;
