//! Joint task placement and resource allocation for DAG-shaped mobile
//! applications running over a Mobile-Fog-Cloud ecosystem.

#![warn(missing_docs)]

pub mod dag;
pub mod energy;
pub mod error;
pub mod eval;
pub mod harness;
pub mod platform;
pub mod rap;
pub mod serde_inf;
pub mod tap;
pub mod timing;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/dags.md")]
    mod dags {}
    #[doc = include_str!("../../../book/src/ecosystem.md")]
    mod ecosystem {}
    #[doc = include_str!("../../../book/src/time-energy.md")]
    mod time_energy {}
    #[doc = include_str!("../../../book/src/resource-allocation.md")]
    mod resource_allocation {}
    #[doc = include_str!("../../../book/src/task-allocation.md")]
    mod task_allocation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
