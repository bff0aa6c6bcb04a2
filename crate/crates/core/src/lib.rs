//! Numerical laboratory for self-interacting lattice bosons at finite
//! temperature: truncated Fock spaces over a periodic lattice, normal-ordered
//! polynomial interactions, time-ordered heat propagators, and a harness that
//! verifies the operator identities tying them together (canonical
//! commutators, coherent-exponential exchange through heat kernels, the
//! interaction commutator lemma, and the full pull-through / exchange
//! relations) with quantified residuals.
//!
//! Everything is dense and double precision by design: spaces are kept small
//! enough that each identity becomes a concrete matrix equation whose
//! truncation and integrator errors can be driven down and measured.

pub mod error;
pub mod evolution;
pub mod fock;
pub mod harness;
pub mod interaction;
pub mod lattice;
pub mod linalg;
pub mod ring;
pub mod suite;

pub use error::{Error, Result};
