//! Toeplitz operators with quasi-homogeneous symbols on Bergman spaces of
//! bounded Reinhardt domains.
//!
//! The crate has two halves. The numerical half represents a bounded
//! Reinhardt domain by its radial profile, computes monomial norms and
//! weighted moments by closed form or adaptive quadrature, realizes Toeplitz
//! operators with (sums of) quasi-homogeneous symbols as weighted shifts on
//! a truncated monomial lattice, and composes finite products in factored
//! form to decide zero products numerically. The exact half implements the
//! multi-index fiber combinatorics behind the zero-product theorem:
//! thick/thin fibers, condition (I), the layer-by-layer deletion process and
//! the union locator, all over symbolic index sets with decidable membership
//! and divergence.

pub mod domain;
pub mod fibers;
pub mod lattice;
pub mod moments;
pub mod quad;
pub mod symbolic;
pub mod symbols;
pub mod toeplitz;

pub use domain::{DomainError, DomainKind, DomainProfile};
pub use fibers::{ConditionIVerdict, Decomposition, FiberError, FiberQuery};
pub use lattice::{IndexBox, LatticeError, MultiIndex, TruncationLattice};
pub use moments::{MomentError, MomentTable, RadialIntegrand};
pub use symbolic::{parse::parse_index_set, Generator, SymbolicError, SymbolicIndexSet};
pub use symbols::{QhSymbol, RadialFn, SlicedSymbol, SymbolError, SymbolSum};
pub use toeplitz::{LatticeOperator, ProductReport, ToeplitzError};
