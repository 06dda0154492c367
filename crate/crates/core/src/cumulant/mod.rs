//! Moment hierarchy of the driven Tavis–Cummings model with cumulant
//! closures of first, second and third order.

pub mod closure;
pub mod layout;
pub mod moments;
pub mod oplist;
pub mod pauli;
pub mod rhs;

pub use closure::{cumulant_close3, cumulant_close4};
pub use layout::{Family, StateLayout, Symmetry, ValueKind, Var, VarInfo};
pub use moments::{ClosedMoments, Mom, Moments, Partials, Triple};
pub use oplist::{ByOpList, Factor, OpEval, ReferenceClosure, SpinRef};
pub use pauli::{pauli_reduce, PauliCombination, SpinOp};
pub use rhs::{derivative, eval_with, initial_state, MomentEquations};
