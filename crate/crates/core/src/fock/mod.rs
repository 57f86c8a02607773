//! Truncated full Fock spaces `ℂΩ ⊕ H ⊕ H^{⊗2} ⊕ … ⊕ H^{⊗D}` and their operators.

mod fields;
mod io;
mod operator;
mod space;

pub use fields::{
    creation_pair, field_of, field_pair_identity_check, generalized_circular, semicircular_field, ORTHONORMAL_TOL,
};
pub use io::{
    deserialize_operator, eigenvalues, empirical_spectrum, serialize_operator, Histogram, OperatorDocument,
    SELF_ADJOINT_TOL,
};
pub use operator::{FockAlgebra, FockOperator, Moment, Storage, StorageKind, DENSE_MAX_DIM};
pub use space::{build_fock, Budget, FockSpace, BUDGET_ENV};
