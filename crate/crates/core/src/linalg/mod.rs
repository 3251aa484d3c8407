//! Dense symmetric linear algebra used by the solvers.

mod cg;
mod eig;
mod gram;
mod prox;

pub use cg::{conjugate_gradient, CgOutcome, CgSpace};
pub use eig::{frob_inner, spectral_norm_sym, sym_eig, symmetrize, SymEig};
pub use gram::{
    build_aat_matrix, opnorm_a, opnorm_a_spectral, CsrMatrix, GramSolver, GramStrategy,
};
pub use prox::{
    clarke_diag, moreau_logdet_value, project_nonneg, prox_logdet, prox_logdet_dderiv, EigCache,
};
