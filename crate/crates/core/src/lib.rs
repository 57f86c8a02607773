//! Numerical workbench for free Araki-Woods factors.
//!
//! Orthogonal representations of ℝ are described by [`rep::RepSpec`]; the
//! associated operators live on truncated full Fock spaces ([`fock`]). Mixed
//! moments in free products are evaluated exactly by [`laws`], the modular
//! group and KMS condition by [`modular`], the free-product commutator
//! inequality by [`barnett`], and Monte Carlo matrix models by
//! [`matrix_models`].

pub mod barnett;
pub mod error;
pub mod fock;
pub mod laws;
pub mod matrix_models;
pub mod modular;
pub mod rep;
pub mod word;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
