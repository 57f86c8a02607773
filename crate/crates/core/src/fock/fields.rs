use nalgebra::DVector;

use super::operator::{FockOperator, StorageKind};
use super::space::FockSpace;
use crate::error::{Error, Result};
use crate::rep::RepSpec;
use crate::C64;

/// Tolerance for the orthonormality precondition of [`generalized_circular`].
pub const ORTHONORMAL_TOL: f64 = 1e-12;

fn check_rep(space: &FockSpace, rep: &RepSpec) -> Result<()> {
    if space.one_particle_dim() != rep.dim() {
        return Err(Error::DimensionMismatch { expected: rep.dim(), got: space.one_particle_dim() });
    }
    Ok(())
}

/// `ℓ(ζ) + ℓ(η)*` in the requested storage.
pub fn creation_pair(space: &FockSpace, zeta: &[C64], eta: &[C64], kind: StorageKind) -> Result<FockOperator> {
    let a = FockOperator::creation_with(space, zeta, false, kind)?;
    let b = FockOperator::creation_with(space, eta, true, kind)?;
    Ok(a.try_add(&b)?.with_weight(1))
}

/// `s(ξ) = (ℓ(ξ_K) + ℓ(ξ_K)*)/2` where `ξ_K` is the embedding of `ξ ∈ H_ℝ`.
pub fn semicircular_field(space: &FockSpace, rep: &RepSpec, xi: &[f64]) -> Result<FockOperator> {
    check_rep(space, rep)?;
    let k = rep.embed(xi)?;
    field_of(space, k.as_slice(), StorageKind::for_dim(space.total_dim()))
}

/// `(ℓ(ζ) + ℓ(ζ)*)/2` for a vector already in `K_ℝ`.
pub fn field_of(space: &FockSpace, zeta: &[C64], kind: StorageKind) -> Result<FockOperator> {
    Ok(creation_pair(space, zeta, zeta, kind)?.scale(C64::new(0.5, 0.0)).with_weight(1).with_label("s"))
}

/// `y = ℓ(ξ₁) + √λ ℓ(ξ₂)*` for orthonormal `ξ₁, ξ₂`.
pub fn generalized_circular(space: &FockSpace, lambda: f64, xi1: &[C64], xi2: &[C64]) -> Result<FockOperator> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidArgument(format!("lambda must lie in (0,1], got {lambda}")));
    }
    let d = space.one_particle_dim();
    for v in [xi1, xi2] {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
    }
    let inner = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<C64>();
    let defect = [(inner(xi1, xi1) - 1.0).norm(), (inner(xi2, xi2) - 1.0).norm(), inner(xi1, xi2).norm()]
        .into_iter()
        .fold(0.0, f64::max);
    if defect > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal(defect));
    }
    let scaled: Vec<C64> = xi2.iter().map(|z| z * lambda.sqrt()).collect();
    Ok(creation_pair(space, xi1, &scaled, StorageKind::for_dim(space.total_dim()))?.with_label("y"))
}

/// Largest entry of `2s(ξ) + 2i s(η) - (ℓ(ζ) + ℓ(Tζ)*)` with `ζ = ξ_K + iη_K`.
pub fn field_pair_identity_check(space: &FockSpace, rep: &RepSpec, xi: &[f64], eta: &[f64]) -> Result<f64> {
    check_rep(space, rep)?;
    let kind = StorageKind::for_dim(space.total_dim());
    let (xk, ek) = (rep.embed(xi)?, rep.embed(eta)?);
    let lhs = field_of(space, xk.as_slice(), kind)?
        .scale(C64::new(2.0, 0.0))
        .try_add(&field_of(space, ek.as_slice(), kind)?.scale(C64::new(0.0, 2.0)))?;
    let zeta: DVector<C64> = &xk + &ek * C64::i();
    let tz = rep.t_apply(&zeta)?;
    let rhs = creation_pair(space, zeta.as_slice(), tz.as_slice(), kind)?;
    lhs.max_abs_diff(&rhs)
}
