use super::space::{catalan, quarter_circle_moment, semicircle_moment, Law};
use crate::error::{Error, Result};

/// Highest order accepted by [`law_moments`].
pub const MAX_LAW_ORDER: usize = 32;

/// Moments `m_0, …, m_order` of a law.
///
/// For the self-adjoint laws these are `φ(xⁿ)`; for the Haar unitary `φ(uⁿ)`;
/// for the shift isometry under `ω_λ` the diagonal moments `φ(vⁿ v*ⁿ) = λⁿ`.
pub fn law_moments(law: Law, order: usize) -> Result<Vec<f64>> {
    if order > MAX_LAW_ORDER {
        return Err(Error::UnsupportedOrder { order, max: MAX_LAW_ORDER });
    }
    Ok((0..=order)
        .map(|n| match law {
            Law::Semicircle { radius } => semicircle_moment(radius, n),
            Law::QuarterCircle => quarter_circle_moment(n),
            Law::HaarUnitary => (n == 0) as u8 as f64,
            Law::ShiftIsometry { lambda } => lambda.powi(n as i32),
        })
        .collect())
}

/// The `k`-th Catalan number.
pub fn catalan_number(k: usize) -> f64 {
    catalan(k)
}
