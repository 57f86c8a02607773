//! Non-commutative probability spaces, free products and laws.

mod freeness;
mod moments;
mod product;
mod space;
mod summands;
mod tla;

pub use freeness::*;
pub use moments::*;
pub use product::*;
pub use space::*;
pub use summands::*;
pub use tla::*;
