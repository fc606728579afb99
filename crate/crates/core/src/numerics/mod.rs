//! Special functions, compensated sums, quadrature and reproducible
//! random streams shared by the rest of the crate.

pub mod beta;
pub mod quad;
pub mod rng;
pub mod special;
pub mod sum;
pub mod vector;

pub use rng::{sample_gaussian_vector, RngStream};
pub use special::{erfc, std_normal_cdf, std_normal_pdf, TAIL_CLAMP};
pub use sum::{compensated_sum, CompensatedSum, CompensatedVecSum};

pub(crate) use special::{normal_cdf, normal_pdf};
