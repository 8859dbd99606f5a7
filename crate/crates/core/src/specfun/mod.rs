//! Special functions: modified Bessel functions of the first kind, the
//! noncentral chi-square law (including zero degrees of freedom) and the
//! standard normal distribution.

mod bessel;
pub(crate) mod gamma;
pub(crate) mod ncx2;
mod normal;

pub use bessel::{bessel_i, bessel_i_scaled};
pub use ncx2::{ncx2_ccdf, ncx2_cdf, ncx2_cdf_oracle, ncx2_ln_ccdf, ncx2_pdf, ChiSquareArgs};
pub use normal::{norm_cdf, norm_inv, norm_pdf};
