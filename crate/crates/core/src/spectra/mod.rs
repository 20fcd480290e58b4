//! Section spaces, Hilbert norms, Bergman densities and generalized eigenproblems.

pub mod bergman;
pub mod eigen;
pub mod gram;
pub mod hermitian;
pub mod section;

pub use bergman::{bergman_density, BergmanKernel};
pub use eigen::{gen_eigen, gen_eigen_capped, GenEigen};
pub use gram::{gram_e, gram_f};
pub use hermitian::HermitianForm;
pub use section::{SectionSpace, Twist};
