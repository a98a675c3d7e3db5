pub mod eigen;
pub mod ldlt;
pub mod quad;
pub mod sparse;

pub use eigen::{smallest_eigenpairs, EigOptions, EigenPairs};
pub use ldlt::{Inertia, Ldlt};
pub use sparse::{axpy, dot, norm2, CsrMatrix, TripletBuilder};
