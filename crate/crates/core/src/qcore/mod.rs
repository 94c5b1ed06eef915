//! Small-dimension complex linear algebra and entanglement functionals.

mod density;
mod eigen;
mod functionals;
mod matrix;

pub use density::DensityMatrix;
pub use eigen::{eig_hermitian, top_eigvec2, Spectrum};
pub use functionals::{
    bhattacharyya, classical_fidelity, concurrence, min_pt_eigenvalue, partial_transpose,
    quantum_fidelity, validate_prob4, Prob4,
};
pub use matrix::{
    pauli_x, pauli_y, pauli_z, Ket, Ket2, Ket4, Mat2, Mat4, Matrix, C64, I, ONE, ZERO,
};
