//! Degree counting and numerical experiments for 2×2 singular Liouville
//! systems
//!
//! ```text
//! Δu_i + Σ_j a_ij ρ_j (h_j e^{u_j} / ∫ h_j e^{u_j} − 1) = Σ_l 4π γ_l (δ_{p_l} − 1)
//! ```
//!
//! on a compact surface of unit volume.
//!
//! * [`coupling`] — the coupling matrix, its ordering hypothesis and the
//!   quadratic/linear forms that locate ρ.
//! * [`degree`] — critical spectrum, generating series and the degree.
//! * [`torus`] — fields on the unit flat torus: Green's function, singular
//!   weights, spectral inverse Laplacian and quadrature.
//! * [`solver`] — fixed-point/Newton–Krylov solves, local masses, the
//!   energy functional and parameter sweeps.

pub mod coupling;
pub mod degree;
pub mod exact;
pub mod solver;
pub mod torus;
