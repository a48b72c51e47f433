//! Quasi-static brittle fracture propagation in 2D with a phase-field crack
//! representation.
//!
//! The solver alternates between the mechanics subproblem (phase field frozen)
//! and the phase-field subproblem (displacements frozen), with artificial
//! `L`-stabilization mass terms added to both, and enforces crack
//! irreversibility through an augmented-Lagrangian penalization.
//!
//! Module overview:
//!
//! - [`mesh`]: structured quadrilateral benchmark geometries (notched square,
//!   L-shaped panel) with a geometric slit realized by node duplication.
//! - [`fem`]: bilinear quad elements, quadrature, sparse assembly, Dirichlet
//!   elimination.
//! - [`material`]: isotropic elasticity, degradation function, spectral
//!   tension/compression stress split and its consistent tangent.
//! - [`linsolve`]: CSR matrices and a direct SPD solver (reverse Cuthill-McKee
//!   ordered envelope Cholesky).
//! - [`staggered`]: the stabilized staggered iteration, inner Newton solver,
//!   and the loading-step driver.
//! - [`bench`]: the three benchmark problems, load-displacement recording,
//!   strain-sup diagnostics, and the contraction classifier.
//! - [`vtk`]: legacy ASCII VTK output for visual inspection.

pub mod bench;
pub mod fem;
pub mod linsolve;
pub mod material;
pub mod mesh;
pub mod staggered;
pub mod vtk;
