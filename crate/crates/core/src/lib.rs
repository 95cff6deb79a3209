//! Minimal solution branch, extremal parameter and stability spectrum of the
//! radial clamped-plate equation `Δ²u = λ (1 - u)^(-p)` on the unit ball.

pub mod branch;
pub mod certificates;
pub mod config;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod operator;
pub mod spectral;

pub use config::ProblemConfig;
pub use error::{Error, Result};
pub use mesh::{build_mesh, RadialField, RadialMesh};
pub use operator::{apply, assemble_biharmonic, DiscreteBiharmonic};
pub use branch::{continue_branch, monotone_solve, newton_solve, BranchPoint, ContinuationResult, Method};
pub use certificates::{lower_bound, CertificateReport, CertificateSpec, Verdict};
