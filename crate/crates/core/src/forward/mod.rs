//! Synthetic scattered data from cracks with spring-type interfaces.

pub mod assemble;
pub mod mesh;
pub mod noise;
pub mod solve;

pub use assemble::assemble_crack_system;
pub use mesh::CrackMesh;
pub use noise::add_noise;
pub use solve::{incident_load, scattered_response, solve_crack_system, solve_scattering, FrequencySolve};
