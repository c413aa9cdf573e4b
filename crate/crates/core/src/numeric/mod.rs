//! Self-contained numerical kernels shared by the physics modules.

pub mod clu;
pub mod quad;
pub mod special;
