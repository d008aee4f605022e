//! Mixed finite elements for the linearized Cosserat equations.

pub mod fe_spaces;
pub mod mesh;
pub mod polynomial;
pub mod quadrature;
pub mod cosserat_core;
pub mod jet;
pub mod manufactured;
pub mod sparse;
pub mod assembly;
pub mod solver;
pub mod analysis;
pub mod oracles;
pub mod plot;
pub mod experiments;
pub mod properties;
