//! Coupled heat and moisture transport, ice crystallization pressure and
//! nonlocal damage in porous mortar on 2-D triangular meshes.

pub mod climate;
pub mod constitutive;
pub mod driver;
pub mod ice;
pub mod linalg;
pub mod mechanics;
pub mod mesh;
pub mod par;
pub mod transport;
