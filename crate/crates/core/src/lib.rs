//! Dispersive decay and small-data well-posedness experiments for the discrete
//! fourth-order Schrödinger equation i∂ₜu + Δ²u − γΔu = F(u) on ℤ and ℤ².

pub mod critical;
pub mod decay;
pub mod lattice;
pub mod newton;
pub mod nls;
pub mod oscillatory;
pub mod spectral;
pub mod symbol;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
