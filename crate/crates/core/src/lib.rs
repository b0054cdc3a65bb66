//! Gonality screening for modular curves X_Δ(N) between X₁(N) and X₀(N).

pub mod arith;
pub mod exactlin;
pub mod modgroup;
pub mod modsym;
pub mod petri;
pub mod pipeline;
pub mod quadclass;
pub mod trigfield;
