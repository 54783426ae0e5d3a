//! Control landscapes for bipartite quantum systems whose controller is the
//! initial state of a second quantum system.
//!
//! The objective J = Tr[U(ρ_A⊗ρ_B)U†(O_A⊗I_B)] is linear in the controller
//! state ρ_B, so the landscape is trap-free and the global optimum is read off
//! the spectrum of an effective observable O_B on the controller space. This
//! crate builds such landscapes ([`landscape`]), solves the entangled-input
//! variant with a fixed marginal by projected gradient ascent ([`entangled`]),
//! and carries a Jaynes–Cummings case study with an analytic cross-check
//! ([`jcmodel`]). [`qmat`] holds the shared dense complex kernels and [`cli`]
//! the file-driven front end behind the `qqland` binary.
//!
//! Convention used everywhere: composite operators are Kronecker products with
//! the A factor outermost, so the basis pair (a, n) maps to row a·dimB + n.

pub mod cli;
pub mod entangled;
pub mod jcmodel;
pub mod landscape;
pub mod qmat;
