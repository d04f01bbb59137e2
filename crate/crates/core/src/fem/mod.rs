//! Reference-element machinery and the global degree-of-freedom layout.

pub mod basis;
pub mod dofs;
pub mod quadrature;

pub use basis::{eval_p1, eval_p2, AffineMap, BasisEval, P1Eval, P2Eval};
pub use dofs::DofLayout;
pub use quadrature::{edge_rule, triangle_rule, EdgeRule, TriangleRule};
