//! Exact-arithmetic workbench for propositional probability logics: syntax,
//! semantics, satisfiability for linear and polynomial fragments,
//! representability of comparative orders, axiom checking, expressivity
//! and reductions between languages.

pub mod num;
pub mod poly;
pub mod syntax;
pub mod semantics;
pub mod normalize;
pub mod linsolve;
pub mod reductions;
pub mod lp;
pub mod polysolve;
pub mod represent;
pub mod expressivity;
pub mod axioms;
pub mod bench;
pub mod cli;
