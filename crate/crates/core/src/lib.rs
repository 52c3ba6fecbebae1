//! Exact symbolic Lie point symmetry analysis of scalar PDEs.
//!
//! The guide in `book/` walks through the modules; its code listings are
//! compiled and run as doctests.

pub mod detsys;
pub mod dsl;
pub mod jetspace;
pub mod liealg;
pub mod linalg;
pub mod numcheck;
pub mod prolong;
pub mod ratfunc;
pub mod sample;
pub mod structure;
pub mod symexpr;
pub mod telegraph;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/documents.md")]
    mod documents {}
    #[doc = include_str!("../../../book/src/expressions.md")]
    mod expressions {}
    #[doc = include_str!("../../../book/src/prolongation.md")]
    mod prolongation {}
    #[doc = include_str!("../../../book/src/determining.md")]
    mod determining {}
    #[doc = include_str!("../../../book/src/algebras.md")]
    mod algebras {}
    #[doc = include_str!("../../../book/src/structure.md")]
    mod structure {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
    #[doc = include_str!("../../../book/src/telegraph.md")]
    mod telegraph {}
}
