// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod cli;
pub mod error;
pub mod laws;
pub mod quadrature;
pub mod rpde;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};

// The guide's code blocks run as doctests; one module per chapter keeps
// failures traceable to their page.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/laws.md")]
    mod laws {}
    #[doc = include_str!("../../../book/src/blowup.md")]
    mod blowup {}
    #[doc = include_str!("../../../book/src/rpde.md")]
    mod rpde {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
