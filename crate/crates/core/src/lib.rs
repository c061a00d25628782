//! Exactly computable models of quantum ergodicity.
//!
//! The crate is organized in four layers:
//!
//! * [`torus`]: classical observables on `T^2` and hyperbolic cat maps.
//! * [`quantum`]: Weyl quantization on the `N`-dimensional torus Hilbert
//!   space, the quantum cat map propagator, its eigenbasis and Husimi densities.
//! * [`laplace`]: exactly enumerable Laplace spectra (circle, flat torus,
//!   rectangle, disk) with closed-form matrix elements.
//! * [`stats`]: the integrated variance of matrix elements, Chebyshev
//!   extraction of density-one subsequences and the full averaging chain.
//!
//! The `book/` directory at the repository root walks through the same
//! material with runnable snippets; they are compiled as doc-tests below.

pub mod laplace;
pub mod quantum;
pub mod stats;
pub mod torus;

pub use num_complex::Complex64 as C64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/torus.md")]
    mod torus {}
    #[doc = include_str!("../../../book/src/quantization.md")]
    mod quantization {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/laplace.md")]
    mod laplace {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reference.md")]
    mod reference {}
}
