//! Simulation library for Rydberg atomic quantum receivers.
//!
//! The crate models the full receive chain of a vapor-cell RF receiver read
//! out optically: quantum-defect atomic structure ([`atomdata`]), closed-form
//! weak-probe ladder coherences ([`analytic`]), exact Lindblad steady states
//! and transients ([`liouvillian`]), the superheterodyne / balanced-detection
//! optical readout ([`receiver`]), and link-level metrics from SNR to block
//! error rates ([`link`]).
//!
//! Two excitation architectures are covered end to end: the two-color
//! four-level cesium ladder and the three-color five-level ladder whose
//! wavevector sum nearly cancels the Doppler shift of thermal atoms. Shipped
//! presets `cs_2c4l` and `cs_3c5l` carry the corresponding parameter sets.
//!
//! A narrative guide with runnable examples lives in `book/`; its code
//! blocks compile and run as doc-tests of this crate.
//!
//! ```
//! use raqr::atomdata::{builtin_preset, Species};
//! use raqr::analytic::{coherence_5l, FiveLevelScheme};
//!
//! let table = builtin_preset("cs_3c5l")?;
//! let scheme = FiveLevelScheme::from_table(&table, &Species::cesium(), 290.0);
//! let rho = coherence_5l(&scheme);
//! assert!(rho.im > 0.0, "positive imaginary part means absorption");
//! # Ok::<(), raqr::atomdata::AtomDataError>(())
//! ```

pub mod analysis;
pub mod analytic;
pub mod atomdata;
pub mod constants;
pub mod link;
pub mod liouvillian;
pub mod receiver;
pub mod thermal;

// The book's code blocks double as doc-tests so the guide cannot drift from
// the library. rustdoc sets `--cfg doctest` while collecting them.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/atoms-and-transitions.md")]
    mod atoms_and_transitions {}
    #[doc = include_str!("../../../book/src/ladder-coherences.md")]
    mod ladder_coherences {}
    #[doc = include_str!("../../../book/src/exact-steady-states.md")]
    mod exact_steady_states {}
    #[doc = include_str!("../../../book/src/optical-readout.md")]
    mod optical_readout {}
    #[doc = include_str!("../../../book/src/link-performance.md")]
    mod link_performance {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
