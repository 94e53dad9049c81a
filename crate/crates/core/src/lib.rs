//! Monte Carlo simulation of uplink user-centric cell-free massive MIMO
//! where every access point receives through a transmissive RIS.

pub mod ap_channel;
pub mod association;
pub mod config;
pub mod correlation;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod linalg;
pub mod network;
pub mod oracle;
pub mod receiver;
pub mod ris;
pub mod rng;

pub use error::{Error, Result};

/// Guide chapters, compiled here so their code blocks run as doc-tests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/phases.md")]
    mod phases {}
    #[doc = include_str!("../../../book/src/combining.md")]
    mod combining {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
