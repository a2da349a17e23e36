//! Secure aggregation for distributed learning over additive secret shares.
//!
//! Workers split fixed-point encoded updates between two non-colluding
//! servers. The servers compute pairwise distances under MPC with Beaver
//! triples, a pluggable robust oracle picks the aggregation weights, and only
//! the weighted aggregate is revealed. A third, crypto-provider server
//! enables the fully oblivious variant where even pairwise distances stay
//! hidden. Every transfer is transcripted so privacy claims can be audited
//! after the fact.

pub mod beaver;
pub mod error;
pub mod oracles;
pub mod protocol;
pub mod ring;
pub mod rng;
pub mod securenn;
pub mod transcript;

pub use error::{Error, Result};
pub use ring::{PartyId, RingConfig, RingVector, ShareVector};
pub use rng::SeedRng;
