//! Proof-of-delivery for shared IoT relays.
//!
//! Relays cover each packet with a keyed stream and reveal the key only after
//! controller and device have both committed to a few selected bytes. The
//! commitments plus the key form a proof the relay cashes in on a ledger
//! contract, and a device that receives a malicious packet can trace it to
//! the relay and claim the relay's deposit.
//!
//! See the `book/` directory for a guided tour.

pub mod actors;
pub mod contract;
pub mod harness;
pub mod ledger;
pub mod primitives;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/primitives.md")]
    mod primitives {}
    #[doc = include_str!("../../../book/src/delivery.md")]
    mod delivery {}
    #[doc = include_str!("../../../book/src/contract.md")]
    mod contract {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/gas.md")]
    mod gas {}
}
