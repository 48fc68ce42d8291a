//! Participant state machines for the relay phase.
//!
//! One packet flows controller → relay → device → relay → device:
//!
//! 1. [`Controller::send`] encrypts, commits to selected bytes (`Tx(B)`) and
//!    signs the packet.
//! 2. [`Relay::forward`] covers the packet with a fresh key `PN`.
//! 3. [`Device::receive`] commits to the same positions of the covered packet
//!    (`Tx(B′, Ra′)`).
//! 4. [`Relay::verify_and_release`] checks both commitments against `PN` and
//!    only then reveals it; [`Device::finalize`] uncovers, decrypts and
//!    inspects.
//!
//! Actors never share state; the harness moves messages between them.

mod controller;
mod device;
mod inspect;
mod record;
mod relay;

pub use controller::Controller;
pub use device::{Delivery, Device, Finalized, ReportRequest};
pub use inspect::{AcceptAll, CommandGrammar, DenyList, InspectionPredicate, Verdict, COMMAND_PREFIX};
pub use record::{
    CoveredFrame, OutboundPacket, PnRelease, ReceiverTx, Session, SessionKeys, SignedRecord,
};
pub use relay::{tamper, RebutEvidence, Relay, Release};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::primitives::PrimitiveError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActorError {
    #[error("no confirmed service relationship")]
    NoSession,
    #[error("refusing to send an empty message")]
    EmptyMessage,
    #[error("signature does not recover to the expected peer")]
    BadSender,
    #[error("serial mismatch: expected {expected}, got {got}")]
    SerialMismatch { expected: u64, got: u64 },
    #[error("no cached state for serial {0}")]
    UnknownSerial(u64),
    #[error("too many packets awaiting a cover key")]
    WindowFull,
    #[error("no verified proof newer than the settled serial")]
    NothingToCash,
    #[error(transparent)]
    Primitive(#[from] PrimitiveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeviceBehavior {
    #[default]
    Honest,
    /// Returns random `B′` to dodge payment.
    CheatUser,
    /// Files one report against a benign packet.
    ReportBenign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelayBehavior {
    #[default]
    Honest,
    /// Flips this many random bytes of every packet before covering.
    Tamper(usize),
    /// Replaces the controller's packet at this serial with its own payload.
    Inject { at_serial: u64 },
    /// Verifies commitments but never reveals the cover key.
    WithholdPn,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown behavior profile {0:?}")]
pub struct UnknownProfile(pub String);

impl FromStr for DeviceBehavior {
    type Err = UnknownProfile;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "honest" => Ok(DeviceBehavior::Honest),
            "cheat_user" => Ok(DeviceBehavior::CheatUser),
            "report_benign" => Ok(DeviceBehavior::ReportBenign),
            other => Err(UnknownProfile(other.to_string())),
        }
    }
}

impl fmt::Display for DeviceBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceBehavior::Honest => "honest",
            DeviceBehavior::CheatUser => "cheat_user",
            DeviceBehavior::ReportBenign => "report_benign",
        })
    }
}

/// Parses `honest`, `tamper(M)`, `inject(SERIAL)` (or bare `inject`, serial
/// 1) and `withhold_pn`.
impl FromStr for RelayBehavior {
    type Err = UnknownProfile;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || UnknownProfile(s.to_string());
        let arg = |name: &str| -> Option<Result<u64, UnknownProfile>> {
            let rest = s.strip_prefix(name)?;
            let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
            Some(inner.trim().parse::<u64>().map_err(|_| bad()))
        };
        match s {
            "honest" => return Ok(RelayBehavior::Honest),
            "withhold_pn" => return Ok(RelayBehavior::WithholdPn),
            "inject" => return Ok(RelayBehavior::Inject { at_serial: 1 }),
            _ => {}
        }
        if let Some(m) = arg("tamper") {
            return Ok(RelayBehavior::Tamper(m? as usize));
        }
        if let Some(at) = arg("inject") {
            return Ok(RelayBehavior::Inject { at_serial: at? });
        }
        Err(bad())
    }
}

impl fmt::Display for RelayBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelayBehavior::Honest => f.write_str("honest"),
            RelayBehavior::Tamper(m) => write!(f, "tamper({m})"),
            RelayBehavior::Inject { at_serial } => write!(f, "inject({at_serial})"),
            RelayBehavior::WithholdPn => f.write_str("withhold_pn"),
        }
    }
}

#[cfg(test)]
mod tests;
