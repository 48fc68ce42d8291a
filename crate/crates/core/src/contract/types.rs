use crate::ledger::Amount;
use crate::primitives::Address;

pub type Txn = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractConfig {
    pub min_deposit: Amount,
    /// Blocks a report must stand, strictly exceeded, before `execute`.
    pub grace_period: u64,
    /// Blocks between `decommission` and record deletion.
    pub billing_window: u64,
    /// Commitment length `N` accepted by `settle`.
    pub commitment_len: usize,
}

impl Default for ContractConfig {
    fn default() -> Self {
        ContractConfig {
            min_deposit: 1_000_000,
            grace_period: 10,
            billing_window: 10,
            commitment_len: 32,
        }
    }
}

/// Registration of a device/controller pair. The contract cannot tell which
/// side is the device, so parties are recorded in call order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserInfo {
    pub initiator: Address,
    pub responder: Address,
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerInfo {
    pub server: Address,
    pub deposit: Amount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceStatus {
    Pending,
    Confirmed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceRecord {
    pub txn: Txn,
    /// Last settled packet counter; 0 means nothing settled yet.
    pub serial: u64,
    pub device: Address,
    pub controller: Address,
    pub server: Address,
    pub price: Amount,
    pub balance: Amount,
    pub status: ServiceStatus,
    pub decommissioned_at: Option<u64>,
}

impl ServiceRecord {
    pub fn is_party(&self, who: &Address) -> bool {
        *who == self.device || *who == self.controller || *who == self.server
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingReport {
    pub txn: Txn,
    pub serial: u64,
    /// The packet exactly as the reporter received it (covered).
    pub packet: Vec<u8>,
    pub report_height: u64,
    pub reporter: Address,
    pub server: Address,
    pub controller: Address,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RebutOutcome {
    /// The uncovered packet carries the controller's signature; report deleted.
    Rebutted,
    /// Recovery did not yield the controller; report stands.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Penalty {
    pub server: Address,
    pub beneficiary: Address,
    pub amount: Amount,
}

/// One contract invocation as seen in the call trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallTrace {
    pub height: u64,
    pub caller: Address,
    pub function: &'static str,
    pub outcome: Result<String, String>,
    pub gas: u64,
}

impl CallTrace {
    pub fn to_line(&self) -> String {
        let (status, detail) = match &self.outcome {
            Ok(d) => ("ok", d.as_str()),
            Err(e) => ("err", e.as_str()),
        };
        format!(
            "call height={} caller={} fn={} status={} gas={} detail={:?}",
            self.height, self.caller, self.function, status, self.gas, detail
        )
    }
}
