use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    AccountCreated,
    Minted,
    Transferred,
    UserRegistered,
    UserConfirmed,
    ServerRegistered,
    ServiceRequested,
    QuoteOffered,
    ServiceSelected,
    ServiceConfirmed,
    Settled,
    DecommissionStarted,
    ServiceClosed,
    ReportFiled,
    ReportRebutted,
    RebutFailed,
    PenaltyExecuted,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::AccountCreated => "account_created",
            EventKind::Minted => "minted",
            EventKind::Transferred => "transferred",
            EventKind::UserRegistered => "user_registered",
            EventKind::UserConfirmed => "user_confirmed",
            EventKind::ServerRegistered => "server_registered",
            EventKind::ServiceRequested => "service_requested",
            EventKind::QuoteOffered => "quote_offered",
            EventKind::ServiceSelected => "service_selected",
            EventKind::ServiceConfirmed => "service_confirmed",
            EventKind::Settled => "settled",
            EventKind::DecommissionStarted => "decommission_started",
            EventKind::ServiceClosed => "service_closed",
            EventKind::ReportFiled => "report_filed",
            EventKind::ReportRebutted => "report_rebutted",
            EventKind::RebutFailed => "rebut_failed",
            EventKind::PenaltyExecuted => "penalty_executed",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Append-only log entry. `seq` is global, so `(height, seq)` is a total order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEvent {
    pub seq: u64,
    pub height: u64,
    pub kind: EventKind,
    pub fields: Vec<(String, String)>,
}

impl LedgerEvent {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_line(&self) -> String {
        let mut line = format!("event seq={} height={} kind={}", self.seq, self.height, self.kind);
        for (k, v) in &self.fields {
            line.push(' ');
            line.push_str(k);
            line.push('=');
            line.push_str(v);
        }
        line
    }
}
