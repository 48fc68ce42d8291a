use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::ledger::{GasTable, PUBLISHED_TOTALS};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpTotal {
    pub calls: u64,
    pub gas: u64,
}

/// Gas totals read back from a transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct GasReport {
    pub gas_price_wei: u64,
    pub ether_usd: f64,
    pub by_operation: BTreeMap<String, OpTotal>,
    /// Keyed by role when the transcript names it, otherwise by address.
    pub by_actor: BTreeMap<String, u64>,
    pub total: u64,
}

fn field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
}

/// Sums `receipt` lines by operation and by actor. Lines of any other kind
/// are ignored; without a `gas-table` header the default pricing applies.
pub fn gas_report(transcript: &str) -> GasReport {
    let defaults = GasTable::default();
    let mut report = GasReport {
        gas_price_wei: defaults.gas_price_wei,
        ether_usd: defaults.ether_usd,
        by_operation: BTreeMap::new(),
        by_actor: BTreeMap::new(),
        total: 0,
    };
    let mut roles = BTreeMap::new();
    for line in transcript.lines() {
        let kind = line.split_whitespace().next().unwrap_or("");
        match kind {
            "gas-table" => {
                if let Some(p) = field(line, "gas_price_wei").and_then(|v| v.parse().ok()) {
                    report.gas_price_wei = p;
                }
                if let Some(u) = field(line, "ether_usd").and_then(|v| v.parse().ok()) {
                    report.ether_usd = u;
                }
            }
            "actor" => {
                if let (Some(role), Some(addr)) = (field(line, "role"), field(line, "address")) {
                    roles.insert(addr.to_string(), role.to_string());
                }
            }
            "receipt" => {
                let (Some(op), Some(gas), Some(actor)) = (
                    field(line, "op"),
                    field(line, "gas").and_then(|g| g.parse::<u64>().ok()),
                    field(line, "actor"),
                ) else {
                    continue;
                };
                let t = report.by_operation.entry(op.to_string()).or_default();
                t.calls += 1;
                t.gas += gas;
                let who = roles.get(actor).cloned().unwrap_or_else(|| actor.to_string());
                *report.by_actor.entry(who).or_default() += gas;
                report.total += gas;
            }
            _ => {}
        }
    }
    report
}

impl GasReport {
    pub fn to_usd(&self, gas: u64) -> f64 {
        gas as f64 * self.gas_price_wei as f64 * 1e-18 * self.ether_usd
    }

    fn group(&self, prefixes: &[&str]) -> u64 {
        self.by_operation
            .iter()
            .filter(|(op, _)| prefixes.iter().any(|p| op.starts_with(p)))
            .map(|(_, t)| t.gas)
            .sum()
    }

    pub fn registration_gas(&self) -> u64 {
        self.group(&["reg_user.", "reg_server"])
    }

    pub fn commission_gas(&self) -> u64 {
        self.group(&["service_"])
    }

    pub fn commit_gas(&self) -> u64 {
        self.group(&["commitment."])
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "gas-report total_gas={} total_usd={:.6} gas_price_wei={} ether_usd={}",
            self.total,
            self.to_usd(self.total),
            self.gas_price_wei,
            self.ether_usd
        )
        .unwrap();
        for (op, t) in &self.by_operation {
            writeln!(s, "operation name={op} calls={} gas={} usd={:.6}", t.calls, t.gas, self.to_usd(t.gas)).unwrap();
        }
        for (actor, gas) in &self.by_actor {
            writeln!(s, "actor name={actor} gas={gas} usd={:.6}", self.to_usd(*gas)).unwrap();
        }
        let groups = [
            ("registration", self.registration_gas(), PUBLISHED_TOTALS.registration),
            ("commission", self.commission_gas(), PUBLISHED_TOTALS.commission),
            ("commit", self.commit_gas(), PUBLISHED_TOTALS.commit),
        ];
        for (name, gas, published) in groups {
            writeln!(s, "group name={name} gas={gas} usd={:.6} published={published}", self.to_usd(gas)).unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
scenario name=x seed=1
gas-table gas_price_wei=2000000000 ether_usd=135 block_gas_limit=3600000
actor role=device address=0xaa
actor role=relay address=0xbb
receipt seq=0 height=0 actor=0xaa op=commitment.receiver payload=0 gas=175000 cumulative=175000
receipt seq=1 height=0 actor=0xbb op=commitment.verify payload=0 gas=40000 cumulative=40000
receipt seq=2 height=0 actor=0xcc op=commitment.sender payload=0 gas=151000 cumulative=151000
event seq=0 height=0 kind=settled
";

    #[test]
    fn sums_by_operation_and_role() {
        let r = gas_report(SAMPLE);
        assert_eq!(r.total, 366_000);
        assert_eq!(r.commit_gas(), 366_000);
        assert_eq!(r.by_actor["device"], 175_000);
        assert_eq!(r.by_actor["relay"], 40_000);
        assert_eq!(r.by_actor["0xcc"], 151_000);
        assert_eq!(r.by_operation["commitment.verify"], OpTotal { calls: 1, gas: 40_000 });
    }

    #[test]
    fn receiver_commitment_costs_about_five_cents() {
        let r = gas_report(SAMPLE);
        assert!((r.to_usd(175_000) - 0.04725).abs() < 1e-9);
        assert!(r.to_text().contains("operation name=commitment.receiver calls=1 gas=175000 usd=0.047250"));
    }

    #[test]
    fn empty_input_uses_default_pricing() {
        let r = gas_report("");
        assert_eq!(r.total, 0);
        assert_eq!(r.gas_price_wei, 2_000_000_000);
    }
}
