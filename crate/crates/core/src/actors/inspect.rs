use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Benign,
    Malicious,
}

/// Vendor-specific packet inspection run by the device middleware on every
/// decrypted payload. Different devices plug in different implementations.
pub trait InspectionPredicate: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn inspect(&self, plaintext: &[u8]) -> Verdict;
}

/// Prefix every legitimate controller command carries.
pub const COMMAND_PREFIX: &[u8] = b"CMD ";

/// Accepts only well-formed controller commands: the `CMD ` prefix followed
/// by printable ASCII.
#[derive(Debug, Clone, Copy, Default)]
pub struct CommandGrammar;

impl InspectionPredicate for CommandGrammar {
    fn name(&self) -> &'static str {
        "command_grammar"
    }

    fn inspect(&self, plaintext: &[u8]) -> Verdict {
        let well_formed = plaintext.starts_with(COMMAND_PREFIX)
            && plaintext[COMMAND_PREFIX.len()..]
                .iter()
                .all(|b| (0x20..0x7f).contains(b));
        if well_formed {
            Verdict::Benign
        } else {
            Verdict::Malicious
        }
    }
}

/// A vulnerable middleware that never flags anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAll;

impl InspectionPredicate for AcceptAll {
    fn name(&self) -> &'static str {
        "accept_all"
    }

    fn inspect(&self, _plaintext: &[u8]) -> Verdict {
        Verdict::Benign
    }
}

/// Flags payloads containing any known byte pattern.
#[derive(Debug, Clone, Default)]
pub struct DenyList {
    pub patterns: Vec<Vec<u8>>,
}

impl InspectionPredicate for DenyList {
    fn name(&self) -> &'static str {
        "deny_list"
    }

    fn inspect(&self, plaintext: &[u8]) -> Verdict {
        let hit = self
            .patterns
            .iter()
            .any(|p| !p.is_empty() && plaintext.windows(p.len()).any(|w| w == p.as_slice()));
        if hit {
            Verdict::Malicious
        } else {
            Verdict::Benign
        }
    }
}
