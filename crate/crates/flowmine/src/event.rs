//! Event identity: the vocabulary unit of the mining pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static identity of a message: a command sent from a source component to a
/// destination component. The triple is the mining vocabulary unit; the
/// dynamic address payload lives on [`crate::trace::EventInstance`].
///
/// Ordering is lexicographic over `(src, dest, cmd)` and defines the
/// canonical order used everywhere a deterministic event order is needed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventType {
    pub src: String,
    pub dest: String,
    pub cmd: String,
}

impl EventType {
    /// Build an event type, rejecting empty tokens.
    pub fn new(
        src: impl Into<String>,
        dest: impl Into<String>,
        cmd: impl Into<String>,
    ) -> Result<Self> {
        let ev = EventType { src: src.into(), dest: dest.into(), cmd: cmd.into() };
        ev.check()?;
        Ok(ev)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.src.is_empty() {
            return Err(Error::EmptyEventField { field: "src" });
        }
        if self.dest.is_empty() {
            return Err(Error::EmptyEventField { field: "dest" });
        }
        if self.cmd.is_empty() {
            return Err(Error::EmptyEventField { field: "cmd" });
        }
        Ok(())
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{}:{})", self.src, self.dest, self.cmd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn componentwise_equality() {
        let a = EventType::new("cpu0", "cache0", "rd").unwrap();
        let b = EventType::new("cpu0", "cache0", "rd").unwrap();
        let c = EventType::new("cpu0", "cache0", "wr").unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn empty_tokens_rejected() {
        assert!(EventType::new("", "b", "c").is_err());
        assert!(EventType::new("a", "", "c").is_err());
        assert!(EventType::new("a", "b", "").is_err());
    }

    #[test]
    fn canonical_order_is_src_dest_cmd() {
        let a = EventType::new("a", "z", "z").unwrap();
        let b = EventType::new("b", "a", "a").unwrap();
        assert!(a < b);
        let c = EventType::new("a", "b", "x").unwrap();
        let d = EventType::new("a", "b", "y").unwrap();
        assert!(c < d);
    }
}
