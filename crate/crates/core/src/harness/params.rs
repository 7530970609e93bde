//! Named extra parameters with recorded defaults.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Extra parameters of one entry. Every lookup is recorded together with the
/// value actually used, so reports echo defaults as well as overrides.
#[derive(Debug, Default)]
pub struct Params {
    given: BTreeMap<String, f64>,
    used: RefCell<BTreeMap<String, f64>>,
    seen: RefCell<BTreeSet<String>>,
}

impl Params {
    pub fn new(given: BTreeMap<String, f64>) -> Self {
        Self {
            given,
            used: RefCell::default(),
            seen: RefCell::default(),
        }
    }

    /// Value of `key`, falling back to `default`.
    pub fn get(&self, key: &str, default: f64) -> f64 {
        let v = self.given.get(key).copied().unwrap_or(default);
        self.used.borrow_mut().insert(key.into(), v);
        self.seen.borrow_mut().insert(key.into());
        v
    }

    /// Value of `key` if given, without a default.
    pub fn opt(&self, key: &str) -> Option<f64> {
        self.seen.borrow_mut().insert(key.into());
        let v = self.given.get(key).copied();
        if let Some(v) = v {
            self.used.borrow_mut().insert(key.into(), v);
        }
        v
    }

    pub fn flag(&self, key: &str) -> bool {
        self.get(key, 0.0) != 0.0
    }

    /// Records a derived value for the echo.
    pub fn record(&self, key: &str, v: f64) {
        self.used.borrow_mut().insert(key.into(), v);
        self.seen.borrow_mut().insert(key.into());
    }

    /// Rejects parameters the entry never looked at.
    pub fn check_all_used(&self) -> Result<()> {
        let seen = self.seen.borrow();
        for k in self.given.keys() {
            if !seen.contains(k) {
                return Err(Error::Unknown {
                    kind: "parameter",
                    name: k.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn resolved(&self) -> BTreeMap<String, f64> {
        self.used.borrow().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_echoed_and_strays_rejected() {
        let mut m = BTreeMap::new();
        m.insert("rho".to_string(), 0.5);
        m.insert("typo".to_string(), 1.0);
        let p = Params::new(m);
        assert_eq!(p.get("rho", 1.0), 0.5);
        assert_eq!(p.get("eps", 0.25), 0.25);
        assert_eq!(p.resolved().len(), 2);
        assert!(p.check_all_used().is_err());
    }
}
