//! Network information base: a versioned key/value store with prefix
//! watches.
//!
//! Every `put` bumps the key's version by one and appends the update to the
//! mailbox of each watcher whose prefix matches, so a watcher sees every
//! version of a key, in order, from the moment it subscribed.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NibError {
    #[error("malformed key {0:?}: keys are '/'-separated paths of non-empty segments")]
    MalformedKey(String),
    #[error("key {0} not found")]
    NotFound(String),
    #[error("unknown watch {0}")]
    UnknownWatch(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NibRecord {
    pub key: String,
    pub value: Vec<u8>,
    pub version: u64,
}

/// A delivered update; same shape as the record it produced.
pub type NibUpdate = NibRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WatchId(pub u64);

#[derive(Debug, Clone)]
struct Watch {
    prefix: String,
    mailbox: VecDeque<NibUpdate>,
}

#[derive(Debug, Clone, Default)]
pub struct Nib {
    records: BTreeMap<String, NibRecord>,
    watches: BTreeMap<WatchId, Watch>,
    next_watch: u64,
}

fn check_path(path: &str, allow_trailing_slash: bool) -> Result<(), NibError> {
    let bad = || NibError::MalformedKey(String::from(path));
    let rest = path.strip_prefix('/').ok_or_else(bad)?;
    let rest = if allow_trailing_slash {
        rest.strip_suffix('/').unwrap_or(rest)
    } else {
        rest
    };
    if rest.is_empty() {
        return if allow_trailing_slash {
            Ok(())
        } else {
            Err(bad())
        };
    }
    for seg in rest.split('/') {
        if seg.is_empty() || !seg.chars().all(|c| c.is_ascii_graphic()) {
            return Err(bad());
        }
    }
    Ok(())
}

impl Nib {
    pub fn new() -> Self {
        Nib::default()
    }

    /// Stores `value` under `key` and returns the new version (1 for a new
    /// key).
    pub fn put(&mut self, key: &str, value: impl Into<Vec<u8>>) -> Result<u64, NibError> {
        check_path(key, false)?;
        let value = value.into();
        let rec = self
            .records
            .entry(String::from(key))
            .or_insert_with(|| NibRecord {
                key: String::from(key),
                value: Vec::new(),
                version: 0,
            });
        rec.version += 1;
        rec.value = value;
        let rec = rec.clone();
        for w in self.watches.values_mut() {
            if rec.key.starts_with(w.prefix.as_str()) {
                w.mailbox.push_back(rec.clone());
            }
        }
        Ok(rec.version)
    }

    pub fn get(&self, key: &str) -> Result<(&[u8], u64), NibError> {
        self.records
            .get(key)
            .map(|r| (r.value.as_slice(), r.version))
            .ok_or_else(|| NibError::NotFound(String::from(key)))
    }

    pub fn version(&self, key: &str) -> Option<u64> {
        self.records.get(key).map(|r| r.version)
    }

    /// Keys under `prefix`, sorted.
    pub fn keys<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.records
            .range::<str, _>((
                core::ops::Bound::Included(prefix),
                core::ops::Bound::Unbounded,
            ))
            .map(|(k, _)| k.as_str())
            .take_while(move |k| k.starts_with(prefix))
    }

    /// Subscribes to every future update of keys starting with `prefix`.
    pub fn watch(&mut self, prefix: &str) -> Result<WatchId, NibError> {
        check_path(prefix, true)?;
        let id = WatchId(self.next_watch);
        self.next_watch += 1;
        self.watches.insert(
            id,
            Watch {
                prefix: String::from(prefix),
                mailbox: VecDeque::new(),
            },
        );
        Ok(id)
    }

    pub fn unwatch(&mut self, id: WatchId) -> Result<(), NibError> {
        self.watches
            .remove(&id)
            .map(|_| ())
            .ok_or(NibError::UnknownWatch(id.0))
    }

    /// Drains the watcher's pending updates in delivery order.
    pub fn poll(&mut self, id: WatchId) -> Result<Vec<NibUpdate>, NibError> {
        let w = self
            .watches
            .get_mut(&id)
            .ok_or(NibError::UnknownWatch(id.0))?;
        Ok(w.mailbox.drain(..).collect())
    }

    /// Takes at most one pending update.
    pub fn poll_one(&mut self, id: WatchId) -> Result<Option<NibUpdate>, NibError> {
        let w = self
            .watches
            .get_mut(&id)
            .ok_or(NibError::UnknownWatch(id.0))?;
        Ok(w.mailbox.pop_front())
    }
}
