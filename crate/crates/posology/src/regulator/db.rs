//! Persistent behavior database: a versioned, line-delimited text format.
//!
//! The first line is a schema header; every following non-empty line is one
//! record serialized as JSON with fixed field order and full round-trip
//! number precision. Saves are atomic (write to a temporary file, then
//! rename).

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::regulator::BehaviorRecord;

const VERSION_HEADER: &str = "posology-db v1";

/// An in-memory set of behavior records, unique by name, in insertion
/// order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Database {
    records: Vec<BehaviorRecord>,
}

impl Database {
    pub fn new() -> Self {
        Database::default()
    }

    pub fn records(&self) -> &[BehaviorRecord] {
        &self.records
    }

    pub fn get(&self, name: &str) -> Option<&BehaviorRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    /// Inserts or replaces the record with the same name. Records are only
    /// ever added or updated, never dropped. Returns true when a new name
    /// was added.
    pub fn upsert(&mut self, record: BehaviorRecord) -> bool {
        match self.records.iter_mut().find(|r| r.name == record.name) {
            Some(slot) => {
                *slot = record;
                false
            }
            None => {
                self.records.push(record);
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Writes the database atomically: the target file either keeps its old
/// content or carries the complete new content, never a partial write.
pub fn save_db(db: &Database, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        writeln!(file, "{VERSION_HEADER}")?;
        for record in &db.records {
            let line = serde_json::to_string(record).map_err(|e| {
                Error::invalid(format!("record {:?} not serializable: {e}", record.name))
            })?;
            writeln!(file, "{line}")?;
        }
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads a database written by [`save_db`].
///
/// # Errors
///
/// A wrong or missing header reports a version mismatch; a malformed record
/// reports its line number.
pub fn load_db(path: &Path) -> Result<Database> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();

    let header = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(Error::DbVersion {
                found: "<empty file>".to_string(),
                expected: VERSION_HEADER.to_string(),
            })
        }
    };
    if header.trim() != VERSION_HEADER {
        return Err(Error::DbVersion {
            found: header,
            expected: VERSION_HEADER.to_string(),
        });
    }

    let mut db = Database::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: BehaviorRecord = serde_json::from_str(&line).map_err(|e| Error::DbParse {
            line: line_no,
            reason: e.to_string(),
        })?;
        record.params.validate().map_err(|e| Error::DbParse {
            line: line_no,
            reason: format!("record {:?}: {e}", record.name),
        })?;
        if db.get(&record.name).is_some() {
            return Err(Error::DbParse {
                line: line_no,
                reason: format!("duplicate record name {:?}", record.name),
            });
        }
        db.upsert(record);
    }
    Ok(db)
}
