//! The bundled Pegasus data: rule set, substitution, proof seed, probe
//! schedule and expected case counts.
//!
//! Files are looked up in a directory (`pegasus.rules`, `pegasus.sub`,
//! `seed.patch`, `schedule.txt`, `cases.manifest`); any file missing there
//! falls back to the copy compiled into the library.

use std::path::{Path, PathBuf};

use crate::forcing::{Manifest, ProbeSchedule};
use crate::hierarchy::SubstitutionRule;
use crate::patch::Patch;
use crate::rules::RuleSet;

pub const RULES_FILE: &str = "pegasus.rules";
pub const SUBSTITUTION_FILE: &str = "pegasus.sub";
pub const SEED_FILE: &str = "seed.patch";
pub const SCHEDULE_FILE: &str = "schedule.txt";
pub const MANIFEST_FILE: &str = "cases.manifest";

const EMBEDDED: [(&str, &str); 5] = [
    (RULES_FILE, include_str!("../data/pegasus.rules")),
    (SUBSTITUTION_FILE, include_str!("../data/pegasus.sub")),
    (SEED_FILE, include_str!("../data/seed.patch")),
    (SCHEDULE_FILE, include_str!("../data/schedule.txt")),
    (MANIFEST_FILE, include_str!("../data/cases.manifest")),
];

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}: {message}")]
    Invalid { file: String, message: String },
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub rules: RuleSet,
    pub substitution: SubstitutionRule,
    pub seed: Patch,
    pub schedule: ProbeSchedule,
    pub manifest: Manifest,
}

fn embedded(name: &str) -> &'static str {
    EMBEDDED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).expect("known file")
}

fn read(dir: Option<&Path>, name: &str) -> Result<String, BundleError> {
    match dir.map(|d| d.join(name)) {
        Some(path) if path.exists() => {
            std::fs::read_to_string(&path).map_err(|source| BundleError::Io { path, source })
        }
        _ => Ok(embedded(name).to_string()),
    }
}

fn invalid(file: &str, message: impl ToString) -> BundleError {
    BundleError::Invalid { file: file.into(), message: message.to_string() }
}

impl Bundle {
    /// The compiled-in copy.
    pub fn embedded() -> Bundle {
        Bundle::load(None, None).expect("embedded data is valid")
    }

    /// Loads from `dir`, with `rules` overriding the rule file location.
    pub fn load(dir: Option<&Path>, rules: Option<&Path>) -> Result<Bundle, BundleError> {
        let rules = Bundle::load_rules(dir, rules)?;
        let substitution =
            SubstitutionRule::parse(&read(dir, SUBSTITUTION_FILE)?, &rules).map_err(|e| invalid(SUBSTITUTION_FILE, e))?;
        let seed = Patch::parse(&read(dir, SEED_FILE)?, &rules).map_err(|e| invalid(SEED_FILE, e))?;
        let schedule = ProbeSchedule::parse(&read(dir, SCHEDULE_FILE)?).map_err(|e| invalid(SCHEDULE_FILE, e))?;
        let manifest = Manifest::parse(&read(dir, MANIFEST_FILE)?).map_err(|e| invalid(MANIFEST_FILE, e))?;
        Ok(Bundle { rules, substitution, seed, schedule, manifest })
    }

    /// Just the rule set, from `rules` if given, else from `dir`.
    pub fn load_rules(dir: Option<&Path>, rules: Option<&Path>) -> Result<RuleSet, BundleError> {
        let text = match rules {
            Some(path) => std::fs::read_to_string(path).map_err(|source| BundleError::Io { path: path.into(), source })?,
            None => read(dir, RULES_FILE)?,
        };
        RuleSet::parse(&text).map_err(|e| invalid(RULES_FILE, e))
    }
}
