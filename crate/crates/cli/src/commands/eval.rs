//! `ssd eval`: per-attack / known / unknown EER report from a trial file.

use std::collections::BTreeSet;
use std::path::Path;

use ssd_core::eval::{TrialSet, per_attack_report};
use ssd_core::formats::read_trials;

use crate::error::CliError;
use crate::util::atomic_write;

pub fn run(trials: &Path, known: &[String], out: Option<&Path>) -> Result<(), CliError> {
    let trials = read_trials(trials)?;
    let known_attacks: BTreeSet<String> = known.iter().cloned().collect();
    let report = per_attack_report(&TrialSet::new(trials, known_attacks))?;

    let table = report.to_table();
    print!("{table}");
    if let Some(out) = out {
        atomic_write(out, &table)?;
        let mut rows_path = out.as_os_str().to_owned();
        rows_path.push(".rows");
        atomic_write(Path::new(&rows_path), &report.machine_rows())?;
    }
    Ok(())
}
