use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use crate::checks::Check;
use crate::error::{CliError, CliResult};
use crate::output::{RunDir, RunManifest, MANIFEST_FILE};

#[derive(Serialize)]
struct ReportEntry<'a> {
    command: &'a str,
    run_id: &'a str,
    passed: bool,
    detail: &'a str,
}

/// Manifests in each input directory and its immediate subdirectories.
pub fn find_manifests(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut found = Vec::new();
    for dir in inputs {
        let direct = dir.join(MANIFEST_FILE);
        if direct.is_file() {
            found.push(direct);
            continue;
        }
        if !dir.is_dir() {
            return Err(CliError::Config(format!("{} is not a run directory", dir.display())));
        }
        let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(MANIFEST_FILE).is_file())
            .collect();
        subdirs.sort();
        found.extend(subdirs.into_iter().map(|p| p.join(MANIFEST_FILE)));
    }
    Ok(found)
}

/// Gathers the checks of earlier runs into `report.csv` and `report.json`.
pub fn execute(inputs: &[PathBuf], out: &mut RunDir) -> CliResult<Vec<Check>> {
    let manifests = find_manifests(inputs)?
        .iter()
        .map(|p| RunManifest::load(p))
        .collect::<CliResult<Vec<_>>>()?;
    let manifests: Vec<_> = manifests.into_iter().filter(|m| m.command != "report").collect();
    if manifests.is_empty() {
        return Err(CliError::Config("report found no run manifests in its inputs".into()));
    }
    let mut rows = Vec::new();
    let mut entries = std::collections::BTreeMap::new();
    let mut checks = Vec::new();
    for m in &manifests {
        for c in &m.checks {
            rows.push(vec![
                m.command.clone(),
                m.run_id.clone(),
                c.name.clone(),
                c.passed.to_string(),
                c.detail.clone(),
            ]);
            entries
                .entry(c.name.clone())
                .or_insert_with(Vec::new)
                .push(ReportEntry {
                    command: &m.command,
                    run_id: &m.run_id,
                    passed: c.passed,
                    detail: &c.detail,
                });
            checks.push(c.clone());
        }
    }
    out.csv("report.csv", &["command", "source_run_id", "check", "passed", "detail"], rows)?;
    out.json("report.json", &entries)?;
    Ok(checks)
}
