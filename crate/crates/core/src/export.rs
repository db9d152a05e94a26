//! Run manifests and trajectory export: a JSON manifest describing the run,
//! a CSV time series of functional reports (plus virial/modulation columns
//! when recorded), and optional binary state snapshots.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::evolution::{EvolutionConfig, Termination, Trajectory};
use crate::grid::{write_binary, GridSpec};
use crate::params::Params;

/// Manifest describing one reproducible run. Re-running the same manifest
/// byte-reproduces every CSV output (deterministic summation and ordering);
/// the content hash covers the physically meaningful inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Params,
    pub grid: GridSpec,
    pub config: EvolutionConfig,
    pub seed: u64,
    pub tool_version: String,
    pub content_hash: String,
    /// Unix timestamp (seconds); informational, never hashed.
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        params: &Params,
        grid: GridSpec,
        config: &EvolutionConfig,
        seed: u64,
    ) -> Self {
        let mut manifest = RunManifest {
            command: command.to_string(),
            params: *params,
            grid,
            config: config.clone(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            content_hash: String::new(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        manifest.content_hash = manifest.compute_hash();
        manifest
    }

    /// SHA-256 over the hash-relevant fields (not the timestamp).
    pub fn compute_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.command.as_bytes());
        hasher.update(serde_json::to_vec(&self.params).unwrap_or_default());
        hasher.update(serde_json::to_vec(&self.grid).unwrap_or_default());
        hasher.update(serde_json::to_vec(&self.config).unwrap_or_default());
        hasher.update(self.seed.to_le_bytes());
        hasher.update(self.tool_version.as_bytes());
        format!("{:x}", hasher.finalize())
    }
}

fn termination_string(t: &Termination) -> String {
    match t {
        Termination::Completed => "Completed".to_string(),
        Termination::BlowupDetected(t) => format!("BlowupDetected({t})"),
        Termination::BoundaryContamination(t) => format!("BoundaryContamination({t})"),
    }
}

/// Serialize the trajectory time series as CSV. Columns: time, the
/// functional report, the per-record probes, then virial and modulation
/// columns when those series were recorded.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    let has_virial = traj.virial.len() == traj.times.len();
    let has_modulation =
        traj.modulations.as_ref().map(|m| m.len() == traj.times.len()).unwrap_or(false);

    out.push_str("t [time],");
    out.push_str(crate::functionals::FunctionalReport::csv_header());
    out.push_str(",sup_norm,grad_norm_sq,local_mass_fraction_10,outer_mass_fraction");
    if has_virial {
        out.push(',');
        out.push_str(crate::virial::VirialSample::csv_header());
    }
    if has_modulation {
        out.push(',');
        out.push_str(crate::modulation::ModulationState::csv_header());
    }
    out.push('\n');

    for k in 0..traj.times.len() {
        let p = &traj.probes[k];
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            traj.times[k],
            traj.reports[k].csv_row(),
            p.sup_norm,
            p.grad_norm_sq,
            p.local_mass_fraction,
            p.outer_mass_fraction
        ));
        if has_virial {
            out.push(',');
            out.push_str(&traj.virial[k].csv_row());
        }
        if has_modulation {
            out.push(',');
            out.push_str(&traj.modulations.as_ref().unwrap()[k].csv_row());
        }
        out.push('\n');
    }
    out
}

/// Write a run directory: `manifest.json`, `series.csv`, and (when states
/// were recorded) `states/NNNNNN.bin` snapshots in the grid binary format.
pub fn write_run_dir(
    dir: &Path,
    manifest: &RunManifest,
    traj: &Trajectory,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let manifest_json = serde_json::to_string_pretty(manifest)
        .map_err(|e| crate::error::Error::Format(e.to_string()))?;
    fs::write(dir.join("manifest.json"), manifest_json)?;
    let mut series = trajectory_csv(traj);
    series.push_str(&format!("# termination,{}\n", termination_string(&traj.termination)));
    fs::write(dir.join("series.csv"), series)?;
    if !traj.states.is_empty() {
        let states_dir = dir.join("states");
        fs::create_dir_all(&states_dir)?;
        let mut index = String::from("record,t [time],file\n");
        for (rec, state) in &traj.states {
            let name = format!("{rec:06}.bin");
            let mut buf = Vec::new();
            write_binary(state, &mut buf)?;
            fs::write(states_dir.join(&name), buf)?;
            index.push_str(&format!("{rec},{},states/{name}\n", traj.times[*rec]));
        }
        fs::write(dir.join("states.csv"), index)?;
    }
    Ok(dir.to_path_buf())
}

/// Load the recorded states of a run directory (record index, time, state).
pub fn read_run_states(dir: &Path) -> Result<Vec<(usize, f64, crate::grid::GridFunction)>> {
    let index = fs::read_to_string(dir.join("states.csv"))?;
    let mut out = Vec::new();
    for line in index.lines().skip(1) {
        let mut parts = line.split(',');
        let rec: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| crate::error::Error::Format(format!("bad states row: {line}")))?;
        let t: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| crate::error::Error::Format(format!("bad states row: {line}")))?;
        let rel = parts
            .next()
            .ok_or_else(|| crate::error::Error::Format(format!("bad states row: {line}")))?;
        let bytes = fs::read(dir.join(rel))?;
        out.push((rec, t, crate::grid::read_binary(bytes.as_slice())?));
    }
    Ok(out)
}
