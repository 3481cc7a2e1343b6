use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::run::{Aborted, RunOutput};
use super::trace::{write_param_log, write_trace};
use crate::{Error, Result};

/// Files written for a run, relative to the output directory.
#[derive(Clone, Debug)]
pub struct OutputPaths {
    pub config: PathBuf,
    pub trace: PathBuf,
    pub baseline_trace: PathBuf,
    pub params: PathBuf,
    pub summary: PathBuf,
    pub network_initial: PathBuf,
    pub network_final: PathBuf,
    pub schedule: PathBuf,
}

impl OutputPaths {
    pub fn new(dir: &Path) -> Self {
        OutputPaths {
            config: dir.join("config.json"),
            trace: dir.join("trace.csv"),
            baseline_trace: dir.join("baseline_trace.csv"),
            params: dir.join("params.csv"),
            summary: dir.join("summary.json"),
            network_initial: dir.join("network_initial.json"),
            network_final: dir.join("network_final.json"),
            schedule: dir.join("schedule.csv"),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &RunOutput) -> Result<OutputPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = OutputPaths::new(dir);
    write_text(&paths.config, &cfg.to_json()?)?;
    write_trace(create(&paths.trace)?, &out.trace)?;
    if let Some(base) = &out.baseline_trace {
        write_trace(create(&paths.baseline_trace)?, base)?;
    }
    write_param_log(create(&paths.params)?, &out.params)?;
    write_text(&paths.summary, &serde_json::to_string_pretty(&out.metrics)?)?;
    write_text(&paths.network_initial, &out.initial_network.to_json()?)?;
    write_text(&paths.network_final, &out.final_network.to_json()?)?;
    if let Some(s) = &out.schedule {
        s.write_csv(create(&paths.schedule)?)?;
    }
    Ok(paths)
}

/// Diagnostic output of an aborted run: the config and the rows logged up to
/// the failure.
pub fn write_aborted(dir: &Path, cfg: &ExperimentConfig, run: &Aborted) -> Result<OutputPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = OutputPaths::new(dir);
    write_text(&paths.config, &cfg.to_json()?)?;
    write_trace(create(&paths.trace)?, &run.trace)?;
    write_param_log(create(&paths.params)?, &run.params)?;
    Ok(paths)
}
