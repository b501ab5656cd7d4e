use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::run::Run;

pub const CHECKPOINT_FORMAT: &str = "fcmmsb-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<R> {
    format: String,
    version: u32,
    run: R,
}

/// Serializes a run (state, RNG position, accumulators) as JSON.
pub fn checkpoint_to_string(run: &Run) -> Result<String> {
    let env = Envelope {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        run,
    };
    Ok(serde_json::to_string(&env)?)
}

pub fn checkpoint_from_str(s: &str) -> Result<Run> {
    let env: Envelope<Run> = serde_json::from_str(s)?;
    check_header(&env.format, env.version)?;
    Ok(env.run)
}

fn check_header(format: &str, version: u32) -> Result<()> {
    if format != CHECKPOINT_FORMAT {
        return Err(Error::Data(format!("not a checkpoint (format {format:?})")));
    }
    if version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    Ok(())
}

pub fn save_checkpoint(run: &Run, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let env = Envelope {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        run,
    };
    serde_json::to_writer(&mut w, &env)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Run> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let env: Envelope<Run> = serde_json::from_reader(BufReader::new(file))?;
    check_header(&env.format, env.version)?;
    Ok(env.run)
}
