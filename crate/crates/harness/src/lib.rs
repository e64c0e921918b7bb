//! Demo recording, inference, autoplay and baselines over the simulated games.

pub mod autoplay;
pub mod demo;
pub mod serve;
pub mod wire;

use std::path::{Path, PathBuf};

use playtest_core::infer::{infer_tactics_report, pair_demo, Inference, InferError, Provenance};
use playtest_core::scene::{load_icon_dir, IconSpec, SceneError};
use playtest_core::trace::TraceError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use autoplay::{run_random_baseline, run_test, run_test_observed, Budget, Counts, Step, TestReport, THRESHOLD};
pub use demo::{record_demo, ActionSource, DemoSession, Limit, Manifest, OracleSource, SourceKind, UiInput, UiSource};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no action arrived for the snapshot at {0} ms")]
    SourceTimeout(u64),
    #[error("the demo was stopped")]
    Stopped,
    #[error("{0} is not empty")]
    OutputNotEmpty(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Infer(#[from] InferError),
}

/// Hex SHA-256 over every spec's file name and PPM bytes, in order.
pub fn specs_hash(specs: &[IconSpec]) -> String {
    let mut h = Sha256::new();
    for s in specs {
        h.update(s.file_name().as_bytes());
        h.update([0]);
        h.update(s.template.to_ppm());
    }
    hex::encode(h.finalize())
}

/// Infers tactics from a recorded demo directory.
pub fn infer_demo(demo: &Path, icons: &Path, seed: u64) -> Result<Inference, HarnessError> {
    let specs = load_icon_dir(icons)?;
    infer_with_specs(demo, &specs, icons, seed)
}

pub fn infer_with_specs(demo: &Path, specs: &[IconSpec], icons: &Path, seed: u64) -> Result<Inference, HarnessError> {
    let pairs = pair_demo(demo, specs, THRESHOLD)?;
    let provenance = Provenance {
        session: demo.display().to_string(),
        icons: icons.display().to_string(),
        icons_hash: specs_hash(specs),
    };
    Ok(infer_tactics_report(&pairs.pairs, provenance, &mut ChaCha8Rng::seed_from_u64(seed))?)
}
