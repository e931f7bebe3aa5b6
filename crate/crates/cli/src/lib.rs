//! Command-line driver: reads a JSON run config, dispatches to the
//! diagnostics or simulators, and writes a JSON document or a CSV table
//! with a metadata sidecar.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use config::{parse_config, Format, Overrides, RunConfig};
use error::CliError;
use output::{json_document, sidecar_path, to_json_text, write_file};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rendered output of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    /// Main document: JSON text or CSV table.
    pub main: String,
    /// Metadata document for CSV output.
    pub sidecar: Option<String>,
    pub path: Option<PathBuf>,
}

fn meta(cfg: &RunConfig) -> Value {
    json!({
        "resolved_config": cfg,
        "seed": cfg.seed(),
        "version": VERSION,
        "rng_name": rm_hopf::sim::rng::RNG_NAME,
    })
}

/// Parses, resolves and runs a config document.
pub fn run_document(bytes: &[u8], overrides: &Overrides) -> Result<Rendered, CliError> {
    let mut cfg = parse_config(bytes)?;
    cfg.apply_overrides(overrides);
    let mut cfg = cfg.resolve()?;
    let outcome = commands::run(&mut cfg)?;
    let meta = meta(&cfg);
    let path = cfg.out_path().map(PathBuf::from);
    Ok(match cfg.format() {
        Format::Json => Rendered {
            main: to_json_text(&json_document(&meta, &outcome.result)),
            sidecar: None,
            path,
        },
        Format::Csv => Rendered {
            main: outcome.table.to_csv(),
            sidecar: Some(to_json_text(&json!({ "meta": meta }))),
            path,
        },
    })
}

/// Writes a rendered run to its path (plus `<path>.meta.json` for CSV), or
/// to standard output when no path is configured.
pub fn emit(rendered: &Rendered) -> Result<(), CliError> {
    match &rendered.path {
        Some(path) => {
            write_file(path, &rendered.main)?;
            if let Some(side) = &rendered.sidecar {
                write_file(&sidecar_path(path), side)?;
            }
        }
        None => print!("{}", rendered.main),
    }
    Ok(())
}

pub fn run_file(path: &Path, overrides: &Overrides) -> Result<Rendered, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::ReadConfig {
        path: path.to_path_buf(),
        source,
    })?;
    run_document(&bytes, overrides)
}
