//! Shared inputs for the benchmarks: the small instance under `data/small`.

use std::fs;
use std::path::PathBuf;

use mgs_core::{io, GenerationSpec, MicrogridConfig};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/small")
}

pub fn small_instance() -> (MicrogridConfig, GenerationSpec) {
    let dir = data_dir();
    let config = io::load_config(&dir.join("config.json")).expect("small config");
    let text = fs::read_to_string(dir.join("generation.json")).expect("small generation spec");
    let spec = serde_json::from_str(&text).expect("generation spec parses");
    (config, spec)
}
