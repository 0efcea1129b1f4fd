#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use shadowstage_core::cuesheet::{parse_cuesheet, CueSheet};
use shadowstage_core::engine::{Show, ShowConfig};
use shadowstage_core::motion_io::{load_library, ClipLibrary};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn library() -> ClipLibrary {
    load_library(&fixtures().join("clips")).expect("fixture clips load")
}

pub fn show_config() -> ShowConfig {
    ShowConfig::load(&fixtures().join("show.toml")).expect("fixture config loads")
}

pub fn show_sheet() -> CueSheet {
    let text = std::fs::read_to_string(fixtures().join("show.cue")).unwrap();
    parse_cuesheet(&text).expect("fixture sheet parses")
}

/// Config with the fixture aliases and a sheet given as text.
pub fn show_from_text(text: &str) -> Show {
    let sheet = parse_cuesheet(text).unwrap();
    Show::new(&show_config(), Arc::new(library()), sheet).unwrap()
}
