//! Motion capture file IO and the on-disk clip library.

mod bvh;
mod library;

pub use bvh::{parse_bvh, write_bvh, BvhError, BvhErrorKind};
pub use library::{load_library, ClipLibrary, LibraryError};

use std::path::Path;

use crate::anim::{Clip, Skeleton};

/// One recorded take: the skeleton it was captured on and its clip.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionFile {
    pub skeleton: Skeleton,
    pub clip: Clip,
    pub source_path: String,
}

impl MotionFile {
    /// Reads and parses a BVH file, naming skeleton and clip after the file
    /// stem.
    pub fn load(path: &Path) -> Result<MotionFile, LibraryError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LibraryError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("clip").to_string();
        let mut mf = parse_bvh(&text, &stem).map_err(|e| LibraryError::Parse {
            failures: vec![(path.to_path_buf(), e)],
        })?;
        mf.source_path = path.display().to_string();
        Ok(mf)
    }
}
