use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::anim::{Clip, Skeleton};

use super::{parse_bvh, BvhError, MotionFile};

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("duplicate clip name `{stem}` ({})", paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    DuplicateName { stem: String, paths: Vec<PathBuf> },
    #[error("{}", ParseFailures(failures))]
    Parse { failures: Vec<(PathBuf, BvhError)> },
}

struct ParseFailures<'a>(&'a [(PathBuf, BvhError)]);

impl fmt::Display for ParseFailures<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} file(s) failed to parse", self.0.len())?;
        for (p, e) in self.0 {
            write!(f, "\n  {}: {e}", p.display())?;
        }
        Ok(())
    }
}

/// Named clips and the skeletons they were recorded on. Both maps are keyed
/// by file stem, so iteration is lexicographic.
#[derive(Debug, Clone, Default)]
pub struct ClipLibrary {
    motions: BTreeMap<String, MotionFile>,
    skeletons: BTreeMap<String, Skeleton>,
}

impl ClipLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, mf: MotionFile) -> Result<(), LibraryError> {
        let name = mf.clip.name().to_string();
        if self.motions.contains_key(&name) {
            return Err(LibraryError::DuplicateName {
                stem: name.clone(),
                paths: vec![
                    PathBuf::from(&self.motions[&name].source_path),
                    PathBuf::from(&mf.source_path),
                ],
            });
        }
        self.skeletons.insert(mf.skeleton.name().to_string(), mf.skeleton.clone());
        self.motions.insert(name, mf);
        Ok(())
    }

    pub fn clip(&self, name: &str) -> Option<&Clip> {
        self.motions.get(name).map(|m| &m.clip)
    }

    pub fn motion(&self, name: &str) -> Option<&MotionFile> {
        self.motions.get(name)
    }

    pub fn skeleton(&self, name: &str) -> Option<&Skeleton> {
        self.skeletons.get(name)
    }

    /// Skeleton a clip was recorded on.
    pub fn clip_skeleton(&self, clip: &str) -> Option<&Skeleton> {
        self.motions.get(clip).map(|m| &m.skeleton)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.motions.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.motions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motions.is_empty()
    }
}

/// Loads every `*.bvh` in `dir` (not recursive). Any parse failure aborts
/// the load with a report naming each bad file.
pub fn load_library(dir: &Path) -> Result<ClipLibrary, LibraryError> {
    let io = |e: std::io::Error| LibraryError::Io { path: dir.to_path_buf(), message: e.to_string() };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    paths.retain(|p| {
        p.is_file()
            && p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("bvh"))
    });
    paths.sort_by(|a, b| a.file_stem().cmp(&b.file_stem()).then_with(|| a.cmp(b)));

    for pair in paths.windows(2) {
        if pair[0].file_stem() == pair[1].file_stem() {
            return Err(LibraryError::DuplicateName {
                stem: pair[0].file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                paths: pair.to_vec(),
            });
        }
    }

    let mut lib = ClipLibrary::new();
    let mut failures = Vec::new();
    for path in paths {
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => return Err(LibraryError::Io { path, message: e.to_string() }),
        };
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        match parse_bvh(&text, &stem) {
            Ok(mut mf) => {
                mf.source_path = path.display().to_string();
                lib.insert(mf)?;
            }
            Err(e) => failures.push((path, e)),
        }
    }
    if failures.is_empty() {
        Ok(lib)
    } else {
        Err(LibraryError::Parse { failures })
    }
}
