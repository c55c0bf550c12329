//! Corpus file formats.

pub mod native;
pub mod sdp;
pub mod vectors;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::DepGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Sdp,
    Native,
}

impl Format {
    /// `.sdp` files use the SemEval column format; everything else the
    /// native edge list.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("sdp") => Format::Sdp,
            _ => Format::Native,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sdp" => Ok(Format::Sdp),
            "native" => Ok(Format::Native),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

pub fn read_file(path: &Path, format: Format) -> Result<Vec<DepGraph>> {
    let reader = BufReader::new(File::open(path)?);
    match format {
        Format::Sdp => sdp::read_sdp(reader),
        Format::Native => native::read_native(reader),
    }
}

pub fn write_file(path: &Path, format: Format, graphs: &[DepGraph]) -> Result<()> {
    let writer = BufWriter::new(File::create(path)?);
    match format {
        Format::Sdp => sdp::write_sdp(writer, graphs),
        Format::Native => native::write_native(writer, graphs),
    }
}
