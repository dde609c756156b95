//! JSON Lines persistence: one header object, then one query group per line.
//!
//! ```text
//! {"format":"moltr-dataset","version":1,"m":16,"k":3,"objectives":[...]}
//! {"query_id":0,"timestamp":0,"items":[...],"labels":[[0,null,null],[1,0,null],...]}
//! ...
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, ObjectiveSpec, QueryGroup};
use crate::error::{Error, Result};

pub const DATASET_FORMAT: &str = "moltr-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    m: usize,
    k: usize,
    objectives: Vec<ObjectiveSpec>,
}

pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    let header = Header {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        m: dataset.m,
        k: dataset.num_objectives(),
        objectives: dataset.objectives.clone(),
    };
    let io_err = |e| Error::io("<dataset writer>", e);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n").map_err(io_err)?;
    for g in &dataset.groups {
        serde_json::to_writer(&mut out, g)?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(dataset, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Reads a dataset; `origin` only labels error messages.
pub fn read_dataset<R: Read>(reader: R, origin: &Path) -> Result<Dataset> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(reader).lines();
    let header_text = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(origin, e))?,
        None => return Err(parse_err(1, "missing header line (file is empty)".into())),
    };
    let header: Header = serde_json::from_str(&header_text).map_err(|e| parse_err(1, format!("bad header: {e}")))?;
    if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
        return Err(parse_err(
            1,
            format!("unsupported format {} v{}", header.format, header.version),
        ));
    }
    if header.objectives.len() != header.k {
        return Err(parse_err(
            1,
            format!(
                "header declares k={} but lists {} objectives",
                header.k,
                header.objectives.len()
            ),
        ));
    }
    let mut dataset = Dataset {
        objectives: header.objectives,
        m: header.m,
        groups: Vec::new(),
    };
    super::validate_objectives(&dataset.objectives).map_err(|e| parse_err(1, e.to_string()))?;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let group: QueryGroup = serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        dataset
            .validate_group(&group)
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        dataset.groups.push(group);
    }
    Ok(dataset)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    read_dataset(file, &path)
}
