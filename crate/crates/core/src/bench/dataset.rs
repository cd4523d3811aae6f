use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{read_image, BoundingBox, ImagePlane};

/// Challenge tags used by OTB-2013 and UAV-123.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    IV,
    OPR,
    SV,
    OC,
    D,
    MB,
    FM,
    IPR,
    LR,
    BC,
    OV,
    AR,
    FO,
    PO,
    CM,
    SO,
    VC,
}

impl Attribute {
    pub const ALL: [Attribute; 17] = [
        Attribute::IV,
        Attribute::OPR,
        Attribute::SV,
        Attribute::OC,
        Attribute::D,
        Attribute::MB,
        Attribute::FM,
        Attribute::IPR,
        Attribute::LR,
        Attribute::BC,
        Attribute::OV,
        Attribute::AR,
        Attribute::FO,
        Attribute::PO,
        Attribute::CM,
        Attribute::SO,
        Attribute::VC,
    ];
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Attribute {
    type Err = String;

    /// Accepts the short tags above and the longer spellings used in the
    /// OTB and UAV123 attribute files (OCC, DEF, ARC, FOC, POC, SOB).
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let alias = match s.to_ascii_uppercase().as_str() {
            "OCC" => Some(Attribute::OC),
            "DEF" => Some(Attribute::D),
            "ARC" => Some(Attribute::AR),
            "FOC" => Some(Attribute::FO),
            "POC" => Some(Attribute::PO),
            "SOB" => Some(Attribute::SO),
            _ => None,
        };
        alias
            .or_else(|| {
                Attribute::ALL
                    .into_iter()
                    .find(|a| a.to_string().eq_ignore_ascii_case(s))
            })
            .ok_or_else(|| format!("unknown attribute tag {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRecord {
    pub name: String,
    pub dir: PathBuf,
    pub frames: Vec<PathBuf>,
    /// Numeric file stems of `frames`, e.g. 1 for `0001.jpg`.
    pub frame_numbers: Vec<u64>,
    /// 0-based pixel coordinates, one per frame.
    pub truth: Vec<BoundingBox>,
    pub attributes: Vec<Attribute>,
}

impl SequenceRecord {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn read_frame(&self, index: usize) -> Result<ImagePlane> {
        read_image(&self.frames[index])
    }
}

/// Parses `x,y,w,h` lines (comma, tab or space separated) with a 1-based
/// origin and returns 0-based boxes.
pub fn parse_boxes(text: &str, path: &Path) -> Result<Vec<BoundingBox>> {
    let mut boxes = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let values: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| parse_err(format!("{t:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if values.len() < 4 {
            return Err(parse_err(format!(
                "expected 4 values, found {}",
                values.len()
            )));
        }
        let b = BoundingBox::new(values[0] - 1.0, values[1] - 1.0, values[2], values[3])
            .map_err(|e| parse_err(e.to_string()))?;
        boxes.push(b);
    }
    Ok(boxes)
}

fn numbered_frames(img_dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let entries = std::fs::read_dir(img_dir).map_err(|e| Error::io(img_dir, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(img_dir, e))?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "jpg" | "jpeg" | "png"));
        let number = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u64>().ok());
        if let (true, Some(number)) = (is_image, number) {
            frames.push((number, path));
        }
    }
    frames.sort();
    Ok(frames)
}

/// Loads `<dir>/img/*` frames, `<dir>/groundtruth_rect.txt` and the optional
/// `<dir>/attributes.txt` (one tag per line).
pub fn load_sequence(dir: &Path) -> Result<SequenceRecord> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());

    let gt_path = dir.join("groundtruth_rect.txt");
    let text = std::fs::read_to_string(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
    let truth = parse_boxes(&text, &gt_path)?;

    let (frame_numbers, frames): (Vec<u64>, Vec<PathBuf>) =
        numbered_frames(&dir.join("img"))?.into_iter().unzip();
    if frames.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no numbered frames in img/",
            dir.display()
        )));
    }
    if frames.len() != truth.len() {
        return Err(Error::CountMismatch {
            frames: frames.len(),
            boxes: truth.len(),
        });
    }

    let attr_path = dir.join("attributes.txt");
    let mut attributes = Vec::new();
    if attr_path.is_file() {
        let text = std::fs::read_to_string(&attr_path).map_err(|e| Error::io(&attr_path, e))?;
        for (n, line) in text.lines().enumerate() {
            let tag = line.trim();
            if tag.is_empty() {
                continue;
            }
            let attr = tag.parse().map_err(|message| Error::Parse {
                path: attr_path.clone(),
                line: n + 1,
                message,
            })?;
            if !attributes.contains(&attr) {
                attributes.push(attr);
            }
        }
    }

    Ok(SequenceRecord {
        name,
        dir: dir.to_path_buf(),
        frames,
        frame_numbers,
        truth,
        attributes,
    })
}

/// Every subdirectory holding a `groundtruth_rect.txt`, sorted by name.
pub fn load_dataset(dir: &Path) -> Result<Vec<SequenceRecord>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.join("groundtruth_rect.txt").is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no sequences found",
            dir.display()
        )));
    }
    dirs.iter()
        .map(|d| {
            load_sequence(d).map_err(|e| Error::Sequence {
                name: d
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                source: Box::new(e),
            })
        })
        .collect()
}
