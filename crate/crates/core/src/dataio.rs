//! File formats: embedding matrices (CSV and the `SCE1` binary layout),
//! whitespace-delimited segment files, and RTTM SPEAKER records.
//!
//! The segments file and the embeddings file of a recording are index
//! aligned: row i of the embeddings belongs to row i of the (start-sorted)
//! timeline. Enforcing the count match is left to the caller, which knows
//! both files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::hypersphere::RawEmbedding;
use crate::metrics::{Segment, SegmentTimeline};

/// Magic bytes of the binary embedding format: "SCE1", then little-endian
/// u32 count, u32 dimension, and count*dimension f64 values.
pub const EMBEDDING_MAGIC: &[u8; 4] = b"SCE1";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("row {row} has {got} values, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("row {row}: non-finite value")]
    NonFinite { row: usize },
    #[error("line {line}: segment duration is not positive")]
    NegativeDuration { line: usize },
    #[error("invalid data: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Csv,
    Binary,
}

/// One RTTM SPEAKER record.
#[derive(Debug, Clone, PartialEq)]
pub struct RttmRecord {
    pub file_id: String,
    pub channel: String,
    pub onset: f64,
    pub duration: f64,
    pub speaker: String,
}

fn embedding_from_row(values: Vec<f64>, row: usize) -> Result<RawEmbedding, DataError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DataError::NonFinite { row });
    }
    RawEmbedding::new(values).map_err(|e| DataError::Invalid(format!("row {row}: {e}")))
}

/// Reads an embedding file, auto-detecting the binary magic versus CSV.
/// Row order is preserved.
pub fn read_embeddings(path: &Path) -> Result<Vec<RawEmbedding>, DataError> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 4];
    let got = read_up_to(&mut file, &mut magic)?;
    if got == 4 && &magic == EMBEDDING_MAGIC {
        read_embeddings_binary_body(file)
    } else {
        drop(file);
        read_embeddings_csv(path)
    }
}

fn read_up_to(reader: &mut impl Read, buf: &mut [u8]) -> Result<usize, DataError> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = reader.read(&mut buf[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    Ok(filled)
}

fn read_embeddings_csv(path: &Path) -> Result<Vec<RawEmbedding>, DataError> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    let mut expected_dim = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let values = trimmed
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| DataError::ParseError {
                    line: line_no,
                    message: format!("bad float {tok:?}"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(d) = expected_dim {
            if values.len() != d {
                return Err(DataError::RaggedRows {
                    row: rows.len() + 1,
                    expected: d,
                    got: values.len(),
                });
            }
        } else {
            expected_dim = Some(values.len());
        }
        rows.push(embedding_from_row(values, rows.len() + 1)?);
    }
    if rows.is_empty() {
        return Err(DataError::ParseError {
            line: 0,
            message: "empty embedding file".into(),
        });
    }
    Ok(rows)
}

fn read_embeddings_binary_body(mut reader: impl Read) -> Result<Vec<RawEmbedding>, DataError> {
    let mut header = [0u8; 8];
    if read_up_to(&mut reader, &mut header)? != 8 {
        return Err(DataError::ParseError {
            line: 0,
            message: "truncated binary header".into(),
        });
    }
    let n = u32::from_le_bytes(header[0..4].try_into().expect("4 bytes")) as usize;
    let d = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
    if n == 0 || d == 0 {
        return Err(DataError::ParseError {
            line: 0,
            message: format!("binary header declares {n} x {d} matrix"),
        });
    }
    let mut body = vec![0u8; n * d * 8];
    if read_up_to(&mut reader, &mut body)? != body.len() {
        return Err(DataError::ParseError {
            line: 0,
            message: "truncated binary body".into(),
        });
    }
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let values: Vec<f64> = (0..d)
            .map(|j| {
                let at = (i * d + j) * 8;
                f64::from_le_bytes(body[at..at + 8].try_into().expect("8 bytes"))
            })
            .collect();
        rows.push(embedding_from_row(values, i + 1)?);
    }
    Ok(rows)
}

/// Writes embeddings in the chosen format. CSV values use the shortest
/// representation that round-trips; binary is bit-exact by construction.
pub fn write_embeddings(
    path: &Path,
    embeddings: &[RawEmbedding],
    format: EmbeddingFormat,
) -> Result<(), DataError> {
    if embeddings.is_empty() {
        return Err(DataError::Invalid("no embeddings to write".into()));
    }
    let d = embeddings[0].dim();
    if let Some((i, row)) = embeddings
        .iter()
        .enumerate()
        .find(|(_, r)| r.dim() != d)
    {
        return Err(DataError::RaggedRows {
            row: i + 1,
            expected: d,
            got: row.dim(),
        });
    }
    let mut writer = BufWriter::new(File::create(path)?);
    match format {
        EmbeddingFormat::Csv => {
            for row in embeddings {
                let line = row
                    .values()
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                writeln!(writer, "{line}")?;
            }
        }
        EmbeddingFormat::Binary => {
            writer.write_all(EMBEDDING_MAGIC)?;
            writer.write_all(&(embeddings.len() as u32).to_le_bytes())?;
            writer.write_all(&(d as u32).to_le_bytes())?;
            for row in embeddings {
                for v in row.values() {
                    writer.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    writer.flush()?;
    Ok(())
}

/// Reads a whitespace-delimited segments file: `start end [label]` per line.
/// The timeline comes back sorted by start time (stable).
pub fn read_segments(path: &Path) -> Result<SegmentTimeline, DataError> {
    let reader = BufReader::new(File::open(path)?);
    let mut segments = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(DataError::ParseError {
                line: line_no,
                message: format!("expected 'start end [label]', got {} fields", fields.len()),
            });
        }
        let parse = |tok: &str| {
            tok.parse::<f64>().map_err(|_| DataError::ParseError {
                line: line_no,
                message: format!("bad time {tok:?}"),
            })
        };
        let start = parse(fields[0])?;
        let end = parse(fields[1])?;
        if !start.is_finite() || !end.is_finite() {
            return Err(DataError::NonFinite { row: line_no });
        }
        if end <= start || start < 0.0 {
            return Err(DataError::NegativeDuration { line: line_no });
        }
        let label = fields.get(2).map(|s| s.to_string());
        segments.push(
            Segment::new(start, end, label)
                .map_err(|e| DataError::Invalid(format!("line {line_no}: {e}")))?,
        );
    }
    segments.sort_by(|a, b| a.start().partial_cmp(&b.start()).expect("finite starts"));
    Ok(SegmentTimeline::from_segments(segments))
}

/// Writes `start end [label]` lines at millisecond precision.
pub fn write_segments(path: &Path, timeline: &SegmentTimeline) -> Result<(), DataError> {
    let mut writer = BufWriter::new(File::create(path)?);
    for seg in timeline.segments() {
        match seg.label() {
            Some(label) => writeln!(writer, "{:.3} {:.3} {label}", seg.start(), seg.end())?,
            None => writeln!(writer, "{:.3} {:.3}", seg.start(), seg.end())?,
        }
    }
    writer.flush()?;
    Ok(())
}

/// Reads RTTM SPEAKER records into a timeline sorted by onset. Non-SPEAKER
/// lines are tolerated; their count comes back alongside the timeline.
pub fn read_rttm(path: &Path) -> Result<(SegmentTimeline, usize), DataError> {
    let reader = BufReader::new(File::open(path)?);
    let mut segments = Vec::new();
    let mut skipped = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields[0] != "SPEAKER" {
            skipped += 1;
            continue;
        }
        if fields.len() < 8 {
            return Err(DataError::ParseError {
                line: line_no,
                message: format!("SPEAKER line has {} fields, expected >= 8", fields.len()),
            });
        }
        let parse = |tok: &str| {
            tok.parse::<f64>().map_err(|_| DataError::ParseError {
                line: line_no,
                message: format!("bad time {tok:?}"),
            })
        };
        let onset = parse(fields[3])?;
        let duration = parse(fields[4])?;
        if !onset.is_finite() || !duration.is_finite() {
            return Err(DataError::NonFinite { row: line_no });
        }
        if duration <= 0.0 || onset < 0.0 {
            return Err(DataError::NegativeDuration { line: line_no });
        }
        let speaker = fields[7].to_string();
        segments.push(
            Segment::new(onset, onset + duration, Some(speaker))
                .map_err(|e| DataError::Invalid(format!("line {line_no}: {e}")))?,
        );
    }
    segments.sort_by(|a, b| a.start().partial_cmp(&b.start()).expect("finite onsets"));
    Ok((SegmentTimeline::from_segments(segments), skipped))
}

/// Writes the timeline as RTTM SPEAKER lines, onset and duration at
/// millisecond precision. Unlabeled segments get the `_unlabeled` speaker.
pub fn write_rttm(path: &Path, timeline: &SegmentTimeline, file_id: &str) -> Result<(), DataError> {
    let mut writer = BufWriter::new(File::create(path)?);
    for seg in timeline.segments() {
        let speaker = seg.label().unwrap_or("_unlabeled");
        writeln!(
            writer,
            "SPEAKER {file_id} 1 {:.3} {:.3} <NA> <NA> {speaker} <NA> <NA>",
            seg.start(),
            seg.duration()
        )?;
    }
    writer.flush()?;
    Ok(())
}
