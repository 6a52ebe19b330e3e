//! Score-stream files: per-token statistics produced by an external model.
//!
//! Layout (little-endian): magic `STSC`, version u16 = 1, |V| u32, sample
//! count u32; then per sample an id (u16 length + UTF-8), n u32, and n records
//! of `(token_id u32, p f64, r u32, c f64, e f64)`. Positions are implicit.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{DistributionStats, ScoringBackend, TokenSequence};
use crate::binio::{put_short_str, put_u32_len, Reader};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"STSC";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSample {
    pub sample_id: String,
    pub stats: Vec<DistributionStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreStream {
    pub vocab_size: u32,
    pub samples: Vec<StreamSample>,
}

pub fn encode_score_stream(stream: &ScoreStream) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&stream.vocab_size.to_le_bytes());
    put_u32_len(&mut out, stream.samples.len(), "sample count")?;
    for sample in &stream.samples {
        put_short_str(&mut out, &sample.sample_id)?;
        put_u32_len(&mut out, sample.stats.len(), "sequence length")?;
        for s in &sample.stats {
            out.extend_from_slice(&s.token_id.to_le_bytes());
            out.extend_from_slice(&s.p.to_le_bytes());
            out.extend_from_slice(&s.r.to_le_bytes());
            out.extend_from_slice(&s.c.to_le_bytes());
            out.extend_from_slice(&s.e.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_score_stream(path: impl AsRef<Path>, stream: &ScoreStream) -> Result<()> {
    fs::write(path, encode_score_stream(stream)?)?;
    Ok(())
}

pub fn decode_score_stream(bytes: &[u8]) -> Result<ScoreStream> {
    let mut rd = Reader::new(bytes);
    if rd.take(4).map_err(|_| rd.error("missing magic"))? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "bad magic, expected STSC".into(),
        });
    }
    let version = rd.u16()?;
    if version != VERSION {
        return Err(Error::Format {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let vocab_size = rd.u32()?;
    if vocab_size == 0 {
        return Err(rd.error("vocabulary size is zero"));
    }
    let count = rd.u32()? as usize;
    let mut samples = Vec::with_capacity(count.min(1 << 16));
    let mut record = 0usize;
    for _ in 0..count {
        let sample_id = rd.short_str()?;
        let n = rd.u32()? as usize;
        let mut stats = Vec::with_capacity(n.min(1 << 16));
        for i in 0..n {
            let at = rd.offset();
            let token_id = rd.u32()?;
            let p = rd.f64()?;
            let r = rd.u32()?;
            let c = rd.f64()?;
            let e = rd.f64()?;
            if ![p, c, e].iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { record });
            }
            let out_of_range = token_id >= vocab_size
                || !(p > 0.0 && p <= 1.0)
                || r < 1
                || r > vocab_size
                || !(0.0..=1.0).contains(&c)
                || e < 0.0;
            if out_of_range {
                return Err(Error::Format {
                    offset: at,
                    message: format!("record {record} has out-of-range values"),
                });
            }
            stats.push(DistributionStats {
                position: i as u32 + 1,
                token_id,
                p,
                r,
                c,
                e,
            });
            record += 1;
        }
        samples.push(StreamSample { sample_id, stats });
    }
    if !rd.is_empty() {
        return Err(rd.error("trailing bytes after last sample"));
    }
    Ok(ScoreStream { vocab_size, samples })
}

pub fn read_score_stream(path: impl AsRef<Path>) -> Result<ScoreStream> {
    decode_score_stream(&fs::read(path)?)
}

/// Replays a score stream as a scoring backend, keyed by sample id.
#[derive(Debug, Clone)]
pub struct StreamBackend {
    name: String,
    stream: ScoreStream,
    by_id: HashMap<String, usize>,
}

impl StreamBackend {
    pub fn new(name: impl Into<String>, stream: ScoreStream) -> Result<Self> {
        let mut by_id = HashMap::new();
        for (i, s) in stream.samples.iter().enumerate() {
            if by_id.insert(s.sample_id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate sample id {:?} in score stream", s.sample_id)));
            }
        }
        Ok(StreamBackend {
            name: name.into(),
            stream,
            by_id,
        })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        StreamBackend::new(name, read_score_stream(path)?)
    }

    fn lookup(&self, sample_id: &str) -> Result<&[DistributionStats]> {
        self.by_id
            .get(sample_id)
            .map(|&i| self.stream.samples[i].stats.as_slice())
            .ok_or_else(|| Error::Backend {
                position: 0,
                message: format!("sample {sample_id:?} not in score stream"),
            })
    }
}

impl ScoringBackend for StreamBackend {
    fn backend_id(&self) -> String {
        format!("stream({},vocab={},entropy=ln)", self.name, self.stream.vocab_size)
    }

    fn vocab_size(&self) -> usize {
        self.stream.vocab_size as usize
    }

    fn score(&self, tokens: &TokenSequence) -> Result<Vec<DistributionStats>> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput);
        }
        let recorded = self.lookup(&tokens.source_sample_id)?;
        for (i, &id) in tokens.ids.iter().enumerate() {
            match recorded.get(i) {
                None => {
                    return Err(Error::Backend {
                        position: i + 1,
                        message: format!("score stream ends after {} positions", recorded.len()),
                    })
                }
                Some(s) if s.token_id != id => {
                    return Err(Error::Backend {
                        position: i + 1,
                        message: format!("token {id} does not match recorded token {}", s.token_id),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(recorded[..tokens.len()].to_vec())
    }

    fn score_document(&self, sample_id: &str, _text: &str) -> Result<Vec<DistributionStats>> {
        let recorded = self.lookup(sample_id)?;
        if recorded.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(recorded.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stat(i: u32, tok: u32, p: f64, r: u32, c: f64, e: f64) -> DistributionStats {
        DistributionStats {
            position: i,
            token_id: tok,
            p,
            r,
            c,
            e,
        }
    }

    fn sample_stream(n: u32) -> ScoreStream {
        ScoreStream {
            vocab_size: 10,
            samples: vec![StreamSample {
                sample_id: "doc-1".into(),
                stats: (1..=n).map(|i| stat(i, i % 10, 0.1 * f64::from(i % 9 + 1), 1 + i % 10, 0.0, 1.5)).collect(),
            }],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample_stream(10);
        assert_eq!(decode_score_stream(&encode_score_stream(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn truncated_records_rejected() {
        let mut bytes = encode_score_stream(&sample_stream(10)).unwrap();
        // drop the last record: declared n = 10, 9 present
        bytes.truncate(bytes.len() - 32);
        assert!(matches!(decode_score_stream(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn nan_rejected_with_record_index() {
        let mut s = sample_stream(5);
        s.samples[0].stats[3].p = f64::NAN;
        let err = decode_score_stream(&encode_score_stream(&s).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { record: 3 }));
        assert_eq!(err.to_string(), "non-finite value in record 3");
    }

    #[test]
    fn bad_magic_and_trailing_bytes() {
        let mut bytes = encode_score_stream(&sample_stream(2)).unwrap();
        bytes.push(0);
        assert!(decode_score_stream(&bytes).is_err());
        bytes[0] = b'X';
        assert!(matches!(decode_score_stream(&bytes), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn backend_reports_position_when_stream_is_short() {
        let backend = StreamBackend::new("t", sample_stream(3)).unwrap();
        let mut ids: Vec<u32> = (1..=3).map(|i| i % 10).collect();
        assert_eq!(backend.score(&TokenSequence::new(ids.clone(), "doc-1")).unwrap().len(), 3);
        ids.push(4);
        let err = backend.score(&TokenSequence::new(ids, "doc-1")).unwrap_err();
        assert!(matches!(err, Error::Backend { position: 4, .. }));
        assert!(backend.score_document("missing", "").is_err());
    }
}
