//! Feature files.
//!
//! Layout (little-endian): magic `STFE`, version u16 = 1, n_fixed u32, column
//! count u8, one id byte per column, sample count u32; then per sample an id
//! (u16 length + UTF-8), label u8, backend id (u16 length + UTF-8) and
//! `n_fixed * columns` f32 values, row-major.

use std::fs;
use std::path::Path;

use super::{FeatureColumn, FeatureSequence};
use crate::binio::{put_short_str, put_u32_len, Reader};
use crate::error::{Error, Result};
use crate::sample::Label;

const MAGIC: &[u8; 4] = b"STFE";
const VERSION: u16 = 1;

pub fn encode_features(seqs: &[FeatureSequence]) -> Result<Vec<u8>> {
    let first = seqs
        .first()
        .ok_or_else(|| Error::invalid("no feature sequences to write"))?;
    let n_fixed = first.n_fixed();
    let columns = first.columns().to_vec();
    if let Some(bad) = seqs.iter().find(|s| s.n_fixed() != n_fixed || s.columns() != columns) {
        return Err(Error::invalid(format!(
            "sample {:?} has a different shape from the first sample",
            bad.sample_id
        )));
    }
    let mut out = Vec::with_capacity(16 + seqs.len() * (32 + first.values().len() * 4));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_u32_len(&mut out, n_fixed, "n_fixed")?;
    out.push(columns.len() as u8);
    out.extend(columns.iter().map(|c| *c as u8));
    put_u32_len(&mut out, seqs.len(), "sample count")?;
    for s in seqs {
        put_short_str(&mut out, &s.sample_id)?;
        out.push(s.label.as_u8());
        put_short_str(&mut out, &s.backend_id)?;
        for v in s.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_features(path: impl AsRef<Path>, seqs: &[FeatureSequence]) -> Result<()> {
    fs::write(path, encode_features(seqs)?)?;
    Ok(())
}

pub fn decode_features(bytes: &[u8]) -> Result<Vec<FeatureSequence>> {
    let mut rd = Reader::new(bytes);
    if rd.take(4).map_err(|_| rd.error("missing magic"))? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "bad magic, expected STFE".into(),
        });
    }
    let version = rd.u16()?;
    if version != VERSION {
        return Err(Error::Format {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let n_fixed = rd.u32()? as usize;
    if n_fixed == 0 {
        return Err(rd.error("n_fixed is zero"));
    }
    let width = rd.u8()? as usize;
    if width == 0 {
        return Err(rd.error("no columns"));
    }
    let mut columns = Vec::with_capacity(width);
    for _ in 0..width {
        let at = rd.offset();
        let id = rd.u8()?;
        let col = FeatureColumn::from_id(id).ok_or(Error::Format {
            offset: at,
            message: format!("unknown column id {id}"),
        })?;
        if columns.contains(&col) {
            return Err(Error::Format {
                offset: at,
                message: format!("duplicate column id {id}"),
            });
        }
        columns.push(col);
    }
    let count = rd.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let sample_id = rd.short_str()?;
        let at = rd.offset();
        let label = Label::try_from(rd.u8()?).map_err(|_| Error::Format {
            offset: at,
            message: "label outside {0,1}".into(),
        })?;
        let backend_id = rd.short_str()?;
        let mut values = Vec::with_capacity(n_fixed * width);
        for _ in 0..n_fixed * width {
            let at = rd.offset();
            let v = rd.f32()?;
            if !v.is_finite() {
                return Err(Error::Format {
                    offset: at,
                    message: "non-finite feature value".into(),
                });
            }
            values.push(v);
        }
        out.push(FeatureSequence::new(
            sample_id,
            label,
            backend_id,
            columns.clone(),
            n_fixed,
            values,
        )?);
    }
    if !rd.is_empty() {
        return Err(rd.error("trailing bytes after last sample (row count does not match n_fixed)"));
    }
    Ok(out)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<FeatureSequence>> {
    decode_features(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureColumn::*;

    fn seq(id: &str, label: Label, n: usize) -> FeatureSequence {
        let values = (0..n * 4).map(|i| i as f32 * 0.01).collect();
        FeatureSequence::new(id, label, "ngram", vec![Probability, LogRank, CumulativeProbability, Entropy], n, values)
            .unwrap()
    }

    #[test]
    fn round_trip_three_sequences() {
        let seqs = vec![seq("a", Label::Human, 5), seq("b", Label::Machine, 5), seq("c", Label::Human, 5)];
        let back = decode_features(&encode_features(&seqs).unwrap()).unwrap();
        assert_eq!(back, seqs);
    }

    #[test]
    fn label_outside_binary_rejected() {
        let mut bytes = encode_features(&[seq("a", Label::Human, 2)]).unwrap();
        // header: 4 + 2 + 4 + 1 + 4 + 4, then id (2 + 1)
        let label_at = 4 + 2 + 4 + 1 + 4 + 4 + 3;
        bytes[label_at] = 7;
        let err = decode_features(&bytes).unwrap_err();
        assert!(matches!(err, Error::Format { offset, .. } if offset == label_at as u64));
    }

    #[test]
    fn row_count_mismatch_rejected() {
        // a 3-row sample under a header declaring n_fixed = 4
        let short = seq("a", Label::Human, 3);
        let mut bytes = encode_features(&[short]).unwrap();
        bytes[6..10].copy_from_slice(&4u32.to_le_bytes());
        assert!(matches!(decode_features(&bytes), Err(Error::Format { .. })));
        // and one declaring n_fixed = 2
        bytes[6..10].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(decode_features(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn mixed_shapes_refused_on_write() {
        assert!(encode_features(&[seq("a", Label::Human, 3), seq("b", Label::Human, 4)]).is_err());
        assert!(encode_features(&[]).is_err());
    }
}
