//! Topic model persistence.
//!
//! The model file is binary and versioned: magic bytes, schema version,
//! then the producing config hash, the vocabulary hash, the params, and
//! the row-major phi matrices as little-endian 64-bit floats. A separate
//! human-readable TSV lists the top words per topic.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::textprep::Vocabulary;

use super::{top_words, MgldaParams, TopicModel, TopicScope};

const MAGIC: &[u8; 8] = b"RVTOPICM";
const SCHEMA_VERSION: u32 = 1;

/// Provenance fields stored ahead of the model payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelFileHeader {
    pub schema_version: u32,
    pub config_hash: [u8; 32],
    pub vocab_hash: [u8; 32],
}

pub fn write_model<W: Write>(
    mut w: W,
    model: &TopicModel,
    config_hash: &[u8; 32],
    vocab_hash: &[u8; 32],
) -> Result<()> {
    let io_err = |e| Error::io("<model writer>", e);
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&SCHEMA_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(config_hash).map_err(io_err)?;
    w.write_all(vocab_hash).map_err(io_err)?;
    let p = &model.params;
    for value in [
        p.k_global as u32,
        p.k_local as u32,
        p.window_len as u32,
        p.iterations,
        p.burn_in,
        p.sample_lag,
    ] {
        w.write_all(&value.to_le_bytes()).map_err(io_err)?;
    }
    w.write_all(&p.seed.to_le_bytes()).map_err(io_err)?;
    for value in [
        p.alpha_global,
        p.alpha_local,
        p.alpha_mix_global,
        p.alpha_mix_local,
        p.beta_global,
        p.beta_local,
        p.gamma,
    ] {
        w.write_all(&value.to_le_bytes()).map_err(io_err)?;
    }
    w.write_all(&(model.vocab_size() as u32).to_le_bytes())
        .map_err(io_err)?;
    for &x in model.phi_global_flat() {
        w.write_all(&x.to_le_bytes()).map_err(io_err)?;
    }
    for &x in model.phi_local_flat() {
        w.write_all(&x.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_model<R: Read>(mut r: R, path: &Path) -> Result<(TopicModel, ModelFileHeader)> {
    let malformed = |reason: &str| Error::MalformedArtifact {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    fn take<const N: usize>(r: &mut impl Read, path: &Path) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        r.read_exact(&mut buf).map_err(|_| Error::MalformedArtifact {
            path: path.to_path_buf(),
            reason: "truncated model file".to_string(),
        })?;
        Ok(buf)
    }

    let magic: [u8; 8] = take(&mut r, path)?;
    if &magic != MAGIC {
        return Err(malformed("bad magic bytes"));
    }
    let schema_version = u32::from_le_bytes(take(&mut r, path)?);
    if schema_version != SCHEMA_VERSION {
        return Err(malformed(&format!("unsupported schema version {schema_version}")));
    }
    let config_hash: [u8; 32] = take(&mut r, path)?;
    let vocab_hash: [u8; 32] = take(&mut r, path)?;

    let k_global = u32::from_le_bytes(take(&mut r, path)?) as usize;
    let k_local = u32::from_le_bytes(take(&mut r, path)?) as usize;
    let window_len = u32::from_le_bytes(take(&mut r, path)?) as usize;
    let iterations = u32::from_le_bytes(take(&mut r, path)?);
    let burn_in = u32::from_le_bytes(take(&mut r, path)?);
    let sample_lag = u32::from_le_bytes(take(&mut r, path)?);
    let seed = u64::from_le_bytes(take(&mut r, path)?);
    let mut reals = [0.0f64; 7];
    for x in &mut reals {
        *x = f64::from_le_bytes(take(&mut r, path)?);
    }
    let vocab_size = u32::from_le_bytes(take(&mut r, path)?) as usize;

    let params = MgldaParams {
        k_global,
        k_local,
        window_len,
        alpha_global: reals[0],
        alpha_local: reals[1],
        alpha_mix_global: reals[2],
        alpha_mix_local: reals[3],
        beta_global: reals[4],
        beta_local: reals[5],
        gamma: reals[6],
        iterations,
        burn_in,
        sample_lag,
        seed,
    };
    let mut read_matrix = |rows: usize| -> Result<Vec<f64>> {
        let mut m = Vec::with_capacity(rows * vocab_size);
        for _ in 0..rows * vocab_size {
            m.push(f64::from_le_bytes(take(&mut r, path)?));
        }
        Ok(m)
    };
    let phi_global = read_matrix(k_global)?;
    let phi_local = read_matrix(k_local)?;
    let model = TopicModel::new(params, vocab_size, phi_global, phi_local)
        .map_err(|_| malformed("inconsistent matrix dimensions"))?;
    Ok((
        model,
        ModelFileHeader {
            schema_version,
            config_hash,
            vocab_hash,
        },
    ))
}

/// Writes the human-readable companion: one row per (topic, rank) for both
/// scopes, `scope topic rank token probability`.
pub fn write_top_words_tsv<W: Write>(
    mut w: W,
    model: &TopicModel,
    vocab: &Vocabulary,
    k: usize,
) -> Result<()> {
    let io_err = |e| Error::io("<top-words writer>", e);
    writeln!(w, "scope\ttopic\trank\ttoken\tprobability").map_err(io_err)?;
    for (scope, label) in [(TopicScope::Local, "local"), (TopicScope::Global, "global")] {
        let k = k.min(model.vocab_size());
        for (topic, words) in top_words(model, scope, k)?.iter().enumerate() {
            for (rank, &(word, prob)) in words.iter().enumerate() {
                let token = vocab.token_of(word).unwrap_or("?");
                writeln!(w, "{label}\t{topic}\t{}\t{token}\t{prob}", rank + 1).map_err(io_err)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_roundtrips_bit_exactly() {
        let params = MgldaParams {
            k_global: 2,
            k_local: 3,
            ..MgldaParams::default()
        };
        let v = 4;
        let phi_g: Vec<f64> = (0..2 * v).map(|i| (i as f64 + 1.0) / 100.0).collect();
        let phi_l: Vec<f64> = (0..3 * v).map(|i| (i as f64 + 0.5) / 50.0).collect();
        let model = TopicModel::new(params, v, phi_g, phi_l).unwrap();
        let config_hash = [7u8; 32];
        let vocab_hash = [9u8; 32];

        let mut buf = Vec::new();
        write_model(&mut buf, &model, &config_hash, &vocab_hash).unwrap();
        let (back, header) = read_model(buf.as_slice(), Path::new("test.bin")).unwrap();
        assert_eq!(back, model);
        assert_eq!(header.config_hash, config_hash);
        assert_eq!(header.vocab_hash, vocab_hash);
        assert_eq!(header.schema_version, 1);
    }

    #[test]
    fn bad_magic_is_malformed() {
        let buf = vec![0u8; 64];
        assert!(read_model(buf.as_slice(), Path::new("x.bin")).is_err());
    }

    #[test]
    fn truncated_file_is_malformed() {
        let params = MgldaParams {
            k_global: 1,
            k_local: 1,
            ..MgldaParams::default()
        };
        let model = TopicModel::new(params, 2, vec![0.5; 2], vec![0.5; 2]).unwrap();
        let mut buf = Vec::new();
        write_model(&mut buf, &model, &[0; 32], &[0; 32]).unwrap();
        buf.truncate(buf.len() - 5);
        assert!(read_model(buf.as_slice(), Path::new("x.bin")).is_err());
    }
}
