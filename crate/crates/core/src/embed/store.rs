//! Binary embedding store.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! header:  u32 tag_len | tag_len bytes model_tag (UTF-8) | u32 dim | u64 count
//! record:  16-byte sentence key | u32 n | n * dim f32
//! ```
//!
//! Records are written in key order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{l2_norm, EmbedError, EmbeddingBundle, SentenceKey, UNIT_NORM_TOLERANCE};
use crate::model::Token;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    model_tag: String,
    dim: usize,
    bundles: HashMap<SentenceKey, EmbeddingBundle>,
}

impl EmbeddingStore {
    pub fn new(model_tag: impl Into<String>, dim: usize) -> Self {
        EmbeddingStore {
            model_tag: model_tag.into(),
            dim,
            bundles: HashMap::new(),
        }
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    /// Adds a bundle after checking tag, dimension and unit norms. A bundle
    /// with an existing key replaces the old one.
    pub fn insert(&mut self, bundle: EmbeddingBundle) -> Result<(), EmbedError> {
        if bundle.model_tag != self.model_tag {
            return Err(EmbedError::MixedModelTags {
                expected: self.model_tag.clone(),
                found: bundle.model_tag,
            });
        }
        for (index, v) in bundle.vectors.iter().enumerate() {
            if v.len() != self.dim {
                return Err(EmbedError::DimensionMismatch {
                    expected: self.dim,
                    found: v.len(),
                });
            }
            let norm = l2_norm(v);
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(EmbedError::NotUnitNorm {
                    key: bundle.sentence_key,
                    index,
                    norm,
                });
            }
        }
        self.bundles.insert(bundle.sentence_key, bundle);
        Ok(())
    }

    pub fn get(&self, key: &SentenceKey) -> Option<&EmbeddingBundle> {
        self.bundles.get(key)
    }

    pub fn lookup(&self, tokens: &[Token]) -> Option<&EmbeddingBundle> {
        self.get(&SentenceKey::of_tokens(tokens))
    }

    pub fn keys(&self) -> impl Iterator<Item = &SentenceKey> {
        self.bundles.keys()
    }

    /// Merges another store with the same tag and dimension.
    pub fn merge(&mut self, other: EmbeddingStore) -> Result<(), EmbedError> {
        if other.model_tag != self.model_tag {
            return Err(EmbedError::MixedModelTags {
                expected: self.model_tag.clone(),
                found: other.model_tag,
            });
        }
        if other.dim != self.dim {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        self.bundles.extend(other.bundles);
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<(), EmbedError> {
        let mut out = BufWriter::new(out);
        let tag = self.model_tag.as_bytes();
        out.write_all(&(tag.len() as u32).to_le_bytes())?;
        out.write_all(tag)?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.bundles.len() as u64).to_le_bytes())?;
        let mut keys: Vec<&SentenceKey> = self.bundles.keys().collect();
        keys.sort();
        for key in keys {
            let bundle = &self.bundles[key];
            out.write_all(&key.0)?;
            out.write_all(&(bundle.vectors.len() as u32).to_le_bytes())?;
            for v in &bundle.vectors {
                for x in v {
                    out.write_all(&x.to_le_bytes())?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbedError> {
        self.write_to(File::create(path)?)
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self, EmbedError> {
        let mut reader = CountingReader {
            inner: BufReader::new(input),
            offset: 0,
        };
        let tag_len = reader.u32("model tag length")? as usize;
        let tag_bytes = reader.bytes(tag_len, "model tag")?;
        let model_tag = String::from_utf8(tag_bytes)
            .map_err(|_| EmbedError::Invalid("model tag is not UTF-8".into()))?;
        let dim = reader.u32("dimension")? as usize;
        let count = reader.u64("record count")?;
        let mut store = EmbeddingStore::new(model_tag.clone(), dim);
        for r in 0..count {
            let key_bytes = reader.bytes(16, &format!("key of record {r}"))?;
            let mut key = [0u8; 16];
            key.copy_from_slice(&key_bytes);
            let n = reader.u32(&format!("token count of record {r}"))? as usize;
            let mut vectors = Vec::with_capacity(n);
            for t in 0..n {
                let raw = reader.bytes(dim * 4, &format!("vector {t} of record {r}"))?;
                vectors.push(
                    raw.chunks_exact(4)
                        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                        .collect(),
                );
            }
            store.insert(EmbeddingBundle {
                sentence_key: SentenceKey(key),
                vectors,
                model_tag: model_tag.clone(),
            })?;
        }
        Ok(store)
    }
}

struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> CountingReader<R> {
    fn bytes(&mut self, len: usize, what: &str) -> Result<Vec<u8>, EmbedError> {
        let mut buf = vec![0u8; len];
        let mut filled = 0;
        while filled < len {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(EmbedError::Truncated {
                        offset: self.offset + filled as u64,
                        what: what.to_string(),
                    })
                }
                Ok(k) => filled += k,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += len as u64;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32, EmbedError> {
        let b = self.bytes(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self, what: &str) -> Result<u64, EmbedError> {
        let b = self.bytes(8, what)?;
        let mut arr = [0u8; 8];
        arr.copy_from_slice(&b);
        Ok(u64::from_le_bytes(arr))
    }
}

/// Loads a store file, or every `*.emb` file of a directory (sorted by name)
/// merged into one store. All files must share one model tag.
pub fn load_store(path: &Path) -> Result<EmbeddingStore, EmbedError> {
    if !path.is_dir() {
        return EmbeddingStore::read_from(File::open(path)?);
    }
    let mut files: Vec<_> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "emb"))
        .collect();
    files.sort();
    let mut iter = files.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| EmbedError::Invalid(format!("no .emb files in {}", path.display())))?;
    let mut store = EmbeddingStore::read_from(File::open(first)?)?;
    for file in iter {
        store.merge(EmbeddingStore::read_from(File::open(file)?)?)?;
    }
    Ok(store)
}
