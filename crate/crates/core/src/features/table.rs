//! Feature datasets: one labelled bundle per footstep, persisted as a
//! binary table (layout header + row-major values) with CSV export.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::EmotionLabel;

use super::bundle::{BundleLayout, FeatureBundle};

const MAGIC: &[u8; 5] = b"VIBF1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub person_id: String,
    pub trajectory_id: String,
    pub label: EmotionLabel,
    /// Length of the source trajectory recording.
    pub trajectory_duration_s: f64,
    #[serde(skip)]
    pub bundle: FeatureBundle,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub layout: BundleLayout,
    pub fingerprint: Option<String>,
    pub rows: Vec<FeatureRow>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    layout: BundleLayout,
    fingerprint: Option<String>,
    rows: u64,
}

impl FeatureTable {
    pub fn new(layout: BundleLayout) -> Self {
        Self {
            layout,
            fingerprint: None,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: FeatureRow) -> Result<()> {
        row.bundle.check(&self.layout)?;
        self.rows.push(row);
        Ok(())
    }

    pub fn persons(&self) -> Vec<String> {
        let mut p: Vec<String> = self.rows.iter().map(|r| r.person_id.clone()).collect();
        p.sort();
        p.dedup();
        p
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&Header {
            layout: self.layout.clone(),
            fingerprint: self.fingerprint.clone(),
            rows: self.rows.len() as u64,
        })?;
        let flat = self.layout.flat_len();
        let mut out = Vec::with_capacity(16 + header.len() + self.rows.len() * (flat * 8 + 128));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for row in &self.rows {
            row.bundle.check(&self.layout)?;
            let meta = serde_json::to_vec(row)?;
            out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
            out.extend_from_slice(&meta);
            for v in row.bundle.flatten() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cur = std::io::Cursor::new(bytes);
        let mut magic = [0u8; 5];
        read_exact(&mut cur, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::BadFormat("not a feature table".into()));
        }
        let header: Header = serde_json::from_slice(&read_block(&mut cur, "header")?)?;
        let flat = header.layout.flat_len();
        let mut rows = Vec::with_capacity(header.rows as usize);
        let mut buf = vec![0u8; flat * 8];
        for _ in 0..header.rows {
            let mut row: FeatureRow = serde_json::from_slice(&read_block(&mut cur, "row metadata")?)?;
            read_exact(&mut cur, &mut buf, "row values")?;
            let values: Vec<f64> = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            row.bundle = FeatureBundle::unflatten(&values, &header.layout)?;
            rows.push(row);
        }
        if (cur.position() as usize) != bytes.len() {
            return Err(Error::BadFormat("trailing bytes after feature table".into()));
        }
        Ok(Self {
            layout: header.layout,
            fingerprint: header.fingerprint,
            rows,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&self.encode()?)?;
        f.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        Self::decode(&std::fs::read(path)?)
    }

    /// One line per row: identifiers, label, then every flattened value.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("person_id,trajectory_id,valence,arousal");
        for n in self.layout.flat_names() {
            s.push(',');
            s.push_str(&n);
        }
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}",
                r.person_id,
                r.trajectory_id,
                r.label.valence(),
                r.label.arousal()
            ));
            for v in r.bundle.flatten() {
                s.push(',');
                s.push_str(&v.to_string());
            }
            s.push('\n');
        }
        s
    }
}

fn read_exact(cur: &mut std::io::Cursor<&[u8]>, buf: &mut [u8], what: &str) -> Result<()> {
    let offset = cur.position();
    cur.read_exact(buf).map_err(|_| Error::Truncated {
        offset,
        message: format!("while reading {what}"),
    })
}

fn read_block(cur: &mut std::io::Cursor<&[u8]>, what: &str) -> Result<Vec<u8>> {
    let mut len = [0u8; 4];
    read_exact(cur, &mut len, what)?;
    let mut block = vec![0u8; u32::from_le_bytes(len) as usize];
    read_exact(cur, &mut block, what)?;
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::Matrix;
    use crate::features::bundle::{FeatureFamily, ImageSlot, ScalarSlot, SequenceSlot};

    fn tiny() -> FeatureTable {
        let layout = BundleLayout {
            scalars: vec![ScalarSlot { name: "a".into(), family: FeatureFamily::Gait }],
            sequences: vec![SequenceSlot { name: "s".into(), family: FeatureFamily::Vibration, len: 2 }],
            images: vec![ImageSlot { name: "i".into(), family: FeatureFamily::Vibration, rows: 1, cols: 2 }],
        };
        let mut t = FeatureTable::new(layout);
        t.fingerprint = Some("abc".into());
        for k in 0..3 {
            t.push(FeatureRow {
                person_id: format!("p{k}"),
                trajectory_id: format!("p{k}-t0"),
                label: EmotionLabel::new(3.0 + k as f64, 7.0).unwrap(),
                trajectory_duration_s: 6.5,
                bundle: FeatureBundle {
                    scalars: vec![k as f64 * 0.1],
                    sequences: vec![vec![1.0 / 3.0, -2.0]],
                    images: vec![Matrix { rows: 1, cols: 2, data: vec![f64::MIN_POSITIVE, 1e300] }],
                },
            })
            .unwrap();
        }
        t
    }

    #[test]
    fn binary_round_trip() {
        let t = tiny();
        let back = FeatureTable::decode(&t.encode().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn truncated_table() {
        let bytes = tiny().encode().unwrap();
        let r = FeatureTable::decode(&bytes[..bytes.len() - 3]);
        assert!(matches!(r, Err(Error::Truncated { .. })));
    }

    #[test]
    fn csv_header_and_rows() {
        let csv = tiny().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "person_id,trajectory_id,valence,arousal,a,s_0,s_1,i_0_0,i_0_1");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn push_rejects_wrong_layout() {
        let mut t = tiny();
        let mut row = t.rows[0].clone();
        row.bundle.sequences[0].push(0.0);
        assert!(matches!(t.push(row), Err(Error::Shape { .. })));
    }
}
