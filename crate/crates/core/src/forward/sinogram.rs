use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::QuadMesh;
use crate::raytrace::Ray;

pub const SINOGRAM_HEADER: &str = "theta_rad,offset_m,length_m,strain,sigma";

/// One line-average strain measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinogramRecord {
    /// rad
    pub theta: f64,
    /// Signed perpendicular offset from the mesh reference center (m).
    pub offset: f64,
    /// In-sample path length (m).
    pub length: f64,
    pub value: f64,
    pub sigma: f64,
}

impl SinogramRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        let all = [self.theta, self.offset, self.length, self.value, self.sigma];
        if all.iter().any(|v| !v.is_finite()) {
            return Err("non-finite value".into());
        }
        if !(self.length > 0.0) {
            return Err(format!("path length {} must be positive", self.length));
        }
        if self.sigma < 0.0 {
            return Err(format!("sigma {} must be non-negative", self.sigma));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Sinogram {
    records: Vec<SinogramRecord>,
}

impl Sinogram {
    pub fn new(records: Vec<SinogramRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            r.validate().map_err(|m| Error::InvalidParameter(format!("record {i}: {m}")))?;
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[SinogramRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }

    /// The measurement rays, positioned about `mesh`'s reference center.
    pub fn rays(&self, mesh: &QuadMesh) -> Vec<Ray> {
        let (center, radius) = (mesh.center(), mesh.bounding_radius());
        self.records.iter().map(|r| Ray::through(center, radius, r.theta, r.offset)).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "{SINOGRAM_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.theta, r.offset, r.length, r.value, r.sigma
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the CSV format; `source` names the input in error messages.
    pub fn read_csv<R: Read>(reader: R, source: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        let mut records = Vec::new();
        let mut saw_header = false;
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if !saw_header {
                if line != SINOGRAM_HEADER {
                    return Err(parse_err(i + 1, format!("expected header `{SINOGRAM_HEADER}`")));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(parse_err(i + 1, format!("expected 5 fields, found {}", fields.len())));
            }
            let mut v = [0.0; 5];
            for (slot, f) in v.iter_mut().zip(&fields) {
                *slot = f.trim().parse().map_err(|e| parse_err(i + 1, format!("bad number `{f}`: {e}")))?;
            }
            let record = SinogramRecord {
                theta: v[0],
                offset: v[1],
                length: v[2],
                value: v[3],
                sigma: v[4],
            };
            record.validate().map_err(|m| parse_err(i + 1, m))?;
            records.push(record);
        }
        if !saw_header {
            return Err(parse_err(0, "empty sinogram file".into()));
        }
        Ok(Self { records })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_csv(File::open(path)?, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Sinogram {
        Sinogram::new(vec![
            SinogramRecord {
                theta: 0.1,
                offset: -1.0 / 3.0,
                length: 0.02,
                value: 1.234_567_890_123_456_7e-4,
                sigma: 0.0,
            },
            SinogramRecord {
                theta: std::f64::consts::PI,
                offset: 2e-3,
                length: 1e-3,
                value: -5e-300,
                sigma: 1e-4,
            },
        ])
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact_and_byte_stable() {
        let s = sample();
        let mut a = Vec::new();
        s.write_csv(&mut a).unwrap();
        let back = Sinogram::read_csv(a.as_slice(), "mem").unwrap();
        assert_eq!(back, s);
        let mut b = Vec::new();
        back.write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("theta_rad,offset_m,length_m,strain,sigma\n"));
    }

    #[test]
    fn bad_inputs_are_rejected_with_line_numbers() {
        let bad_header = "theta,offset\n";
        assert!(matches!(Sinogram::read_csv(bad_header.as_bytes(), "x"), Err(Error::Parse { line: 1, .. })));
        let bad_len = format!("{SINOGRAM_HEADER}\n0,0,0,0,0\n");
        assert!(matches!(Sinogram::read_csv(bad_len.as_bytes(), "x"), Err(Error::Parse { line: 2, .. })));
        let bad_sigma = format!("{SINOGRAM_HEADER}\n0,0,1,0,-1\n");
        assert!(Sinogram::read_csv(bad_sigma.as_bytes(), "x").is_err());
        let bad_num = format!("{SINOGRAM_HEADER}\n0,zero,1,0,0\n");
        assert!(Sinogram::read_csv(bad_num.as_bytes(), "x").is_err());
    }
}
