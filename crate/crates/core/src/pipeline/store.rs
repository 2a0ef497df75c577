//! Binary trajectory files.
//!
//! Layout (little-endian):
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 8  | magic `MZEULER\0` |
//! | 8  | 2  | format version |
//! | 10 | 1  | status: 0 complete, 1 being written, 2 aborted |
//! | 11 | 1  | truncation: 0 symmetric, 1 full box |
//! | 12 | 4  | reserved, zero |
//! | 16 | 8  | half-width `M` |
//! | 24 | 8  | snapshot count |
//! | 32 | 32 | SHA-256 of the run manifest |
//!
//! Each snapshot is the time as an `f64` followed by the full coefficient cube
//! as interleaved real/imaginary `f64` pairs, component-major (x, y, z), with
//! wavevectors in lexicographic order over wrapped axis indices.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rom::Truncation;
use crate::spectral::{SpectralField, WaveGrid};

pub const MAGIC: [u8; 8] = *b"MZEULER\0";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 64;

/// Largest reality defect tolerated when loading a snapshot.
pub const REALITY_TOL: f64 = 1e-12;
/// Largest `|k · u_k|` tolerated when loading a snapshot.
pub const DIVERGENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreStatus {
    Complete,
    Writing,
    Aborted,
}

impl StoreStatus {
    fn code(self) -> u8 {
        match self {
            StoreStatus::Complete => 0,
            StoreStatus::Writing => 1,
            StoreStatus::Aborted => 2,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(StoreStatus::Complete),
            1 => Some(StoreStatus::Writing),
            2 => Some(StoreStatus::Aborted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreHeader {
    pub status: StoreStatus,
    pub truncation: Truncation,
    pub half_width: usize,
    pub count: u64,
    pub digest: [u8; 32],
}

impl StoreHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..8].copy_from_slice(&MAGIC);
        b[8..10].copy_from_slice(&VERSION.to_le_bytes());
        b[10] = self.status.code();
        b[11] = match self.truncation {
            Truncation::Symmetric => 0,
            Truncation::FullBox => 1,
        };
        b[16..24].copy_from_slice(&(self.half_width as u64).to_le_bytes());
        b[24..32].copy_from_slice(&self.count.to_le_bytes());
        b[32..64].copy_from_slice(&self.digest);
        b
    }

    pub fn decode(bytes: &[u8; HEADER_LEN]) -> std::result::Result<Self, String> {
        if bytes[0..8] != MAGIC {
            return Err("bad magic".into());
        }
        let version = u16::from_le_bytes([bytes[8], bytes[9]]);
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let status = StoreStatus::from_code(bytes[10]).ok_or_else(|| format!("unknown status {}", bytes[10]))?;
        let truncation = match bytes[11] {
            0 => Truncation::Symmetric,
            1 => Truncation::FullBox,
            t => return Err(format!("unknown truncation {t}")),
        };
        let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
        let half_width = word(16) as usize;
        if half_width == 0 {
            return Err("half-width 0".into());
        }
        let mut digest = [0u8; 32];
        digest.copy_from_slice(&bytes[32..64]);
        Ok(Self {
            status,
            truncation,
            half_width,
            count: word(24),
            digest,
        })
    }

    pub fn grid(&self) -> Result<WaveGrid> {
        WaveGrid::new(self.half_width, None)
    }

    /// Bytes per snapshot record.
    pub fn record_len(&self) -> u64 {
        let modes = (2 * self.half_width as u64).pow(3);
        8 + 3 * modes * 16
    }
}

/// Appends snapshots and patches the header when finished.
#[derive(Debug)]
pub struct TrajectoryWriter {
    out: BufWriter<File>,
    header: StoreHeader,
    path: PathBuf,
}

impl TrajectoryWriter {
    pub fn create(path: &Path, half_width: usize, truncation: Truncation, digest: [u8; 32]) -> Result<Self> {
        let header = StoreHeader {
            status: StoreStatus::Writing,
            truncation,
            half_width,
            count: 0,
            digest,
        };
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&header.encode())?;
        Ok(Self {
            out,
            header,
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn count(&self) -> u64 {
        self.header.count
    }

    pub fn append(&mut self, t: f64, field: &SpectralField) -> Result<()> {
        if field.grid().half_width() != self.header.half_width {
            return Err(Error::GridMismatch {
                left: field.grid().half_width(),
                right: self.header.half_width,
            });
        }
        self.out.write_all(&t.to_le_bytes())?;
        let mut buf = Vec::with_capacity(field.coeffs().len() * 16);
        for c in field.coeffs() {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        self.out.write_all(&buf)?;
        self.header.count += 1;
        Ok(())
    }

    fn close(mut self, status: StoreStatus) -> Result<StoreHeader> {
        self.header.status = status;
        self.out.flush()?;
        let file = self.out.get_mut();
        file.seek(SeekFrom::Start(0))?;
        file.write_all(&self.header.encode())?;
        file.sync_all()?;
        Ok(self.header)
    }

    pub fn finish(self) -> Result<StoreHeader> {
        self.close(StoreStatus::Complete)
    }

    /// Mark the file invalid, keeping the snapshots written so far.
    pub fn abort(self) -> Result<StoreHeader> {
        self.close(StoreStatus::Aborted)
    }
}

/// Streams snapshots from a complete trajectory file.
#[derive(Debug)]
pub struct TrajectoryReader {
    input: BufReader<File>,
    header: StoreHeader,
    grid: WaveGrid,
    path: PathBuf,
    next: u64,
    validate: bool,
}

impl TrajectoryReader {
    pub fn open(path: &Path) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidTrajectory {
            path: path.to_path_buf(),
            reason,
        };
        let file = File::open(path)?;
        let len = file.metadata()?.len();
        let mut input = BufReader::with_capacity(1 << 20, file);
        let mut bytes = [0u8; HEADER_LEN];
        input
            .read_exact(&mut bytes)
            .map_err(|_| invalid("shorter than the header".into()))?;
        let header = StoreHeader::decode(&bytes).map_err(invalid)?;
        match header.status {
            StoreStatus::Complete => {}
            StoreStatus::Writing => return Err(invalid("file was never finished".into())),
            StoreStatus::Aborted => return Err(invalid("run aborted; file flagged invalid".into())),
        }
        let expected = HEADER_LEN as u64 + header.count * header.record_len();
        if len != expected {
            return Err(invalid(format!(
                "header promises {} snapshots ({expected} bytes) but file has {len} bytes",
                header.count
            )));
        }
        Ok(Self {
            input,
            grid: header.grid()?,
            header,
            path: path.to_path_buf(),
            next: 0,
            validate: true,
        })
    }

    pub fn header(&self) -> &StoreHeader {
        &self.header
    }

    pub fn grid(&self) -> WaveGrid {
        self.grid
    }

    /// Skip the reality and divergence checks on load.
    pub fn without_validation(mut self) -> Self {
        self.validate = false;
        self
    }

    fn read_one(&mut self) -> Result<(f64, SpectralField)> {
        let mut word = [0u8; 8];
        self.input.read_exact(&mut word)?;
        let t = f64::from_le_bytes(word);
        let n = 3 * self.grid.mode_count();
        let mut raw = vec![0u8; n * 16];
        self.input.read_exact(&mut raw)?;
        let coeffs = raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..16].try_into().expect("8 bytes")),
                )
            })
            .collect();
        let field = SpectralField::from_coeffs(self.grid, coeffs)?;
        if self.validate {
            let reality = field.reality_defect();
            let divergence = field.divergence_defect();
            if !field.is_finite() || reality > REALITY_TOL || divergence > DIVERGENCE_TOL {
                return Err(Error::InvalidTrajectory {
                    path: self.path.clone(),
                    reason: format!(
                        "snapshot at t = {t} fails field invariants (reality {reality:e}, divergence {divergence:e})"
                    ),
                });
            }
        }
        Ok((t, field))
    }
}

impl Iterator for TrajectoryReader {
    type Item = Result<(f64, SpectralField)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.header.count {
            return None;
        }
        self.next += 1;
        let item = self.read_one();
        if item.is_err() {
            self.next = self.header.count;
        }
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.header.count - self.next) as usize;
        (left, Some(left))
    }
}
