//! Binary state files.
//!
//! Layout, all little-endian: magic `MNDA`, `u32` version, `u32` grid size,
//! `f64` time, `f64` viscosity, `u32` history length, then the state field
//! followed by each history field (most recent first), each as `n²`
//! `(re, im)` pairs of `f64` in storage order.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::StepperState;
use crate::spectral::SpectralField;

pub const MAGIC: &[u8; 4] = b"MNDA";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub time: f64,
    pub nu: f64,
    pub omega: SpectralField,
    /// Past explicit tendencies, most recent first.
    pub history: Vec<SpectralField>,
}

impl Checkpoint {
    pub fn size(&self) -> usize {
        self.omega.size()
    }

    pub fn from_state(state: &StepperState) -> Self {
        Checkpoint { time: state.time, nu: state.nu, omega: state.omega.clone(), history: state.history.clone() }
    }

    /// Stepper state with step `dt`. History is only meaningful for the
    /// step it was produced with; pass `keep_history = false` otherwise.
    pub fn into_state(self, dt: f64, keep_history: bool) -> StepperState {
        let mut s = StepperState::new(self.omega, self.time, dt, self.nu);
        if keep_history {
            s.history = self.history;
        }
        s
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        let n = self.size();
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(n as u32).to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        w.write_all(&self.nu.to_le_bytes())?;
        w.write_all(&(self.history.len() as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * n * n);
        for f in std::iter::once(&self.omega).chain(&self.history) {
            buf.clear();
            for c in f.coeffs() {
                buf.extend_from_slice(&c.re.to_le_bytes());
                buf.extend_from_slice(&c.im.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let version = read_u32(&mut r, "version")?;
        if version != VERSION {
            return Err(Error::Version { found: version, expected: VERSION });
        }
        let n = read_u32(&mut r, "grid size")? as usize;
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Format(format!("grid size {n} is not a power of two >= 4")));
        }
        let time = read_f64(&mut r, "time")?;
        let nu = read_f64(&mut r, "viscosity")?;
        let count = read_u32(&mut r, "history length")? as usize;
        if count > 2 {
            return Err(Error::Format(format!("history length {count} exceeds 2")));
        }
        let mut fields = Vec::with_capacity(count + 1);
        let mut buf = vec![0u8; 16 * n * n];
        for i in 0..=count {
            read_exact(&mut r, &mut buf, &format!("field {i}"))?;
            let coeffs = buf
                .chunks_exact(16)
                .map(|c| {
                    let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                    let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                    Complex64::new(re, im)
                })
                .collect();
            fields.push(SpectralField::from_coeffs(n, coeffs)?);
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra).map_err(|e| Error::Format(e.to_string()))? != 0 {
            return Err(Error::Format("trailing bytes after the last field".into()));
        }
        let omega = fields.remove(0);
        Ok(Checkpoint { time, nu, omega, history: fields })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated while reading {what}")),
        _ => Error::Format(e.to_string()),
    })
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}
