//! Binary persistence for snapshot matrices and fitted models.
//!
//! Snapshot layout: the magic `OSCIDMD1`, little-endian u64 `n` and column
//! count, little-endian f64 `a`, `b`, `tau`, `eps`, then the matrix entries
//! column-major as interleaved (re, im) f64 pairs.
//!
//! Model layout: the magic `OSCIMDL1`, a one-byte scheme tag (0 classical,
//! 1 unitary, 2 CN, 3 SI), little-endian u64 `n` and `r`, f64 `tau`, then the
//! factor payloads column-major in declaration order: classical writes modes,
//! eigenvalues, amplitudes, frequencies; the unitary model writes its n×n
//! operator (with `r = n`, `tau = 0`); the reduced Hermitian models write the
//! basis, the real eigenvalues as plain f64, and the complex spectral
//! factors. Round trips are bit-exact.

use crate::dmd::{ClassicalDmdModel, ReducedHermitianModel, Scheme, UnitaryModel};
use crate::solver::{SnapshotMatrix, SpatialGrid};
use crate::{C64, CMat, CVec, Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const SNAPSHOT_MAGIC: &[u8; 8] = b"OSCIDMD1";
const MODEL_MAGIC: &[u8; 8] = b"OSCIMDL1";

/// Any persistable fitted model.
#[derive(Debug, Clone)]
pub enum DmdModel {
    Classical(ClassicalDmdModel),
    Unitary(UnitaryModel),
    Structured(ReducedHermitianModel),
}

impl DmdModel {
    pub fn kind(&self) -> &'static str {
        match self {
            DmdModel::Classical(_) => "classical",
            DmdModel::Unitary(_) => "pidmd",
            DmdModel::Structured(m) => match m.scheme {
                Scheme::Cn => "cn",
                Scheme::Si => "si",
            },
        }
    }
}

struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    fn u64(&mut self, v: u64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    fn f64(&mut self, v: f64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    fn complex_slice(&mut self, vals: &[C64]) -> Result<()> {
        for z in vals {
            self.f64(z.re)?;
            self.f64(z.im)?;
        }
        Ok(())
    }

    fn real_slice(&mut self, vals: &[f64]) -> Result<()> {
        for &v in vals {
            self.f64(v)?;
        }
        Ok(())
    }
}

struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn magic(&mut self, expected: &[u8; 8], what: &str) -> Result<()> {
        let mut buf = [0u8; 8];
        self.inner.read_exact(&mut buf)?;
        if &buf != expected {
            return Err(Error::MalformedFile(format!("bad {what} magic: {buf:?}")));
        }
        Ok(())
    }

    fn u64(&mut self) -> Result<u64> {
        let mut buf = [0u8; 8];
        self.inner.read_exact(&mut buf)?;
        Ok(u64::from_le_bytes(buf))
    }

    fn f64(&mut self) -> Result<f64> {
        let mut buf = [0u8; 8];
        self.inner.read_exact(&mut buf)?;
        Ok(f64::from_le_bytes(buf))
    }

    fn byte(&mut self) -> Result<u8> {
        let mut buf = [0u8; 1];
        self.inner.read_exact(&mut buf)?;
        Ok(buf[0])
    }

    fn complex_vec(&mut self, len: usize) -> Result<Vec<C64>> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let re = self.f64()?;
            let im = self.f64()?;
            out.push(C64::new(re, im));
        }
        Ok(out)
    }

    fn real_vec(&mut self, len: usize) -> Result<Vec<f64>> {
        (0..len).map(|_| self.f64()).collect()
    }
}

fn checked_dims(n: u64, cols: u64, what: &str) -> Result<(usize, usize)> {
    const LIMIT: u64 = 1 << 32;
    if n == 0 || cols == 0 || n > LIMIT || cols > LIMIT || n.saturating_mul(cols) > LIMIT {
        return Err(Error::MalformedFile(format!("implausible {what} dimensions {n}x{cols}")));
    }
    Ok((n as usize, cols as usize))
}

pub fn write_snapshots(path: &Path, snaps: &SnapshotMatrix) -> Result<()> {
    let file = File::create(path)?;
    let mut w = Writer { inner: BufWriter::new(file) };
    w.inner.write_all(SNAPSHOT_MAGIC)?;
    w.u64(snaps.dim() as u64)?;
    w.u64(snaps.num_snapshots() as u64)?;
    w.f64(snaps.grid.a())?;
    w.f64(snaps.grid.b())?;
    w.f64(snaps.tau)?;
    w.f64(snaps.eps)?;
    w.complex_slice(snaps.data.as_slice())?;
    w.inner.flush()?;
    Ok(())
}

pub fn read_snapshots(path: &Path) -> Result<SnapshotMatrix> {
    let file = File::open(path)?;
    let mut r = Reader { inner: BufReader::new(file) };
    r.magic(SNAPSHOT_MAGIC, "snapshot")?;
    let (n, cols) = checked_dims(r.u64()?, r.u64()?, "snapshot")?;
    let a = r.f64()?;
    let b = r.f64()?;
    let tau = r.f64()?;
    let eps = r.f64()?;
    let entries = r.complex_vec(n * cols)?;
    let data = CMat::from_vec(n, cols, entries);
    let grid = SpatialGrid::new(a, b, n)
        .map_err(|e| Error::MalformedFile(format!("bad snapshot grid: {e}")))?;
    SnapshotMatrix::new(data, tau, grid, eps)
        .map_err(|e| Error::MalformedFile(format!("bad snapshot payload: {e}")))
}

fn scheme_tag(model: &DmdModel) -> u8 {
    match model {
        DmdModel::Classical(_) => 0,
        DmdModel::Unitary(_) => 1,
        DmdModel::Structured(m) => match m.scheme {
            Scheme::Cn => 2,
            Scheme::Si => 3,
        },
    }
}

pub fn write_model(path: &Path, model: &DmdModel) -> Result<()> {
    let file = File::create(path)?;
    let mut w = Writer { inner: BufWriter::new(file) };
    w.inner.write_all(MODEL_MAGIC)?;
    w.inner.write_all(&[scheme_tag(model)])?;
    match model {
        DmdModel::Classical(m) => {
            w.u64(m.dim() as u64)?;
            w.u64(m.rank() as u64)?;
            w.f64(m.tau)?;
            w.complex_slice(m.modes.as_slice())?;
            w.complex_slice(&m.lambda)?;
            w.complex_slice(m.amplitudes.as_slice())?;
            w.complex_slice(&m.omega)?;
        }
        DmdModel::Unitary(m) => {
            w.u64(m.dim() as u64)?;
            w.u64(m.dim() as u64)?;
            w.f64(0.0)?;
            w.complex_slice(m.evolution.as_slice())?;
        }
        DmdModel::Structured(m) => {
            w.u64(m.dim() as u64)?;
            w.u64(m.rank() as u64)?;
            w.f64(m.tau)?;
            w.complex_slice(m.basis.as_slice())?;
            w.real_slice(&m.lambda)?;
            w.complex_slice(&m.factors)?;
        }
    }
    w.inner.flush()?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<DmdModel> {
    let file = File::open(path)?;
    let mut r = Reader { inner: BufReader::new(file) };
    r.magic(MODEL_MAGIC, "model")?;
    let tag = r.byte()?;
    let n = r.u64()?;
    let rank = r.u64()?;
    let tau = r.f64()?;
    match tag {
        0 => {
            let (n, rank) = checked_dims(n, rank, "model")?;
            let modes = CMat::from_vec(n, rank, r.complex_vec(n * rank)?);
            let lambda = r.complex_vec(rank)?;
            let amplitudes = CVec::from_vec(r.complex_vec(rank)?);
            let omega = r.complex_vec(rank)?;
            Ok(DmdModel::Classical(ClassicalDmdModel { modes, lambda, amplitudes, tau, omega }))
        }
        1 => {
            let (n, _) = checked_dims(n, rank.max(1), "model")?;
            let evolution = CMat::from_vec(n, n, r.complex_vec(n * n)?);
            Ok(DmdModel::Unitary(UnitaryModel { evolution }))
        }
        2 | 3 => {
            let scheme = if tag == 2 { Scheme::Cn } else { Scheme::Si };
            if n == 0 || n > (1 << 32) || rank > n {
                return Err(Error::MalformedFile(format!("implausible model dimensions {n}x{rank}")));
            }
            let (n, rank) = (n as usize, rank as usize);
            let basis = CMat::from_vec(n, rank, r.complex_vec(n * rank)?);
            let lambda = r.real_vec(rank)?;
            let factors = r.complex_vec(rank)?;
            Ok(DmdModel::Structured(ReducedHermitianModel { basis, lambda, factors, tau, scheme }))
        }
        other => Err(Error::MalformedFile(format!("unknown scheme tag {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{toy_generate, ToySpec};
    use crate::dmd::{fit_classical, fit_pidmd, fit_structured};

    fn toy() -> SnapshotMatrix {
        let spec = ToySpec {
            n: 10,
            r: 3,
            thetas: vec![-1.0, 0.2, 1.7],
            amplitudes: vec![C64::new(1.0, 0.1), C64::new(0.4, -0.6), C64::new(0.0, 0.9)],
            snapshots: 9,
            seed: 12,
        };
        toy_generate(&spec).unwrap().0
    }

    fn file_bytes(path: &Path) -> Vec<u8> {
        std::fs::read(path).unwrap()
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = std::env::temp_dir();
        let path = dir.join("oscidmd_snap_roundtrip.bin");
        let snaps = toy();
        write_snapshots(&path, &snaps).unwrap();
        let read = read_snapshots(&path).unwrap();
        assert_eq!(read.data, snaps.data);
        assert_eq!(read.tau, snaps.tau);
        assert_eq!(read.grid, snaps.grid);
        assert_eq!(read.eps, snaps.eps);
        // Re-writing yields identical bytes.
        let path2 = dir.join("oscidmd_snap_roundtrip2.bin");
        write_snapshots(&path2, &read).unwrap();
        assert_eq!(file_bytes(&path), file_bytes(&path2));
        std::fs::remove_file(&path).ok();
        std::fs::remove_file(&path2).ok();
    }

    #[test]
    fn model_round_trips_are_bit_exact() {
        let dir = std::env::temp_dir();
        let snaps = toy();
        let models = vec![
            DmdModel::Classical(fit_classical(&snaps, 1e-6).unwrap()),
            DmdModel::Unitary(fit_pidmd(&snaps).unwrap()),
            DmdModel::Structured(fit_structured(&snaps, Scheme::Cn, 1e-6).unwrap()),
            DmdModel::Structured(fit_structured(&snaps, Scheme::Si, 1e-6).unwrap()),
        ];
        for (i, model) in models.iter().enumerate() {
            let path = dir.join(format!("oscidmd_model_roundtrip_{i}.bin"));
            write_model(&path, model).unwrap();
            let read = read_model(&path).unwrap();
            let path2 = dir.join(format!("oscidmd_model_roundtrip_{i}b.bin"));
            write_model(&path2, &read).unwrap();
            assert_eq!(file_bytes(&path), file_bytes(&path2), "model {i}");
            assert_eq!(model.kind(), read.kind());
            std::fs::remove_file(&path).ok();
            std::fs::remove_file(&path2).ok();
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = std::env::temp_dir();
        let path = dir.join("oscidmd_bad_magic.bin");
        std::fs::write(&path, b"NOTMAGIC0000000000000000").unwrap();
        assert!(matches!(read_snapshots(&path), Err(Error::MalformedFile(_))));
        assert!(matches!(read_model(&path), Err(Error::MalformedFile(_))));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = std::env::temp_dir();
        let path = dir.join("oscidmd_truncated.bin");
        let snaps = toy();
        write_snapshots(&path, &snaps).unwrap();
        let bytes = file_bytes(&path);
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(read_snapshots(&path).is_err());
        std::fs::remove_file(&path).ok();
    }
}
