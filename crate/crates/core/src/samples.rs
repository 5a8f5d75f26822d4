//! Values stored on the extended points of a [`GridDomain`], plus the binary
//! format for Hermitian-matrix samples.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! magic   b"HLGS"        4 bytes
//! version u32            = 1
//! n       u32            complex dimension
//! r       u32            fiber rank
//! samples u32            interior samples per real axis
//! margin  u32            stencil margin per side
//! center  2n × f64       (re, im) per complex coordinate
//! half    2n × f64       half width per real axis
//! data    E^{2n} × r × r × (f64 re, f64 im)
//! ```
//!
//! `E = samples + 2·margin`; points are row-major over real axes
//! `(Re z1, Im z1, Re z2, ...)` with the last axis fastest, and each matrix is
//! row-major.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::linalg::{CMatrix, HermitianMatrix};

/// Values that can be blended with real weights (quadrature, interpolation).
pub trait SampleValue: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, w: f64, other: &Self);
    fn is_finite_value(&self) -> bool;
}

impl SampleValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        *self += w * other;
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl SampleValue for HermitianMatrix {
    fn zero_like(&self) -> Self {
        HermitianMatrix::zeros(self.dim())
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        self.axpy_real(w, other);
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples<T> {
    domain: GridDomain,
    values: Vec<T>,
}

impl<T: SampleValue> GridSamples<T> {
    pub fn new(domain: GridDomain, values: Vec<T>) -> Result<Self> {
        if values.len() != domain.extended_len() {
            return Err(Error::DomainMismatch(format!(
                "{} samples for a grid with {} extended points",
                values.len(),
                domain.extended_len()
            )));
        }
        Ok(Self { domain, values })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn at(&self, flat: usize) -> &T {
        &self.values[flat]
    }

    /// Value at a lattice point; `None` off the lattice or outside the grid.
    pub fn lookup(&self, z: &[C64]) -> Option<&T> {
        self.domain.locate(z).map(|i| &self.values[i])
    }

    /// Extended indices whose value is non-finite.
    pub fn non_finite_indices(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| !self.values[i].is_finite_value()).collect()
    }
}

/// Number of exceptional extended indices whose whole ±1 neighbourhood cube
/// is exceptional as well; zero means the set has empty interior on the
/// lattice.
pub fn exception_interior_count(domain: &GridDomain, exceptions: &[usize]) -> usize {
    use std::collections::HashSet;
    let set: HashSet<usize> = exceptions.iter().copied().collect();
    let d = domain.real_dim();
    let e = domain.extended_per_axis();
    let mut count = 0;
    for &flat in exceptions {
        let center = domain.multi_index(flat);
        if center.iter().any(|&i| i == 0 || i + 1 >= e) {
            continue;
        }
        let mut all = true;
        let total = 3usize.pow(d as u32);
        for code in 0..total {
            let mut c = code;
            let mut multi = center.clone();
            for m in multi.iter_mut() {
                *m = *m + (c % 3) - 1;
                c /= 3;
            }
            if !set.contains(&domain.flat_index(&multi)) {
                all = false;
                break;
            }
        }
        if all {
            count += 1;
        }
    }
    count
}

const MAGIC: &[u8; 4] = b"HLGS";
const VERSION: u32 = 1;

pub fn encode_metric_samples(samples: &GridSamples<HermitianMatrix>) -> Result<Vec<u8>> {
    let domain = samples.domain();
    let r = samples.values().first().map_or(0, HermitianMatrix::dim);
    if samples.values().iter().any(|m| m.dim() != r) {
        return Err(Error::Format("samples of mixed rank".into()));
    }
    let mut out = Vec::with_capacity(24 + 32 * domain.n() + samples.values().len() * r * r * 16);
    out.extend_from_slice(MAGIC);
    for v in [VERSION, domain.n() as u32, r as u32, domain.samples() as u32, domain.margin() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for c in domain.center() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    for w in domain.half_width() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for m in samples.values() {
        for z in m.as_matrix().as_slice() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_metric_samples(bytes: &[u8]) -> Result<GridSamples<HermitianMatrix>> {
    struct Reader<'a> {
        bytes: &'a [u8],
        pos: usize,
    }
    impl Reader<'_> {
        fn take(&mut self, k: usize) -> Result<&[u8]> {
            let end = self.pos + k;
            if end > self.bytes.len() {
                return Err(Error::Format(format!("truncated sample file at byte {}", self.pos)));
            }
            let s = &self.bytes[self.pos..end];
            self.pos = end;
            Ok(s)
        }
        fn u32(&mut self) -> Result<u32> {
            Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
        }
        fn f64(&mut self) -> Result<f64> {
            Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
        }
    }

    let mut rd = Reader { bytes, pos: 0 };
    if rd.take(4)? != MAGIC {
        return Err(Error::Format("bad magic, not a metric sample file".into()));
    }
    let version = rd.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported sample file version {version}")));
    }
    let n = rd.u32()? as usize;
    let r = rd.u32()? as usize;
    let samples = rd.u32()? as usize;
    let margin = rd.u32()? as usize;
    let mut center = Vec::with_capacity(n);
    for _ in 0..n {
        center.push(C64::new(rd.f64()?, rd.f64()?));
    }
    let mut half = Vec::with_capacity(2 * n);
    for _ in 0..2 * n {
        half.push(rd.f64()?);
    }
    let domain = GridDomain::new(n, center, half, samples, margin)?;
    let count = domain.extended_len();
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let mut m = CMatrix::zeros(r, r);
        for z in m.as_mut_slice() {
            *z = C64::new(rd.f64()?, rd.f64()?);
        }
        values.push(HermitianMatrix::new(m)?);
    }
    if rd.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes in sample file", bytes.len() - rd.pos)));
    }
    GridSamples::new(domain, values)
}

/// Writes `path` (binary samples) and `path` with a `.json` extension
/// (provenance sidecar).
pub fn write_metric_samples(
    path: &Path,
    samples: &GridSamples<HermitianMatrix>,
    provenance: &serde_json::Value,
) -> Result<()> {
    let bytes = encode_metric_samples(samples)?;
    fs::File::create(path)?.write_all(&bytes)?;
    let sidecar = serde_json::json!({
        "format": "hermlab-grid-samples",
        "version": VERSION,
        "grid": samples.domain().meta(),
        "rank": samples.values().first().map_or(0, HermitianMatrix::dim),
        "provenance": provenance,
    });
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path.with_extension("json"), text + "\n")?;
    Ok(())
}

pub fn read_metric_samples(path: &Path) -> Result<GridSamples<HermitianMatrix>> {
    decode_metric_samples(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_grid() -> GridSamples<HermitianMatrix> {
        let g = GridDomain::new(1, vec![C64::new(0.5, -0.25)], vec![1.0, 2.0], 8, 2).unwrap();
        let values = (0..g.extended_len())
            .map(|i| {
                let z = g.point(i)[0];
                let m = CMatrix::from_fn(2, 2, |a, b| if a == b { C64::new(1.0 + z.norm_sqr(), 0.0) } else { z * 0.1 });
                HermitianMatrix::new(m).unwrap()
            })
            .collect();
        GridSamples::new(g, values).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let s = sample_grid();
        let bytes = encode_metric_samples(&s).unwrap();
        assert_eq!(&bytes[..4], b"HLGS");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        let back = decode_metric_samples(&bytes).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn truncated_files_are_rejected() {
        let bytes = encode_metric_samples(&sample_grid()).unwrap();
        assert!(matches!(decode_metric_samples(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
        assert!(matches!(decode_metric_samples(b"nope"), Err(Error::Format(_))));
    }

    #[test]
    fn sidecar_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.bin");
        write_metric_samples(&path, &sample_grid(), &serde_json::json!({"source": "test"})).unwrap();
        let side: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("h.json")).unwrap()).unwrap();
        assert_eq!(side["rank"], 2);
        assert_eq!(side["provenance"]["source"], "test");
        assert_eq!(read_metric_samples(&path).unwrap(), sample_grid());
    }

    #[test]
    fn thin_exception_sets() {
        let g = GridDomain::cube(1, 1.0, 8, 2).unwrap();
        let single = vec![g.flat_index(&[5, 5])];
        assert_eq!(exception_interior_count(&g, &single), 0);
        let mut block = Vec::new();
        for a in 4..7 {
            for b in 4..7 {
                block.push(g.flat_index(&[a, b]));
            }
        }
        assert_eq!(exception_interior_count(&g, &block), 1);
    }
}
