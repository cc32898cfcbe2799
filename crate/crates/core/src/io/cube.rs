use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind as IoErrorKind, Read, Write};
use std::path::{Path, PathBuf};

use crate::io::header::{ByteOrder, DataType, EnviHeader, Interleave};
use crate::{Error, Result, Scalar};

/// Value written for masked pixels when the source header has no
/// `data ignore value`.
pub const DEFAULT_NODATA: f64 = -9999.0;

/// Radiance cube held pixel-major: `values[(line * samples + sample) * bands + band]`.
///
/// A pixel is invalid when every band equals the header's nodata value or any
/// band is non-finite. Invalid pixels are carried along but excluded from all
/// statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceCube<T> {
    header: EnviHeader,
    values: Vec<T>,
    valid: Vec<bool>,
}

impl<T: Scalar> RadianceCube<T> {
    /// Build a cube and derive its validity mask from the nodata sentinel.
    pub fn from_values(header: EnviHeader, values: Vec<T>) -> Result<Self> {
        header.validate()?;
        if values.len() != header.element_count() {
            return Err(Error::ShapeError(format!(
                "{} values for a {}x{}x{} cube",
                values.len(),
                header.lines,
                header.samples,
                header.bands
            )));
        }
        let bands = header.bands;
        let nodata = header.nodata;
        let valid = values
            .chunks_exact(bands)
            .map(|px| {
                let all_nodata = nodata.is_some_and(|nd| px.iter().all(|v| v.as_f64() == nd));
                !all_nodata && px.iter().all(|v| v.is_finite())
            })
            .collect();
        Ok(Self { header, values, valid })
    }

    /// Build a cube with an explicit mask. Invalid pixels may hold anything.
    pub fn with_mask(header: EnviHeader, values: Vec<T>, valid: Vec<bool>) -> Result<Self> {
        let mut cube = Self::from_values(header, values)?;
        if valid.len() != cube.valid.len() {
            return Err(Error::ShapeError("mask size does not match cube".into()));
        }
        for (v, m) in cube.valid.iter_mut().zip(valid) {
            *v = *v && m;
        }
        Ok(cube)
    }

    pub fn header(&self) -> &EnviHeader {
        &self.header
    }

    pub fn lines(&self) -> usize {
        self.header.lines
    }

    pub fn samples(&self) -> usize {
        self.header.samples
    }

    pub fn bands(&self) -> usize {
        self.header.bands
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.header.wavelengths
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn nodata_value(&self) -> f64 {
        self.header.nodata.unwrap_or(DEFAULT_NODATA)
    }

    #[inline]
    pub fn pixel(&self, line: usize, sample: usize) -> &[T] {
        self.pixel_at(line * self.header.samples + sample)
    }

    #[inline]
    pub fn pixel_at(&self, flat: usize) -> &[T] {
        let b = self.header.bands;
        &self.values[flat * b..(flat + 1) * b]
    }

    #[inline]
    pub fn is_valid(&self, line: usize, sample: usize) -> bool {
        self.valid[line * self.header.samples + sample]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Replace the radiance values, keeping header and mask.
    pub(crate) fn with_values(&self, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            header: self.header.clone(),
            values,
            valid: self.valid.clone(),
        }
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

fn decode_into<T: Scalar>(bytes: &[u8], dt: DataType, bo: ByteOrder, mut put: impl FnMut(usize, T)) {
    match (dt, bo) {
        (DataType::Float32, ByteOrder::Little) => {
            for (i, c) in bytes.chunks_exact(4).enumerate() {
                put(i, T::c(f32::from_le_bytes(c.try_into().unwrap()) as f64));
            }
        }
        (DataType::Float32, ByteOrder::Big) => {
            for (i, c) in bytes.chunks_exact(4).enumerate() {
                put(i, T::c(f32::from_be_bytes(c.try_into().unwrap()) as f64));
            }
        }
        (DataType::Float64, ByteOrder::Little) => {
            for (i, c) in bytes.chunks_exact(8).enumerate() {
                put(i, T::c(f64::from_le_bytes(c.try_into().unwrap())));
            }
        }
        (DataType::Float64, ByteOrder::Big) => {
            for (i, c) in bytes.chunks_exact(8).enumerate() {
                put(i, T::c(f64::from_be_bytes(c.try_into().unwrap())));
            }
        }
    }
}

fn encode_into<T: Scalar>(values: impl Iterator<Item = T>, dt: DataType, bo: ByteOrder, out: &mut Vec<u8>) {
    for v in values {
        let v = v.as_f64();
        match (dt, bo) {
            (DataType::Float32, ByteOrder::Little) => out.extend_from_slice(&(v as f32).to_le_bytes()),
            (DataType::Float32, ByteOrder::Big) => out.extend_from_slice(&(v as f32).to_be_bytes()),
            (DataType::Float64, ByteOrder::Little) => out.extend_from_slice(&v.to_le_bytes()),
            (DataType::Float64, ByteOrder::Big) => out.extend_from_slice(&v.to_be_bytes()),
        }
    }
}

/// Decode a raw cube from a byte slice in the header's interleave, type and
/// byte order.
pub fn read_cube<T: Scalar>(header: &EnviHeader, bytes: &[u8]) -> Result<RadianceCube<T>> {
    let expected = header.byte_len();
    if bytes.len() as u64 != expected {
        return Err(Error::TruncatedData {
            expected,
            found: bytes.len() as u64,
        });
    }
    read_cube_from(header, bytes)
}

/// Stream a raw cube from `reader`, one line (or band-line for BSQ) at a time.
pub fn read_cube_from<T: Scalar, R: Read>(header: &EnviHeader, mut reader: R) -> Result<RadianceCube<T>> {
    header.validate()?;
    let (lines, samples, bands) = (header.lines, header.samples, header.bands);
    let size = header.data_type.size();
    let expected = header.byte_len();
    let mut values = vec![T::zero(); header.element_count()];

    let record_elems = match header.interleave {
        Interleave::Bip | Interleave::Bil => samples * bands,
        Interleave::Bsq => samples,
    };
    let records = match header.interleave {
        Interleave::Bip | Interleave::Bil => lines,
        Interleave::Bsq => lines * bands,
    };
    let mut buf = vec![0u8; record_elems * size];
    let mut consumed = 0u64;
    for rec in 0..records {
        if let Err(e) = reader.read_exact(&mut buf) {
            if e.kind() == IoErrorKind::UnexpectedEof {
                return Err(Error::TruncatedData {
                    expected,
                    found: consumed,
                });
            }
            return Err(Error::io("<stream>", e));
        }
        consumed += buf.len() as u64;
        let (dt, bo) = (header.data_type, header.byte_order);
        match header.interleave {
            Interleave::Bip => {
                let dst = &mut values[rec * record_elems..(rec + 1) * record_elems];
                decode_into(&buf, dt, bo, |i, v| dst[i] = v);
            }
            Interleave::Bil => {
                let line = rec;
                let dst = &mut values[line * samples * bands..(line + 1) * samples * bands];
                decode_into(&buf, dt, bo, |i, v| {
                    let (band, sample) = (i / samples, i % samples);
                    dst[sample * bands + band] = v;
                });
            }
            Interleave::Bsq => {
                let (band, line) = (rec / lines, rec % lines);
                let base = line * samples * bands;
                decode_into(&buf, dt, bo, |sample, v| values[base + sample * bands + band] = v);
            }
        }
    }
    // trailing bytes mean the header geometry disagrees with the file
    let mut probe = [0u8; 1];
    match reader.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => {
            return Err(Error::TruncatedData {
                expected,
                found: expected + 1,
            })
        }
        Err(e) => return Err(Error::io("<stream>", e)),
    }
    RadianceCube::from_values(header.clone(), values)
}

/// Encode a cube in its header's interleave, data type and byte order.
/// Masked pixels are written as the nodata value.
pub fn encode_cube<T: Scalar>(cube: &RadianceCube<T>) -> Vec<u8> {
    let h = cube.header();
    let (lines, samples, bands) = (h.lines, h.samples, h.bands);
    let nodata = T::c(cube.nodata_value());
    let at = |line: usize, sample: usize, band: usize| {
        let flat = line * samples + sample;
        if cube.valid[flat] || h.nodata.is_none() {
            cube.values[flat * bands + band]
        } else {
            nodata
        }
    };
    let mut out = Vec::with_capacity(h.byte_len() as usize);
    let (dt, bo) = (h.data_type, h.byte_order);
    match h.interleave {
        Interleave::Bip => encode_into(
            (0..lines)
                .flat_map(|l| (0..samples).flat_map(move |s| (0..bands).map(move |b| (l, s, b))))
                .map(|(l, s, b)| at(l, s, b)),
            dt,
            bo,
            &mut out,
        ),
        Interleave::Bil => encode_into(
            (0..lines)
                .flat_map(|l| (0..bands).flat_map(move |b| (0..samples).map(move |s| (l, s, b))))
                .map(|(l, s, b)| at(l, s, b)),
            dt,
            bo,
            &mut out,
        ),
        Interleave::Bsq => encode_into(
            (0..bands)
                .flat_map(|b| (0..lines).flat_map(move |l| (0..samples).map(move |s| (l, s, b))))
                .map(|(l, s, b)| at(l, s, b)),
            dt,
            bo,
            &mut out,
        ),
    }
    out
}

/// Header path paired with a binary data path: `scene.img` -> `scene.hdr`,
/// `scene` -> `scene.hdr`.
pub fn header_path_for(data: &Path) -> PathBuf {
    data.with_extension("hdr")
}

/// Locate the binary file that belongs to an ENVI header.
pub fn data_path_for(header: &Path) -> Result<PathBuf> {
    let stem = header.with_extension("");
    let mut candidates = vec![stem.clone()];
    for ext in ["img", "dat", "bin", "raw", "bip", "bil", "bsq"] {
        candidates.push(stem.with_extension(ext));
    }
    candidates
        .into_iter()
        .find(|p| p.is_file() && p != header)
        .ok_or_else(|| {
            Error::io(
                header,
                std::io::Error::new(IoErrorKind::NotFound, "no binary file next to header"),
            )
        })
}

pub fn read_header(path: &Path) -> Result<EnviHeader> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EnviHeader::parse(&text)
}

/// Open a cube given the path of its `.hdr` file.
pub fn open_cube<T: Scalar>(header_path: &Path) -> Result<RadianceCube<T>> {
    let header = read_header(header_path)?;
    let data = data_path_for(header_path)?;
    let file = File::open(&data).map_err(|e| Error::io(&data, e))?;
    let len = file.metadata().map_err(|e| Error::io(&data, e))?.len();
    if len != header.byte_len() {
        return Err(Error::TruncatedData {
            expected: header.byte_len(),
            found: len,
        });
    }
    read_cube_from(&header, BufReader::with_capacity(1 << 20, file))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::WriteError {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut w = BufWriter::new(f);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::WriteError {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

/// Write a cube to `data_path` plus its `.hdr` companion.
pub fn write_cube<T: Scalar>(cube: &RadianceCube<T>, data_path: &Path) -> Result<()> {
    write_file(data_path, &encode_cube(cube))?;
    write_file(&header_path_for(data_path), cube.header().to_text().as_bytes())
}

/// Restrict a cube to the bands whose centers fall in `[lo, hi]` nm.
pub fn select_spectral_window<T: Scalar>(cube: &RadianceCube<T>, lo: f64, hi: f64) -> Result<RadianceCube<T>> {
    if !(lo < hi) {
        return Err(Error::ContractViolation(format!("window [{lo}, {hi}] is empty")));
    }
    let wl = cube.wavelengths();
    if wl.is_empty() {
        return Err(Error::MalformedHeader("cube has no wavelength metadata".into()));
    }
    let keep: Vec<usize> = (0..wl.len()).filter(|&b| wl[b] >= lo && wl[b] <= hi).collect();
    if keep.is_empty() {
        return Err(Error::EmptyBandSelection { lo, hi });
    }
    if keep.len() == wl.len() {
        return Ok(cube.clone());
    }
    let mut header = cube.header().clone();
    header.bands = keep.len();
    header.wavelengths = keep.iter().map(|&b| wl[b]).collect();
    header.fwhm = header.fwhm.map(|f| keep.iter().map(|&b| f[b]).collect());
    header.band_names = header
        .band_names
        .map(|n| keep.iter().filter_map(|&b| n.get(b).cloned()).collect());
    if header.band_names.as_ref().is_some_and(|n| n.len() != keep.len()) {
        header.band_names = None;
    }
    let mut values = Vec::with_capacity(cube.header().pixel_count() * keep.len());
    for px in cube.values.chunks_exact(cube.bands()) {
        values.extend(keep.iter().map(|&b| px[b]));
    }
    Ok(RadianceCube {
        header,
        values,
        valid: cube.valid.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(lines: usize, samples: usize, bands: usize, il: Interleave) -> EnviHeader {
        let mut h = EnviHeader::new(lines, samples, (0..bands).map(|b| 2000.0 + 10.0 * b as f64).collect()).unwrap();
        h.interleave = il;
        h
    }

    fn f32_bytes(v: &[f32]) -> Vec<u8> {
        v.iter().flat_map(|x| x.to_le_bytes()).collect()
    }

    #[test]
    fn single_pixel_bip() {
        let h = header(1, 1, 2, Interleave::Bip);
        let c: RadianceCube<f64> = read_cube(&h, &f32_bytes(&[1.0, 2.0])).unwrap();
        assert_eq!(c.pixel(0, 0), &[1.0, 2.0]);
    }

    #[test]
    fn bsq_two_pixels() {
        // lines=1, samples=2, bands=2: band plane a then band plane b
        let h = header(1, 2, 2, Interleave::Bsq);
        let c: RadianceCube<f64> = read_cube(&h, &f32_bytes(&[1.0, 2.0, 10.0, 20.0])).unwrap();
        assert_eq!(c.pixel(0, 0), &[1.0, 10.0]);
        assert_eq!(c.pixel(0, 1), &[2.0, 20.0]);
    }

    #[test]
    fn all_interleaves_on_2x2x2_by_index_arithmetic() {
        let (lines, samples, bands) = (2, 2, 2);
        let logical = |l: usize, s: usize, b: usize| (100 * l + 10 * s + b) as f32;
        for il in [Interleave::Bip, Interleave::Bil, Interleave::Bsq] {
            let mut stream = vec![0f32; 8];
            for l in 0..lines {
                for s in 0..samples {
                    for b in 0..bands {
                        let pos = match il {
                            Interleave::Bip => (l * samples + s) * bands + b,
                            Interleave::Bil => (l * bands + b) * samples + s,
                            Interleave::Bsq => (b * lines + l) * samples + s,
                        };
                        stream[pos] = logical(l, s, b);
                    }
                }
            }
            let c: RadianceCube<f64> = read_cube(&header(lines, samples, bands, il), &f32_bytes(&stream)).unwrap();
            for l in 0..lines {
                for s in 0..samples {
                    for b in 0..bands {
                        assert_eq!(c.pixel(l, s)[b], logical(l, s, b) as f64, "{il:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn nodata_pixel_is_masked() {
        let mut h = header(1, 2, 2, Interleave::Bip);
        h.nodata = Some(-9999.0);
        let c: RadianceCube<f64> = read_cube(&h, &f32_bytes(&[-9999.0, -9999.0, -9999.0, 3.0])).unwrap();
        assert_eq!(c.valid_mask(), &[false, true]);
        assert_eq!(c.valid_count(), 1);
    }

    #[test]
    fn byte_count_mismatch() {
        let h = header(1, 2, 2, Interleave::Bip);
        let r: Result<RadianceCube<f64>> = read_cube(&h, &f32_bytes(&[1.0, 2.0, 3.0]));
        assert!(matches!(
            r,
            Err(Error::TruncatedData {
                expected: 16,
                found: 12
            })
        ));
        let r: Result<RadianceCube<f64>> = read_cube(&h, &f32_bytes(&[1.0; 5]));
        assert!(matches!(r, Err(Error::TruncatedData { .. })));
    }

    #[test]
    fn big_endian_float64() {
        let mut h = header(1, 1, 2, Interleave::Bip);
        h.data_type = DataType::Float64;
        h.byte_order = ByteOrder::Big;
        let bytes: Vec<u8> = [1.25f64, -3.5].iter().flat_map(|x| x.to_be_bytes()).collect();
        let c: RadianceCube<f64> = read_cube(&h, &bytes).unwrap();
        assert_eq!(c.pixel(0, 0), &[1.25, -3.5]);
        assert_eq!(encode_cube(&c), bytes);
    }

    #[test]
    fn spectral_window() {
        let mut h = EnviHeader::new(1, 1, vec![2000.0, 2100.0, 2500.0]).unwrap();
        h.fwhm = Some(vec![5.0, 6.0, 7.0]);
        let c = RadianceCube::from_values(h, vec![1.0f64, 2.0, 3.0]).unwrap();
        let w = select_spectral_window(&c, 2080.0, 2450.0).unwrap();
        assert_eq!(w.bands(), 1);
        assert_eq!(w.wavelengths(), &[2100.0]);
        assert_eq!(w.header().fwhm.as_deref(), Some(&[6.0][..]));
        assert_eq!(w.pixel(0, 0), &[2.0]);
        assert_eq!(select_spectral_window(&c, 1000.0, 3000.0).unwrap(), c);
        assert!(matches!(
            select_spectral_window(&c, 9000.0, 9100.0),
            Err(Error::EmptyBandSelection { .. })
        ));
    }
}
