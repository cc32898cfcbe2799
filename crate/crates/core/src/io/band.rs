use std::path::Path;

use ndarray::Array2;

use crate::io::cube::{header_path_for, write_cube, RadianceCube};
use crate::io::header::{ByteOrder, DataType, EnviHeader, Interleave};
use crate::{Error, Result, Scalar};

/// Units note attached to enhancement maps.
pub const ENHANCEMENT_UNITS: &str = "ppm m";

/// Header for a single-band float32 BSQ map derived from `template`.
pub fn band_header(template: &EnviHeader, name: &str, units: &str) -> EnviHeader {
    EnviHeader {
        samples: template.samples,
        lines: template.lines,
        bands: 1,
        interleave: Interleave::Bsq,
        data_type: DataType::Float32,
        byte_order: ByteOrder::Little,
        wavelengths: Vec::new(),
        fwhm: None,
        nodata: template.nodata,
        description: Some(format!("{name}, units: {units}")),
        band_names: Some(vec![format!("{name} [{units}]")]),
        extra: template.extra.clone(),
    }
}

/// Write a `lines x samples` map as a float32 BSQ band with header.
pub fn write_band<T: Scalar>(map: &Array2<T>, template: &EnviHeader, path: &Path) -> Result<()> {
    write_band_as(map, template, path, "enhancement", ENHANCEMENT_UNITS)
}

pub fn write_band_as<T: Scalar>(
    map: &Array2<T>,
    template: &EnviHeader,
    path: &Path,
    name: &str,
    units: &str,
) -> Result<()> {
    if map.dim() != (template.lines, template.samples) {
        return Err(Error::ShapeError(format!(
            "map is {:?}, header expects ({}, {})",
            map.dim(),
            template.lines,
            template.samples
        )));
    }
    if let Some(bad) = map.iter().position(|v| !v.is_finite()) {
        return Err(Error::WriteError {
            path: path.to_path_buf(),
            reason: format!("non-finite value at element {bad}"),
        });
    }
    let header = band_header(template, name, units);
    let values: Vec<T> = map.iter().copied().collect();
    let valid = vec![true; values.len()];
    let cube = RadianceCube::with_mask(header, values, valid)?;
    write_cube(&cube, path)?;
    debug_assert!(header_path_for(path).exists());
    Ok(())
}

/// Read a single-band map written by [`write_band`] (or any one-band cube).
pub fn read_band<T: Scalar>(header_path: &Path) -> Result<(Array2<T>, EnviHeader)> {
    let cube: RadianceCube<T> = crate::io::cube::open_cube(header_path)?;
    if cube.bands() != 1 {
        return Err(Error::ShapeError(format!(
            "expected a single band, found {}",
            cube.bands()
        )));
    }
    let header = cube.header().clone();
    let map = Array2::from_shape_vec((header.lines, header.samples), cube.into_values())
        .map_err(|e| Error::ShapeError(e.to_string()))?;
    Ok((map, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::cube::{data_path_for, read_cube};
    use ndarray::array;

    #[test]
    fn write_then_read_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let template = EnviHeader::new(2, 2, vec![2100.0, 2110.0]).unwrap();
        let map = array![[0.0f64, 1.5], [-3.0, 1e6]];
        let path = dir.path().join("alpha.img");
        write_band(&map, &template, &path).unwrap();
        let hdr = header_path_for(&path);
        let text = std::fs::read_to_string(&hdr).unwrap();
        assert!(text.contains("ppm m"));
        let (back, h) = read_band::<f64>(&hdr).unwrap();
        assert_eq!(h.interleave, Interleave::Bsq);
        assert_eq!(back, map);
        // raw bytes also decode through the generic reader
        let bytes = std::fs::read(data_path_for(&hdr).unwrap()).unwrap();
        let cube: RadianceCube<f32> = read_cube(&h, &bytes).unwrap();
        assert_eq!(cube.values(), &[0.0f32, 1.5, -3.0, 1e6]);
    }

    #[test]
    fn nan_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let template = EnviHeader::new(2, 2, vec![2100.0]).unwrap();
        let map = array![[0.0f64, f64::NAN], [1.0, 2.0]];
        assert!(matches!(
            write_band(&map, &template, &dir.path().join("x.img")),
            Err(Error::WriteError { .. })
        ));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let template = EnviHeader::new(2, 2, vec![2100.0]).unwrap();
        let map = Array2::<f64>::zeros((3, 2));
        assert!(matches!(
            write_band(&map, &template, &dir.path().join("x.img")),
            Err(Error::ShapeError(_))
        ));
    }
}
