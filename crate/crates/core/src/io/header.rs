use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interleave {
    Bip,
    Bil,
    Bsq,
}

impl Interleave {
    fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bip" => Ok(Self::Bip),
            "bil" => Ok(Self::Bil),
            "bsq" => Ok(Self::Bsq),
            other => Err(Error::UnsupportedFormat(format!("interleave '{other}'"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bip => "bip",
            Self::Bil => "bil",
            Self::Bsq => "bsq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataType {
    Float32,
    Float64,
}

impl DataType {
    pub fn code(self) -> u8 {
        match self {
            Self::Float32 => 4,
            Self::Float64 => 5,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Self::Float32 => 4,
            Self::Float64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ByteOrder {
    Little,
    Big,
}

/// Parsed ENVI header.
///
/// Wavelengths are held in nanometres; headers declaring micrometres are
/// converted on parse. Keys the reader does not interpret are kept verbatim
/// in `extra` and written back out unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnviHeader {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub interleave: Interleave,
    pub data_type: DataType,
    pub byte_order: ByteOrder,
    /// Band centers in nm; empty when the header carries none.
    pub wavelengths: Vec<f64>,
    pub fwhm: Option<Vec<f64>>,
    pub nodata: Option<f64>,
    pub description: Option<String>,
    pub band_names: Option<Vec<String>>,
    pub extra: Vec<(String, String)>,
}

impl EnviHeader {
    /// Header for a float32 BIP cube with the given geometry.
    pub fn new(lines: usize, samples: usize, wavelengths: Vec<f64>) -> Result<Self> {
        let h = Self {
            samples,
            lines,
            bands: wavelengths.len(),
            interleave: Interleave::Bip,
            data_type: DataType::Float32,
            byte_order: ByteOrder::Little,
            wavelengths,
            fwhm: None,
            nodata: None,
            description: None,
            band_names: None,
            extra: Vec::new(),
        };
        h.validate()?;
        Ok(h)
    }

    pub fn pixel_count(&self) -> usize {
        self.lines * self.samples
    }

    pub fn element_count(&self) -> usize {
        self.lines * self.samples * self.bands
    }

    pub fn byte_len(&self) -> u64 {
        self.element_count() as u64 * self.data_type.size() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.lines == 0 || self.bands == 0 {
            return Err(Error::MalformedHeader(format!(
                "empty geometry {}x{}x{}",
                self.lines, self.samples, self.bands
            )));
        }
        if !self.wavelengths.is_empty() {
            if self.wavelengths.len() != self.bands {
                return Err(Error::MalformedHeader(format!(
                    "{} wavelengths for {} bands",
                    self.wavelengths.len(),
                    self.bands
                )));
            }
            if self.wavelengths.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::MalformedHeader("wavelengths are not strictly increasing".into()));
            }
        }
        if let Some(fwhm) = &self.fwhm {
            if fwhm.len() != self.bands {
                return Err(Error::MalformedHeader(format!(
                    "{} fwhm values for {} bands",
                    fwhm.len(),
                    self.bands
                )));
            }
            if fwhm.iter().any(|f| !(*f > 0.0)) {
                return Err(Error::MalformedHeader("fwhm must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_envi_header(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("ENVI\n");
        if let Some(d) = &self.description {
            let _ = writeln!(out, "description = {{{d}}}");
        }
        let _ = writeln!(out, "samples = {}", self.samples);
        let _ = writeln!(out, "lines = {}", self.lines);
        let _ = writeln!(out, "bands = {}", self.bands);
        let _ = writeln!(out, "header offset = 0");
        let _ = writeln!(out, "file type = ENVI Standard");
        let _ = writeln!(out, "data type = {}", self.data_type.code());
        let _ = writeln!(out, "interleave = {}", self.interleave.as_str());
        let bo = match self.byte_order {
            ByteOrder::Little => 0,
            ByteOrder::Big => 1,
        };
        let _ = writeln!(out, "byte order = {bo}");
        if let Some(nd) = self.nodata {
            let _ = writeln!(out, "data ignore value = {nd}");
        }
        if let Some(names) = &self.band_names {
            let _ = writeln!(out, "band names = {{{}}}", names.join(", "));
        }
        if !self.wavelengths.is_empty() {
            let _ = writeln!(out, "wavelength units = Nanometers");
            let _ = writeln!(out, "wavelength = {{{}}}", join_reals(&self.wavelengths));
        }
        if let Some(f) = &self.fwhm {
            let _ = writeln!(out, "fwhm = {{{}}}", join_reals(f));
        }
        for (k, v) in &self.extra {
            if v.contains('\n') || v.contains(',') {
                let _ = writeln!(out, "{k} = {{{v}}}");
            } else {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }
}

fn join_reals(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")
}

/// Split header text into `(key, value)` pairs. Keys are lower-cased with
/// internal whitespace collapsed; brace-delimited values may span lines and
/// are returned without their braces.
fn tokenize(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    let mut rest = text;
    if let Some(first) = rest.lines().next() {
        if first.trim().eq_ignore_ascii_case("envi") {
            rest = &rest[first.len()..];
        }
    }
    loop {
        rest = rest.trim_start();
        if rest.is_empty() {
            break;
        }
        if rest.starts_with(';') {
            rest = rest.find('\n').map(|i| &rest[i..]).unwrap_or("");
            continue;
        }
        let line_end = rest.find('\n').unwrap_or(rest.len());
        let Some(eq) = rest[..line_end].find('=') else {
            return Err(Error::MalformedHeader(format!(
                "expected 'key = value', found '{}'",
                rest[..line_end].trim()
            )));
        };
        let key = rest[..eq]
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_ascii_lowercase();
        let after = rest[eq + 1..].trim_start_matches([' ', '\t']);
        if let Some(body) = after.strip_prefix('{') {
            let close = body
                .find('}')
                .ok_or_else(|| Error::MalformedHeader(format!("unterminated brace for '{key}'")))?;
            pairs.push((key, body[..close].trim().to_string()));
            rest = &body[close + 1..];
        } else {
            let end = after.find('\n').unwrap_or(after.len());
            pairs.push((key, after[..end].trim().to_string()));
            rest = &after[end..];
        }
    }
    Ok(pairs)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| Error::MalformedHeader(format!("'{key}' is not a non-negative integer: '{v}'")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::MalformedHeader(format!("bad number '{s}' in '{key}'")))
        })
        .collect()
}

/// Parse ENVI header text.
pub fn parse_envi_header(text: &str) -> Result<EnviHeader> {
    let pairs = tokenize(text)?;
    let get = |k: &str| pairs.iter().rev().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    let need = |k: &str| get(k).ok_or_else(|| Error::MalformedHeader(format!("missing mandatory key '{k}'")));

    let samples = parse_usize("samples", need("samples")?)?;
    let lines = parse_usize("lines", need("lines")?)?;
    let bands = parse_usize("bands", need("bands")?)?;
    let interleave = Interleave::parse(need("interleave")?)?;
    let data_type = match parse_usize("data type", need("data type")?)? {
        4 => DataType::Float32,
        5 => DataType::Float64,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "data type {other} (only 4 = float32 and 5 = float64 are supported)"
            )))
        }
    };
    let byte_order = match get("byte order").map(|v| parse_usize("byte order", v)).transpose()? {
        None | Some(0) => ByteOrder::Little,
        Some(1) => ByteOrder::Big,
        Some(other) => return Err(Error::MalformedHeader(format!("byte order {other}"))),
    };
    if let Some(off) = get("header offset") {
        if parse_usize("header offset", off)? != 0 {
            return Err(Error::UnsupportedFormat("non-zero header offset".into()));
        }
    }
    let unit_scale = match get("wavelength units").map(|u| u.trim().to_ascii_lowercase()) {
        Some(u) if u.starts_with("micro") || u == "um" || u == "µm" => 1000.0,
        _ => 1.0,
    };
    let wavelengths = get("wavelength")
        .map(|v| parse_list("wavelength", v))
        .transpose()?
        .unwrap_or_default()
        .into_iter()
        .map(|w| w * unit_scale)
        .collect();
    let fwhm = get("fwhm")
        .map(|v| parse_list("fwhm", v))
        .transpose()?
        .map(|f| f.into_iter().map(|w| w * unit_scale).collect());
    let nodata = get("data ignore value")
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::MalformedHeader(format!("bad data ignore value '{v}'")))
        })
        .transpose()?;
    let band_names = get("band names").map(|v| v.split(',').map(|s| s.trim().to_string()).collect());

    const KNOWN: &[&str] = &[
        "samples",
        "lines",
        "bands",
        "interleave",
        "data type",
        "byte order",
        "header offset",
        "wavelength units",
        "wavelength",
        "fwhm",
        "data ignore value",
        "description",
        "band names",
        "file type",
    ];
    let extra = pairs
        .iter()
        .filter(|(k, _)| !KNOWN.contains(&k.as_str()))
        .cloned()
        .collect();

    let header = EnviHeader {
        samples,
        lines,
        bands,
        interleave,
        data_type,
        byte_order,
        wavelengths,
        fwhm,
        nodata,
        description: get("description").map(str::to_string),
        band_names,
        extra,
    };
    header.validate()?;
    Ok(header)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "ENVI
description = {
  test cube}
samples = 3
lines   = 2
bands   = 4
header offset = 0
data type = 4
interleave = bip
sensor type = AVIRIS-NG
wavelength units = Nanometers
wavelength = { 2100.0, 2105.5,
 2111.0, 2116.5 }
fwhm = {5.5, 5.5, 5.6, 5.6}
data ignore value = -9999
";

    #[test]
    fn parses_fixture_field_by_field() {
        let h = parse_envi_header(FIXTURE).unwrap();
        assert_eq!((h.samples, h.lines, h.bands), (3, 2, 4));
        assert_eq!(h.interleave, Interleave::Bip);
        assert_eq!(h.data_type, DataType::Float32);
        assert_eq!(h.byte_order, ByteOrder::Little);
        assert_eq!(h.wavelengths, vec![2100.0, 2105.5, 2111.0, 2116.5]);
        assert_eq!(h.fwhm.as_deref(), Some(&[5.5, 5.5, 5.6, 5.6][..]));
        assert_eq!(h.nodata, Some(-9999.0));
        assert_eq!(h.description.as_deref(), Some("test cube"));
        assert_eq!(h.extra, vec![("sensor type".to_string(), "AVIRIS-NG".to_string())]);
    }

    #[test]
    fn missing_bands_is_malformed() {
        let text = FIXTURE.replace("bands   = 4\n", "");
        assert!(matches!(parse_envi_header(&text), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn data_type_codes() {
        let h = parse_envi_header(&FIXTURE.replace("data type = 4", "data type = 5")).unwrap();
        assert_eq!(h.data_type, DataType::Float64);
        for code in [1, 2, 3, 12] {
            let text = FIXTURE.replace("data type = 4", &format!("data type = {code}"));
            assert!(matches!(parse_envi_header(&text), Err(Error::UnsupportedFormat(_))));
        }
    }

    #[test]
    fn big_endian_and_micrometres() {
        let text = "ENVI\nsamples=1\nlines=1\nbands=2\ninterleave=BSQ\ndata type=4\nbyte order=1\nwavelength units = Micrometers\nwavelength={2.1,2.2}\n";
        let h = parse_envi_header(text).unwrap();
        assert_eq!(h.byte_order, ByteOrder::Big);
        assert_eq!(h.interleave, Interleave::Bsq);
        assert!((h.wavelengths[0] - 2100.0).abs() < 1e-9);
    }

    #[test]
    fn invariants_are_enforced() {
        let unsorted = FIXTURE.replace("2105.5", "2099.0");
        assert!(parse_envi_header(&unsorted).is_err());
        let neg = FIXTURE.replace("fwhm = {5.5", "fwhm = {-5.5");
        assert!(parse_envi_header(&neg).is_err());
        let zero = FIXTURE.replace("lines   = 2", "lines = 0");
        assert!(parse_envi_header(&zero).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let h = parse_envi_header(FIXTURE).unwrap();
        let back = parse_envi_header(&h.to_text()).unwrap();
        assert_eq!(h, back);
    }
}
