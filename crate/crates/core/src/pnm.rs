//! Binary PNM (P5/P6) and label-map I/O.
//!
//! Images and edge maps are 8-bit (maxval 255). Label maps are written as
//! 16-bit P5 (maxval 65535, big-endian samples) or as a comma-separated
//! text grid. Overlays are P6 renderings with region boundaries in red.

use std::path::Path;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::extract::Segmentation;
use crate::image::{EdgeConfidenceMap, Image};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("byte {offset}: bad magic number, expected {expected}")]
    BadMagic {
        offset: usize,
        expected: &'static str,
    },
    #[error("byte {offset}: malformed header: {reason}")]
    Header { offset: usize, reason: String },
    #[error("byte {offset}: unsupported maxval {maxval} (expected {expected})")]
    UnsupportedMaxval {
        offset: usize,
        maxval: u64,
        expected: &'static str,
    },
    #[error("byte {offset}: truncated payload, {missing} of {expected} bytes missing")]
    Truncated {
        offset: usize,
        expected: usize,
        missing: usize,
    },
    #[error("byte {offset}: sample {value} exceeds maxval {maxval}")]
    SampleRange {
        offset: usize,
        value: u32,
        maxval: u32,
    },
    #[error("line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnmKind {
    /// P5, grayscale
    Gray,
    /// P6, RGB
    Rgb,
}

impl PnmKind {
    fn channels(self) -> usize {
        match self {
            PnmKind::Gray => 1,
            PnmKind::Rgb => 3,
        }
    }

    fn magic(self) -> &'static [u8; 2] {
        match self {
            PnmKind::Gray => b"P5",
            PnmKind::Rgb => b"P6",
        }
    }
}

/// Decoded binary PNM samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmRaster {
    pub kind: PnmKind,
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub samples: Vec<u16>,
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_separators(&mut self) -> std::result::Result<(), DecodeError> {
        let start = self.pos;
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        if self.pos == start {
            return Err(DecodeError::Header {
                offset: self.pos,
                reason: "expected whitespace".into(),
            });
        }
        Ok(())
    }

    fn number(&mut self, what: &str) -> std::result::Result<(u64, usize), DecodeError> {
        self.skip_separators()?;
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or_else(|| DecodeError::Header {
                    offset: start,
                    reason: format!("{what} overflows"),
                })?;
            self.pos += 1;
        }
        if self.pos == start {
            let reason = match self.bytes.get(self.pos) {
                None => format!("unexpected end of file, expected {what}"),
                Some(b) => format!("expected {what}, found byte 0x{b:02x}"),
            };
            return Err(DecodeError::Header {
                offset: self.pos,
                reason,
            });
        }
        Ok((value, start))
    }
}

/// Decodes a P5 or P6 file with maxval in `1..=65535`. Bytes after the
/// declared payload are ignored.
pub fn decode_pnm(bytes: &[u8]) -> std::result::Result<PnmRaster, DecodeError> {
    decode_pnm_at(bytes).map(|(r, _)| r)
}

/// Decodes and also returns the byte offset of the maxval token.
fn decode_pnm_at(bytes: &[u8]) -> std::result::Result<(PnmRaster, usize), DecodeError> {
    let kind = match bytes.get(..2) {
        Some(b"P5") => PnmKind::Gray,
        Some(b"P6") => PnmKind::Rgb,
        _ => {
            return Err(DecodeError::BadMagic {
                offset: 0,
                expected: "P5 or P6",
            })
        }
    };
    let mut rd = HeaderReader { bytes, pos: 2 };
    let (width, w_at) = rd.number("width")?;
    let (height, h_at) = rd.number("height")?;
    if width == 0 {
        return Err(DecodeError::Header {
            offset: w_at,
            reason: "width is zero".into(),
        });
    }
    if height == 0 {
        return Err(DecodeError::Header {
            offset: h_at,
            reason: "height is zero".into(),
        });
    }
    let (maxval, m_at) = rd.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(DecodeError::UnsupportedMaxval {
            offset: m_at,
            maxval,
            expected: "1..=65535",
        });
    }
    match bytes.get(rd.pos) {
        Some(b) if b.is_ascii_whitespace() => rd.pos += 1,
        Some(b) => {
            return Err(DecodeError::Header {
                offset: rd.pos,
                reason: format!("expected whitespace after maxval, found byte 0x{b:02x}"),
            })
        }
        None => {
            return Err(DecodeError::Header {
                offset: rd.pos,
                reason: "unexpected end of file after maxval".into(),
            })
        }
    }

    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let sample_count = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(kind.channels() as u64))
        .filter(|&s| s <= usize::MAX as u64 / 2)
        .ok_or_else(|| DecodeError::Header {
            offset: w_at,
            reason: format!("dimensions {width}x{height} overflow"),
        })? as usize;
    let payload_len = sample_count * bytes_per_sample;
    let payload = &bytes[rd.pos..];
    if payload.len() < payload_len {
        return Err(DecodeError::Truncated {
            offset: bytes.len(),
            expected: payload_len,
            missing: payload_len - payload.len(),
        });
    }
    let payload = &payload[..payload_len];
    let samples: Vec<u16> = if bytes_per_sample == 1 {
        payload.iter().map(|&b| u16::from(b)).collect()
    } else {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(i) = samples.iter().position(|&s| u32::from(s) > maxval as u32) {
        return Err(DecodeError::SampleRange {
            offset: rd.pos + i * bytes_per_sample,
            value: u32::from(samples[i]),
            maxval: maxval as u32,
        });
    }
    Ok((
        PnmRaster {
            kind,
            width: width as usize,
            height: height as usize,
            maxval: maxval as u32,
            samples,
        },
        m_at,
    ))
}

/// Canonical encoding: `P5|P6`, newline, `width height`, newline, maxval,
/// newline, samples.
pub fn encode_pnm(r: &PnmRaster) -> Vec<u8> {
    let header = format!(
        "{}\n{} {}\n{}\n",
        std::str::from_utf8(r.kind.magic()).unwrap(),
        r.width,
        r.height,
        r.maxval
    );
    let bps = if r.maxval < 256 { 1 } else { 2 };
    let mut out = Vec::with_capacity(header.len() + r.samples.len() * bps);
    out.extend_from_slice(header.as_bytes());
    if bps == 1 {
        out.extend(r.samples.iter().map(|&s| s as u8));
    } else {
        for &s in &r.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
    out
}

fn require_8bit(r: &PnmRaster, maxval_at: usize) -> std::result::Result<(), DecodeError> {
    if r.maxval != 255 {
        return Err(DecodeError::UnsupportedMaxval {
            offset: maxval_at,
            maxval: u64::from(r.maxval),
            expected: "255",
        });
    }
    Ok(())
}

/// P5 or P6 with maxval 255, intensities scaled into [0, 1].
pub fn decode_image(bytes: &[u8]) -> std::result::Result<Image, DecodeError> {
    let (r, maxval_at) = decode_pnm_at(bytes)?;
    require_8bit(&r, maxval_at)?;
    let data = r.samples.iter().map(|&s| f64::from(s) / 255.0).collect();
    Image::new(r.width, r.height, r.kind.channels(), data).map_err(|e| DecodeError::Header {
        offset: 0,
        reason: e.to_string(),
    })
}

/// P5 with maxval 255, confidence = value / 255.
pub fn decode_edge_map(bytes: &[u8]) -> std::result::Result<EdgeConfidenceMap, DecodeError> {
    let (r, maxval_at) = decode_pnm_at(bytes)?;
    if r.kind != PnmKind::Gray {
        return Err(DecodeError::BadMagic {
            offset: 0,
            expected: "P5",
        });
    }
    require_8bit(&r, maxval_at)?;
    let conf = r.samples.iter().map(|&s| f64::from(s) / 255.0).collect();
    EdgeConfidenceMap::new(r.width, r.height, conf).map_err(|e| DecodeError::Header {
        offset: 0,
        reason: e.to_string(),
    })
}

fn quantize(v: f64) -> u16 {
    (v * 255.0).round().clamp(0.0, 255.0) as u16
}

/// 8-bit P5 (one channel) or P6 (three channels).
pub fn encode_image(img: &Image) -> Vec<u8> {
    let kind = if img.channels() == 1 {
        PnmKind::Gray
    } else {
        PnmKind::Rgb
    };
    encode_pnm(&PnmRaster {
        kind,
        width: img.width(),
        height: img.height(),
        maxval: 255,
        samples: img.data().iter().map(|&v| quantize(v)).collect(),
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn with_path(path: &Path) -> impl FnOnce(DecodeError) -> Error + '_ {
    move |source| Error::Parse {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_image(path: &Path) -> Result<Image> {
    decode_image(&read_file(path)?).map_err(with_path(path))
}

pub fn read_edge_map(path: &Path) -> Result<EdgeConfidenceMap> {
    decode_edge_map(&read_file(path)?).map_err(with_path(path))
}

pub fn write_image(img: &Image, path: &Path) -> Result<()> {
    write_file(path, &encode_image(img))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelFormat {
    /// P5 with maxval 65535.
    #[default]
    Pgm16,
    /// One comma-separated row per image row.
    Csv,
}

pub const PGM16_MAX_REGIONS: usize = 65535;

pub fn encode_labels(s: &Segmentation, format: LabelFormat) -> Result<Vec<u8>> {
    match format {
        LabelFormat::Pgm16 => {
            if s.k() > PGM16_MAX_REGIONS {
                return Err(Error::InvalidInput(format!(
                    "{} regions do not fit a 16-bit label map (max {PGM16_MAX_REGIONS}); use csv",
                    s.k()
                )));
            }
            Ok(encode_pnm(&PnmRaster {
                kind: PnmKind::Gray,
                width: s.width(),
                height: s.height(),
                maxval: 65535,
                samples: s.labels().iter().map(|&l| l as u16).collect(),
            }))
        }
        LabelFormat::Csv => {
            let mut out = String::with_capacity(s.labels().len() * 4);
            for row in s.labels().chunks(s.width()) {
                for (i, l) in row.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&l.to_string());
                }
                out.push('\n');
            }
            Ok(out.into_bytes())
        }
    }
}

pub fn write_labels(s: &Segmentation, path: &Path, format: LabelFormat) -> Result<()> {
    write_file(path, &encode_labels(s, format)?)
}

/// Raw label raster as stored on disk, not canonicalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
}

/// Reads either a P5 label map (any maxval) or a CSV grid, chosen by the
/// leading magic bytes.
pub fn decode_labels(bytes: &[u8]) -> std::result::Result<LabelGrid, DecodeError> {
    if bytes.starts_with(b"P") {
        let r = decode_pnm(bytes)?;
        if r.kind != PnmKind::Gray {
            return Err(DecodeError::BadMagic {
                offset: 0,
                expected: "P5",
            });
        }
        return Ok(LabelGrid {
            width: r.width,
            height: r.height,
            labels: r.samples.into_iter().map(u32::from).collect(),
        });
    }
    decode_label_csv(bytes)
}

fn decode_label_csv(bytes: &[u8]) -> std::result::Result<LabelGrid, DecodeError> {
    let text = std::str::from_utf8(bytes).map_err(|e| DecodeError::Csv {
        line: 1 + bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count(),
        reason: "invalid UTF-8".into(),
    })?;
    let mut width = None;
    let mut labels = Vec::new();
    let mut height = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            return Err(DecodeError::Csv {
                line: line_no,
                reason: "empty row".into(),
            });
        }
        let before = labels.len();
        for field in line.split(',') {
            let v: u32 = field.trim().parse().map_err(|_| DecodeError::Csv {
                line: line_no,
                reason: format!("invalid label {field:?}"),
            })?;
            labels.push(v);
        }
        let row_len = labels.len() - before;
        match width {
            None => width = Some(row_len),
            Some(w) if w != row_len => {
                return Err(DecodeError::Csv {
                    line: line_no,
                    reason: format!("row has {row_len} labels, expected {w}"),
                })
            }
            _ => {}
        }
        height += 1;
    }
    let width = width.ok_or(DecodeError::Csv {
        line: 1,
        reason: "no rows".into(),
    })?;
    Ok(LabelGrid {
        width,
        height,
        labels,
    })
}

pub fn read_labels(path: &Path) -> Result<LabelGrid> {
    decode_labels(&read_file(path)?).map_err(with_path(path))
}

/// Pixels with at least one 4-neighbour in a different region.
pub fn region_boundaries(s: &Segmentation) -> Vec<bool> {
    let (w, h) = (s.width(), s.height());
    let l = s.labels();
    let mut mask = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w && l[p] != l[p + 1] {
                mask[p] = true;
                mask[p + 1] = true;
            }
            if y + 1 < h && l[p] != l[p + w] {
                mask[p] = true;
                mask[p + w] = true;
            }
        }
    }
    mask
}

/// P6 copy of `img` with region boundary pixels painted (255, 0, 0).
pub fn encode_overlay(img: &Image, s: &Segmentation) -> Result<Vec<u8>> {
    if img.width() != s.width() || img.height() != s.height() {
        return Err(Error::DimensionMismatch {
            what: "segmentation",
            expected: (img.width(), img.height()),
            found: (s.width(), s.height()),
        });
    }
    let mask = region_boundaries(s);
    let mut samples = Vec::with_capacity(img.pixel_count() * 3);
    for (p, &edge) in mask.iter().enumerate() {
        if edge {
            samples.extend_from_slice(&[255, 0, 0]);
        } else if img.channels() == 1 {
            let v = quantize(img.pixel(p)[0]);
            samples.extend_from_slice(&[v, v, v]);
        } else {
            samples.extend(img.pixel(p).iter().map(|&v| quantize(v)));
        }
    }
    Ok(encode_pnm(&PnmRaster {
        kind: PnmKind::Rgb,
        width: img.width(),
        height: img.height(),
        maxval: 255,
        samples,
    }))
}

pub fn write_overlay(img: &Image, s: &Segmentation, path: &Path) -> Result<()> {
    write_file(path, &encode_overlay(img, s)?)
}
