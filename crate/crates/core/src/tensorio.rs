//! NPY (format version 1.0) tensors.
//!
//! Feature maps are stored little-endian, C-order, as `<f4` or `<f8`. A
//! `(C, N)` file maps directly onto a feature map; a `(C, H, W)` file is
//! flattened to `(C, H·W)` with `W` varying fastest, so position `y·W + x`
//! holds pixel `(y, x)`. Maps that carry a spatial grid are written back as
//! `(C, H, W)`.
//!
//! Label masks are integer tensors of shape `(N,)` or `(H, W)`.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::stats::FeatureMap;
use crate::transforms::RegionMask;

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const PREAMBLE_LEN: usize = 10;
const HEADER_ALIGN: usize = 64;

/// Element types understood by the reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F4,
    F8,
    I1,
    I2,
    I4,
    I8,
    U1,
    U2,
    U4,
    U8,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::I1 | Dtype::U1 => 1,
            Dtype::I2 | Dtype::U2 => 2,
            Dtype::F4 | Dtype::I4 | Dtype::U4 => 4,
            Dtype::F8 | Dtype::I8 | Dtype::U8 => 8,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, Dtype::F4 | Dtype::F8)
    }

    /// Type string as written in the header (`'<f8'`, `'|u1'`, ...).
    pub fn descr(self) -> &'static str {
        match self {
            Dtype::F4 => "<f4",
            Dtype::F8 => "<f8",
            Dtype::I1 => "|i1",
            Dtype::I2 => "<i2",
            Dtype::I4 => "<i4",
            Dtype::I8 => "<i8",
            Dtype::U1 => "|u1",
            Dtype::U2 => "<u2",
            Dtype::U4 => "<u4",
            Dtype::U8 => "<u8",
        }
    }

    fn from_descr(descr: &str) -> Result<Self> {
        let (order, kind) = descr.split_at(descr.len().min(1));
        let dtype = match kind {
            "f4" => Dtype::F4,
            "f8" => Dtype::F8,
            "i1" => Dtype::I1,
            "i2" => Dtype::I2,
            "i4" => Dtype::I4,
            "i8" => Dtype::I8,
            "u1" => Dtype::U1,
            "u2" => Dtype::U2,
            "u4" => Dtype::U4,
            "u8" => Dtype::U8,
            _ => {
                return Err(Error::UnsupportedTensor(format!(
                    "dtype '{descr}' is not supported"
                )))
            }
        };
        let ok_order = match order {
            "<" => true,
            "|" => dtype.size() == 1,
            // single-byte types are byte-order agnostic
            ">" | "=" => dtype.size() == 1,
            _ => false,
        };
        if !ok_order {
            return Err(Error::UnsupportedTensor(format!(
                "dtype '{descr}' is not little-endian"
            )));
        }
        Ok(dtype)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorHeader {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
}

impl TensorHeader {
    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Full preamble plus padded header dictionary.
    pub fn encode(&self) -> Vec<u8> {
        let shape = match self.shape.as_slice() {
            [d] => format!("({d},)"),
            dims => format!(
                "({})",
                dims.iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        };
        let mut dict = format!(
            "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
            self.dtype.descr(),
            shape
        );
        let unpadded = PREAMBLE_LEN + dict.len() + 1;
        let padding = (HEADER_ALIGN - unpadded % HEADER_ALIGN) % HEADER_ALIGN;
        dict.extend(std::iter::repeat_n(' ', padding));
        dict.push('\n');

        let mut out = Vec::with_capacity(PREAMBLE_LEN + dict.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
        out.extend_from_slice(dict.as_bytes());
        out
    }

    /// Parses the preamble and header; returns the header and the offset of
    /// the data block.
    pub fn decode(bytes: &[u8]) -> Result<(TensorHeader, usize)> {
        if bytes.len() < PREAMBLE_LEN || &bytes[..6] != MAGIC {
            return Err(Error::Format("missing NPY magic string".into()));
        }
        if bytes[6..8] != [1, 0] {
            return Err(Error::Format(format!(
                "NPY version {}.{} is not supported (need 1.0)",
                bytes[6], bytes[7]
            )));
        }
        let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        let end = PREAMBLE_LEN + header_len;
        if bytes.len() < end {
            return Err(Error::Format("truncated NPY header".into()));
        }
        let text = std::str::from_utf8(&bytes[PREAMBLE_LEN..end])
            .map_err(|_| Error::Format("NPY header is not ASCII".into()))?;
        let dict = HeaderDict::parse(text)?;
        if dict.fortran_order {
            return Err(Error::UnsupportedTensor(
                "Fortran-ordered arrays are not supported".into(),
            ));
        }
        let dtype = Dtype::from_descr(&dict.descr)?;
        Ok((
            TensorHeader {
                dtype,
                shape: dict.shape,
            },
            end,
        ))
    }
}

struct HeaderDict {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

impl HeaderDict {
    fn parse(text: &str) -> Result<Self> {
        let mut p = Cursor {
            s: text.as_bytes(),
            pos: 0,
        };
        let mut descr = None;
        let mut fortran_order = None;
        let mut shape = None;

        p.expect(b'{')?;
        loop {
            p.skip_ws();
            if p.eat(b'}') {
                break;
            }
            let key = p.string()?;
            p.skip_ws();
            p.expect(b':')?;
            p.skip_ws();
            match key.as_str() {
                "descr" => descr = Some(p.string()?),
                "fortran_order" => fortran_order = Some(p.boolean()?),
                "shape" => shape = Some(p.tuple()?),
                other => return Err(Error::Format(format!("unexpected header key '{other}'"))),
            }
            p.skip_ws();
            if !p.eat(b',') {
                p.skip_ws();
                p.expect(b'}')?;
                break;
            }
        }
        match (descr, fortran_order, shape) {
            (Some(descr), Some(fortran_order), Some(shape)) => Ok(HeaderDict {
                descr,
                fortran_order,
                shape,
            }),
            _ => Err(Error::Format(
                "header must define descr, fortran_order and shape".into(),
            )),
        }
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "malformed NPY header: expected '{}' at byte {}",
                c as char, self.pos
            )))
        }
    }

    fn string(&mut self) -> Result<String> {
        let quote = match self.s.get(self.pos) {
            Some(&q) if q == b'\'' || q == b'"' => q,
            _ => {
                return Err(Error::Format(
                    "malformed NPY header: expected a string".into(),
                ))
            }
        };
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != quote {
            self.pos += 1;
        }
        let value = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
        self.expect(quote)?;
        Ok(value)
    }

    fn boolean(&mut self) -> Result<bool> {
        let rest = &self.s[self.pos..];
        if rest.starts_with(b"True") {
            self.pos += 4;
            Ok(true)
        } else if rest.starts_with(b"False") {
            self.pos += 5;
            Ok(false)
        } else {
            Err(Error::Format(
                "malformed NPY header: expected True/False".into(),
            ))
        }
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(b')') {
                return Ok(dims);
            }
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
            let dim = digits
                .parse()
                .map_err(|_| Error::Format("malformed NPY header: bad shape entry".into()))?;
            dims.push(dim);
            self.skip_ws();
            if !self.eat(b',') {
                self.skip_ws();
                self.expect(b')')?;
                return Ok(dims);
            }
        }
    }
}

fn read_file(path: &Path) -> Result<(TensorHeader, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, offset) = TensorHeader::decode(&bytes)?;
    let expected = header.element_count() * header.dtype.size();
    let data = &bytes[offset..];
    if data.len() != expected {
        return Err(Error::Format(format!(
            "{}: data block has {} bytes, shape {:?} needs {expected}",
            path.display(),
            data.len(),
            header.shape
        )));
    }
    Ok((header, data.to_vec()))
}

fn decode_floats(dtype: Dtype, data: &[u8]) -> Vec<f64> {
    match dtype {
        Dtype::F4 => data
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F8 => data
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
        _ => unreachable!("caller checks for float dtypes"),
    }
}

fn decode_ints(dtype: Dtype, data: &[u8]) -> Result<Vec<i64>> {
    let out = match dtype {
        Dtype::I1 => data.iter().map(|&b| b as i8 as i64).collect(),
        Dtype::U1 => data.iter().map(|&b| b as i64).collect(),
        Dtype::I2 => data
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]) as i64)
            .collect(),
        Dtype::U2 => data
            .chunks_exact(2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]) as i64)
            .collect(),
        Dtype::I4 => data
            .chunks_exact(4)
            .map(|b| i32::from_le_bytes(b.try_into().unwrap()) as i64)
            .collect(),
        Dtype::U4 => data
            .chunks_exact(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as i64)
            .collect(),
        Dtype::I8 => data
            .chunks_exact(8)
            .map(|b| i64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
        Dtype::U8 => data
            .chunks_exact(8)
            .map(|b| {
                let v = u64::from_le_bytes(b.try_into().unwrap());
                i64::try_from(v)
                    .map_err(|_| Error::UnsupportedTensor(format!("label {v} does not fit in i64")))
            })
            .collect::<Result<_>>()?,
        Dtype::F4 | Dtype::F8 => {
            return Err(Error::UnsupportedTensor(
                "label masks must have an integer dtype".into(),
            ))
        }
    };
    Ok(out)
}

/// Reads a `(C, N)` or `(C, H, W)` float tensor.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<FeatureMap> {
    let path = path.as_ref();
    let (header, data) = read_file(path)?;
    if !header.dtype.is_float() {
        return Err(Error::UnsupportedTensor(format!(
            "{}: feature tensors must be <f4 or <f8, got {}",
            path.display(),
            header.dtype.descr()
        )));
    }
    if header.element_count() == 0 {
        return Err(Error::Shape(format!(
            "{}: shape {:?} is empty",
            path.display(),
            header.shape
        )));
    }
    let values = decode_floats(header.dtype, &data);
    match *header.shape.as_slice() {
        [c, n] => FeatureMap::new(to_matrix(c, n, values)),
        [c, h, w] => FeatureMap::with_spatial(to_matrix(c, h * w, values), h, w),
        _ => Err(Error::Shape(format!(
            "{}: feature tensors must have rank 2 or 3, got shape {:?}",
            path.display(),
            header.shape
        ))),
    }
}

fn to_matrix(rows: usize, cols: usize, values: Vec<f64>) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols), values).expect("length checked against header")
}

/// Writes `f` as `(C, N)`, or `(C, H, W)` when it carries a spatial grid.
///
/// `F4` output rounds each value to the nearest `f32`.
pub fn write_tensor(f: &FeatureMap, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    let shape = match f.spatial() {
        Some((h, w)) => vec![f.channels(), h, w],
        None => vec![f.channels(), f.positions()],
    };
    let header = TensorHeader { dtype, shape };
    let mut out = header.encode();
    out.reserve(f.data().len() * dtype.size());
    match dtype {
        Dtype::F8 => f
            .data()
            .iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        Dtype::F4 => f
            .data()
            .iter()
            .for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
        other => {
            return Err(Error::UnsupportedTensor(format!(
                "feature tensors are written as <f4 or <f8, not {}",
                other.descr()
            )))
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Integer label tensor of shape `(N,)` or `(H, W)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    pub labels: Vec<i64>,
    pub shape: Vec<usize>,
}

impl LabelGrid {
    /// Maps the labels onto the positions of `f`.
    ///
    /// A `(N,)` grid must match the position count exactly. An `(H', W')`
    /// grid is resampled by nearest neighbor onto the map's `(H, W)` grid:
    /// target row `y` reads source row `((2y + 1)·H') / (2H)` (integer
    /// division), columns likewise. A map without a grid accepts an
    /// `(H', W')` mask only when `H'·W' = N`.
    pub fn align_to(&self, f: &FeatureMap) -> Result<RegionMask> {
        let n = f.positions();
        match (self.shape.as_slice(), f.spatial()) {
            ([len], _) if *len == n => RegionMask::new(self.labels.clone()),
            ([src_h, src_w], Some((h, w))) => {
                let (src_h, src_w) = (*src_h, *src_w);
                let mut out = Vec::with_capacity(n);
                for y in 0..h {
                    let sy = ((2 * y + 1) * src_h) / (2 * h);
                    for x in 0..w {
                        let sx = ((2 * x + 1) * src_w) / (2 * w);
                        out.push(self.labels[sy * src_w + sx]);
                    }
                }
                RegionMask::new(out)
            }
            ([src_h, src_w], None) if src_h * src_w == n => RegionMask::new(self.labels.clone()),
            _ => Err(Error::Shape(format!(
                "mask of shape {:?} cannot be aligned to {} feature positions",
                self.shape, n
            ))),
        }
    }
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelGrid> {
    let path = path.as_ref();
    let (header, data) = read_file(path)?;
    if !matches!(header.shape.len(), 1 | 2) || header.element_count() == 0 {
        return Err(Error::Shape(format!(
            "{}: masks must have shape (N,) or (H, W), got {:?}",
            path.display(),
            header.shape
        )));
    }
    Ok(LabelGrid {
        labels: decode_ints(header.dtype, &data)?,
        shape: header.shape,
    })
}

/// Writes labels as `<i8` with the given shape.
pub fn write_labels(grid: &LabelGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let expected: usize = grid.shape.iter().product();
    if expected != grid.labels.len() {
        return Err(Error::Shape(format!(
            "shape {:?} does not hold {} labels",
            grid.shape,
            grid.labels.len()
        )));
    }
    let header = TensorHeader {
        dtype: Dtype::I8,
        shape: grid.shape.clone(),
    };
    let mut out = header.encode();
    for l in &grid.labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
