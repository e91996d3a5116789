//! Reader and writer for the `.npy` array container.
//!
//! Writing always produces format version 1.0, little-endian, C order, with
//! the header padded by spaces so the payload starts on a 64-byte boundary.
//! Reading also accepts versions 2.0 and 3.0 (wider header length field).

use std::path::Path;

use ndarray::{ArrayD, IxDyn};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dtype {
    F32,
    F64,
    U8,
}

impl Dtype {
    pub fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
            Dtype::U8 => "|u1",
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
            Dtype::U8 => 1,
        }
    }

    fn from_descr(s: &str) -> Result<Self> {
        match s {
            "<f4" => Ok(Dtype::F32),
            "<f8" => Ok(Dtype::F64),
            "|u1" | "<u1" | ">u1" | "u1" => Ok(Dtype::U8),
            other => Err(Error::UnsupportedDtype(other.to_string())),
        }
    }
}

/// A dense array of one of the supported element types.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    F32(ArrayD<f32>),
    F64(ArrayD<f64>),
    U8(ArrayD<u8>),
}

impl ArrayData {
    pub fn dtype(&self) -> Dtype {
        match self {
            ArrayData::F32(_) => Dtype::F32,
            ArrayData::F64(_) => Dtype::F64,
            ArrayData::U8(_) => Dtype::U8,
        }
    }

    pub fn shape(&self) -> &[usize] {
        match self {
            ArrayData::F32(a) => a.shape(),
            ArrayData::F64(a) => a.shape(),
            ArrayData::U8(a) => a.shape(),
        }
    }

    /// Values widened to `f64` (exact for every supported dtype).
    pub fn to_f64(&self) -> ArrayD<f64> {
        match self {
            ArrayData::F32(a) => a.mapv(f64::from),
            ArrayData::F64(a) => a.clone(),
            ArrayData::U8(a) => a.mapv(f64::from),
        }
    }
}

impl From<ArrayD<f32>> for ArrayData {
    fn from(a: ArrayD<f32>) -> Self {
        ArrayData::F32(a)
    }
}

impl From<ArrayD<f64>> for ArrayData {
    fn from(a: ArrayD<f64>) -> Self {
        ArrayData::F64(a)
    }
}

impl From<ArrayD<u8>> for ArrayData {
    fn from(a: ArrayD<u8>) -> Self {
        ArrayData::U8(a)
    }
}

/// Header text for a version 1.0 file, padding and trailing newline
/// included.
pub fn header_text(dtype: Dtype, shape: &[usize]) -> String {
    let dims = match shape {
        [n] => format!("({n},)"),
        _ => format!("({})", shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")),
    };
    let mut h = format!("{{'descr': '{}', 'fortran_order': False, 'shape': {dims}, }}", dtype.descr());
    // magic (6) + version (2) + length (2) + header + newline
    let unpadded = 10 + h.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    h.extend(std::iter::repeat_n(' ', pad));
    h.push('\n');
    h
}

pub fn encode(a: &ArrayData) -> Result<Vec<u8>> {
    let shape = a.shape();
    if shape.is_empty() {
        return Err(Error::ZeroRank);
    }
    let header = header_text(a.dtype(), shape);
    let hlen = u16::try_from(header.len()).map_err(|_| Error::MalformedHeader("header longer than 65535 bytes".into()))?;
    let count: usize = shape.iter().product();
    let mut out = Vec::with_capacity(10 + header.len() + count * a.dtype().size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&hlen.to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    // `iter` walks in logical row-major order whatever the memory layout
    match a {
        ArrayData::F32(x) => x.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        ArrayData::F64(x) => x.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        ArrayData::U8(x) => out.extend(x.iter().copied()),
    }
    Ok(out)
}

struct Header {
    dtype: Dtype,
    shape: Vec<usize>,
}

pub fn decode(bytes: &[u8]) -> Result<ArrayData> {
    if bytes.len() < 8 || &bytes[..6] != MAGIC {
        return Err(Error::BadMagic);
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (hlen, start) = match (major, minor) {
        (1, 0) => {
            let b = bytes.get(8..10).ok_or(Error::MalformedHeader("missing header length".into()))?;
            (u16::from_le_bytes([b[0], b[1]]) as usize, 10)
        }
        (2, 0) | (3, 0) => {
            let b = bytes.get(8..12).ok_or(Error::MalformedHeader("missing header length".into()))?;
            (u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize, 12)
        }
        _ => return Err(Error::UnsupportedVersion(major, minor)),
    };
    let raw = bytes
        .get(start..start + hlen)
        .ok_or_else(|| Error::MalformedHeader("header runs past end of file".into()))?;
    let text = std::str::from_utf8(raw).map_err(|_| Error::MalformedHeader("header is not valid text".into()))?;
    let header = parse_header(text)?;
    let payload = &bytes[start + hlen..];
    let count = header
        .shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::MalformedHeader("shape overflows".into()))?;
    let expected = count * header.dtype.size();
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let shape = IxDyn(&header.shape);
    let make = |e| Error::MalformedHeader(format!("{e}"));
    Ok(match header.dtype {
        Dtype::F32 => ArrayData::F32(
            ArrayD::from_shape_vec(
                shape,
                payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect(),
            )
            .map_err(make)?,
        ),
        Dtype::F64 => ArrayData::F64(
            ArrayD::from_shape_vec(
                shape,
                payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
            )
            .map_err(make)?,
        ),
        Dtype::U8 => ArrayData::U8(ArrayD::from_shape_vec(shape, payload.to_vec()).map_err(make)?),
    })
}

/// Parses the Python-literal dictionary of the header.
fn parse_header(text: &str) -> Result<Header> {
    let mut p = Lexer { s: text.trim_end().as_bytes(), i: 0 };
    let mut descr = None;
    let mut fortran = None;
    let mut shape = None;
    p.expect(b'{')?;
    loop {
        p.skip_ws();
        if p.eat(b'}') {
            break;
        }
        let key = p.string()?;
        p.expect(b':')?;
        match key.as_str() {
            "descr" => descr = Some(p.string()?),
            "fortran_order" => fortran = Some(p.boolean()?),
            "shape" => shape = Some(p.tuple()?),
            other => return Err(Error::MalformedHeader(format!("unexpected key '{other}'"))),
        }
        p.skip_ws();
        if !p.eat(b',') {
            p.expect(b'}')?;
            break;
        }
    }
    p.skip_ws();
    if p.i != p.s.len() {
        return Err(Error::MalformedHeader("trailing characters after dictionary".into()));
    }
    let missing = |k: &str| Error::MalformedHeader(format!("missing key '{k}'"));
    let dtype = Dtype::from_descr(&descr.ok_or_else(|| missing("descr"))?)?;
    if fortran.ok_or_else(|| missing("fortran_order"))? {
        return Err(Error::FortranOrder);
    }
    let shape = shape.ok_or_else(|| missing("shape"))?;
    if shape.is_empty() {
        return Err(Error::ZeroRank);
    }
    Ok(Header { dtype, shape })
}

struct Lexer<'a> {
    s: &'a [u8],
    i: usize,
}

impl Lexer<'_> {
    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.s.get(self.i) == Some(&c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::MalformedHeader(format!("expected '{}' at byte {}", c as char, self.i)))
        }
    }

    fn string(&mut self) -> Result<String> {
        self.skip_ws();
        let q = match self.s.get(self.i) {
            Some(&q @ (b'\'' | b'"')) => q,
            _ => return Err(Error::MalformedHeader(format!("expected string at byte {}", self.i))),
        };
        let start = self.i + 1;
        let end = self.s[start..]
            .iter()
            .position(|&c| c == q)
            .ok_or_else(|| Error::MalformedHeader("unterminated string".into()))?
            + start;
        self.i = end + 1;
        Ok(String::from_utf8_lossy(&self.s[start..end]).into_owned())
    }

    fn boolean(&mut self) -> Result<bool> {
        self.skip_ws();
        for (word, v) in [(&b"True"[..], true), (&b"False"[..], false)] {
            if self.s[self.i..].starts_with(word) {
                self.i += word.len();
                return Ok(v);
            }
        }
        Err(Error::MalformedHeader(format!("expected True or False at byte {}", self.i)))
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            if self.eat(b')') {
                return Ok(dims);
            }
            self.skip_ws();
            let start = self.i;
            while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                self.i += 1;
            }
            // tolerate the `L` suffix of very old writers
            let digits = std::str::from_utf8(&self.s[start..self.i]).unwrap();
            let _ = self.eat(b'L');
            let d = digits
                .parse()
                .map_err(|_| Error::MalformedHeader(format!("bad dimension at byte {start}")))?;
            dims.push(d);
            if !self.eat(b',') {
                self.expect(b')')?;
                return Ok(dims);
            }
        }
    }
}

pub fn read_array(path: &Path) -> Result<ArrayData> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).at(path))?;
    decode(&bytes).map_err(|e| e.at(path))
}

pub fn write_array(a: &ArrayData, path: &Path) -> Result<()> {
    let bytes = encode(a)?;
    std::fs::write(path, bytes).map_err(|e| Error::from(e).at(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array2, Array3};
    use proptest::prelude::*;

    #[test]
    fn header_of_unit_cube_is_byte_exact() {
        let a = ArrayData::F64(ArrayD::zeros(IxDyn(&[1, 1, 1])));
        let bytes = encode(&a).unwrap();
        let dict = b"{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1, 1), }";
        assert_eq!(&bytes[..6], b"\x93NUMPY");
        assert_eq!(&bytes[6..8], &[1, 0]);
        assert_eq!(u16::from_le_bytes([bytes[8], bytes[9]]), 118);
        assert_eq!(&bytes[10..10 + dict.len()], dict);
        assert!(bytes[10 + dict.len()..127].iter().all(|&b| b == b' '));
        assert_eq!(bytes[127], b'\n');
        assert_eq!(bytes.len(), 128 + 8);
    }

    #[test]
    fn one_dimensional_shape_has_trailing_comma() {
        assert!(header_text(Dtype::U8, &[5]).contains("'shape': (5,), }"));
    }

    #[test]
    fn payload_starts_aligned() {
        for shape in [&[1usize][..], &[3, 4], &[2, 3, 4, 5], &[123456, 7, 8]] {
            assert_eq!((10 + header_text(Dtype::F32, shape).len()) % 64, 0);
        }
    }

    #[test]
    fn truncated_payload_detected() {
        let a = ArrayData::F64(Array2::<f64>::zeros((2, 3)).into_dyn());
        let bytes = encode(&a).unwrap();
        let cut = &bytes[..bytes.len() - 8];
        match decode(cut) {
            Err(Error::TruncatedPayload { expected: 48, found: 40 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(decode(b"\x93NUMPX\x01\x00"), Err(Error::BadMagic)));
        let mut bytes = encode(&ArrayData::U8(ArrayD::zeros(IxDyn(&[2])))).unwrap();
        bytes[6] = 9;
        assert!(matches!(decode(&bytes), Err(Error::UnsupportedVersion(9, 0))));

        let with_header = |dict: &str| {
            let mut out = MAGIC.to_vec();
            out.extend_from_slice(&[1, 0]);
            out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
            out.extend_from_slice(dict.as_bytes());
            out
        };
        let fortran = with_header("{'descr': '<f8', 'fortran_order': True, 'shape': (1,), }\n");
        assert!(matches!(decode(&fortran), Err(Error::FortranOrder)));
        let complex = with_header("{'descr': '<c16', 'fortran_order': False, 'shape': (1,), }\n");
        assert!(matches!(decode(&complex), Err(Error::UnsupportedDtype(d)) if d == "<c16"));
        let scalar = with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (), }\n");
        assert!(matches!(decode(&scalar), Err(Error::ZeroRank)));
        let garbage = with_header("{'descr': '<f8', 'shape': [1]}\n");
        assert!(matches!(decode(&garbage), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn rank_zero_rejected_on_write() {
        let a = ArrayData::F64(ArrayD::zeros(IxDyn(&[])));
        assert!(matches!(encode(&a), Err(Error::ZeroRank)));
    }

    #[test]
    fn keys_in_any_order_and_version_two() {
        let dict = "{'shape': (2, 2), 'fortran_order': False, 'descr': '|u1'}\n";
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&[2, 0]);
        out.extend_from_slice(&(dict.len() as u32).to_le_bytes());
        out.extend_from_slice(dict.as_bytes());
        out.extend_from_slice(&[1, 2, 3, 4]);
        let a = decode(&out).unwrap();
        assert_eq!(a, ArrayData::U8(ndarray::arr2(&[[1u8, 2], [3, 4]]).into_dyn()));
    }

    #[test]
    fn f32_and_f64_keep_their_dtype() {
        let v = [0.1f64, 0.5, 1.0 / 3.0];
        let a64 = ArrayData::F64(ndarray::arr1(&v).into_dyn());
        let a32 = ArrayData::F32(ndarray::arr1(&v.map(|x| x as f32)).into_dyn());
        assert_eq!(decode(&encode(&a64).unwrap()).unwrap(), a64);
        assert_eq!(decode(&encode(&a32).unwrap()).unwrap(), a32);
        assert_eq!(decode(&encode(&a32).unwrap()).unwrap().dtype(), Dtype::F32);
    }

    #[test]
    fn non_standard_layout_written_row_major() {
        let a = Array3::from_shape_fn((2, 3, 4), |(i, j, k)| (i * 100 + j * 10 + k) as f64);
        let t = a.clone().reversed_axes();
        let back = decode(&encode(&ArrayData::F64(t.clone().into_dyn())).unwrap()).unwrap();
        assert_eq!(back, ArrayData::F64(t.as_standard_layout().into_owned().into_dyn()));
    }

    proptest! {
        #[test]
        fn f64_round_trip_is_bit_exact(dims in prop::collection::vec(1usize..5, 3), bits in prop::collection::vec(any::<u64>(), 64)) {
            let n: usize = dims.iter().product();
            let vals: Vec<f64> = bits.iter().cycle().take(n).map(|&b| f64::from_bits(b)).collect();
            let a = ArrayD::from_shape_vec(IxDyn(&dims), vals).unwrap();
            let back = decode(&encode(&ArrayData::F64(a.clone())).unwrap()).unwrap();
            let ArrayData::F64(b) = back else { panic!("dtype changed") };
            prop_assert_eq!(b.shape(), a.shape());
            prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
