//! Bundles of named arrays stored as a zip archive of `.npy` members.
//! Members are written uncompressed; deflated members are read too.

use std::io::{Cursor, Read, Write};
use std::path::Path;

use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipArchive, ZipWriter};

use super::npy::{self, ArrayData};
use crate::error::{Error, Result};

fn archive_err(e: impl std::fmt::Display) -> Error {
    Error::Archive(e.to_string())
}

/// Encodes `(name, array)` pairs in the given order. Names get a `.npy`
/// suffix inside the archive.
pub fn encode_bundle(arrays: &[(String, ArrayData)]) -> Result<Vec<u8>> {
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    // fixed timestamp keeps archives byte-reproducible
    let opts = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Stored)
        .last_modified_time(zip::DateTime::default());
    for (name, a) in arrays {
        zip.start_file(format!("{name}.npy"), opts).map_err(archive_err)?;
        zip.write_all(&npy::encode(a)?)?;
    }
    Ok(zip.finish().map_err(archive_err)?.into_inner())
}

/// Decodes every member, in archive order, stripping the `.npy` suffix.
pub fn decode_bundle(bytes: &[u8]) -> Result<Vec<(String, ArrayData)>> {
    let mut zip = ZipArchive::new(Cursor::new(bytes)).map_err(archive_err)?;
    let mut out = Vec::with_capacity(zip.len());
    for i in 0..zip.len() {
        let mut file = zip.by_index(i).map_err(archive_err)?;
        let name = file.name().to_string();
        let mut buf = Vec::with_capacity(file.size() as usize);
        file.read_to_end(&mut buf)?;
        let key = name.strip_suffix(".npy").unwrap_or(&name).to_string();
        out.push((key, npy::decode(&buf)?));
    }
    Ok(out)
}

pub fn read_bundle(path: &Path) -> Result<Vec<(String, ArrayData)>> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).at(path))?;
    decode_bundle(&bytes).map_err(|e| e.at(path))
}

pub fn write_bundle(arrays: &[(String, ArrayData)], path: &Path) -> Result<()> {
    std::fs::write(path, encode_bundle(arrays)?).map_err(|e| Error::from(e).at(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};

    fn sample() -> Vec<(String, ArrayData)> {
        vec![
            ("heatmap".into(), ArrayData::F64(arr2(&[[0.25, 0.75]]).into_dyn())),
            ("mask".into(), ArrayData::U8(arr1(&[0u8, 1, 1]).into_dyn())),
        ]
    }

    #[test]
    fn round_trip_keeps_order_and_values() {
        let bytes = encode_bundle(&sample()).unwrap();
        assert_eq!(decode_bundle(&bytes).unwrap(), sample());
        assert_eq!(encode_bundle(&sample()).unwrap(), bytes);
    }

    #[test]
    fn deflated_members_are_read() {
        let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
        let opts = SimpleFileOptions::default().compression_method(CompressionMethod::Deflated);
        zip.start_file("x.npy", opts).unwrap();
        let a = ArrayData::F32(arr1(&[1.5f32; 100]).into_dyn());
        zip.write_all(&npy::encode(&a).unwrap()).unwrap();
        let bytes = zip.finish().unwrap().into_inner();
        assert_eq!(decode_bundle(&bytes).unwrap(), vec![("x".to_string(), a)]);
    }

    #[test]
    fn not_a_zip() {
        assert!(matches!(decode_bundle(b"plain text"), Err(Error::Archive(_))));
    }
}
