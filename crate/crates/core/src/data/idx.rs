use std::io::Write;
use std::path::Path;

use super::images::ImageSet;
use crate::error::{Error, Result};

/// An unsigned-byte IDX array: big-endian magic `0x0000_08nn`, `nn` u32
/// dimension sizes, then the raw bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

const LABELS_MAGIC: u32 = 0x0000_0801;
const IMAGES_MAGIC: u32 = 0x0000_0803;

pub fn read_idx(bytes: &[u8]) -> Result<IdxArray> {
    let be32 = |at: usize| -> Result<u32> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| Error::Format("truncated IDX header".into()))
    };
    let magic = be32(0)?;
    let ndim = match magic {
        LABELS_MAGIC => 1,
        IMAGES_MAGIC => 3,
        other => return Err(Error::Format(format!("bad IDX magic {other:#010x}"))),
    };
    let dims = (0..ndim)
        .map(|k| be32(4 + 4 * k).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let header = 4 + 4 * ndim;
    let len: usize = dims.iter().product();
    let payload = &bytes[header..];
    if payload.len() < len {
        return Err(Error::Format(format!(
            "truncated IDX payload: {} of {len} bytes",
            payload.len()
        )));
    }
    Ok(IdxArray {
        dims,
        data: payload[..len].to_vec(),
    })
}

pub fn write_idx(path: &Path, array: &IdxArray) -> Result<()> {
    let magic = match array.dims.len() {
        1 => LABELS_MAGIC,
        3 => IMAGES_MAGIC,
        n => return Err(Error::config(format!("IDX writer supports 1 or 3 dimensions, not {n}"))),
    };
    if array.dims.iter().product::<usize>() != array.data.len() {
        return Err(Error::config("IDX dimensions do not match payload length"));
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&magic.to_be_bytes())?;
    for &d in &array.dims {
        f.write_all(&(d as u32).to_be_bytes())?;
    }
    f.write_all(&array.data)?;
    f.flush()?;
    Ok(())
}

/// Reads an IDX image file alone; labels are all zero.
pub fn load_idx_images(path: &Path) -> Result<ImageSet> {
    let arr = read_idx(&std::fs::read(path)?)?;
    if arr.dims.len() != 3 {
        return Err(Error::Format("expected a 3-dimensional IDX image file".into()));
    }
    let (n, h, w) = (arr.dims[0], arr.dims[1], arr.dims[2]);
    let pixels = arr.data.iter().map(|&b| b as f64 / 255.0).collect();
    ImageSet::new(h, w, 1, pixels, vec![0; n])
}

/// Reads an IDX image file and its label file; pixels are scaled to [0, 1].
pub fn load_idx(images: &Path, labels: &Path) -> Result<ImageSet> {
    let mut set = load_idx_images(images)?;
    let lab = read_idx(&std::fs::read(labels)?)?;
    if lab.dims.len() != 1 {
        return Err(Error::Format("expected a 1-dimensional IDX label file".into()));
    }
    if lab.dims[0] != set.len() {
        return Err(Error::dim("IDX labels", set.len(), lab.dims[0]));
    }
    set.labels = lab.data.iter().map(|&b| b as usize).collect();
    Ok(set)
}
