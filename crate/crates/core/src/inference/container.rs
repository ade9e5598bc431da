//! Binary container for posterior approximations.
//!
//! ```text
//! file    := "BMAF" u32:version body
//! body    := u8:tag payload
//! tag 0   Dirac       layout u32:count  f64[count·d]
//! tag 1   Factorized  layout f64[d]:mean f64[d]:log_std
//! tag 2   Swag        layout u32:K  f64[d]:mean f64[d]:diag_var f64[K·d]:deviations
//! tag 3   Mixture     u32:count body[count]
//! layout  := u32:n_layers (u32:in u32:out u8:has_bias)[n_layers]
//! ```
//! All integers and floats are little-endian.

use std::path::Path;

use super::posterior::PosteriorApprox;
use super::svi::FactorizedGaussian;
use super::swag::SwagGaussian;
use crate::error::{Error, Result};
use crate::nn::{Layout, ParamVector};

pub const MAGIC: &[u8; 4] = b"BMAF";
pub const VERSION: u32 = 1;

const TAG_DIRAC: u8 = 0;
const TAG_FACTORIZED: u8 = 1;
const TAG_SWAG: u8 = 2;
const TAG_MIXTURE: u8 = 3;

pub fn encode(posterior: &PosteriorApprox) -> Result<Vec<u8>> {
    posterior.validate()?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    encode_body(posterior, &mut out)?;
    Ok(out)
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_layout(out: &mut Vec<u8>, layout: &Layout) -> Result<()> {
    put_u32(out, layout.layers().len())?;
    for l in layout.layers() {
        put_u32(out, l.inputs)?;
        put_u32(out, l.outputs)?;
        out.push(u8::from(l.bias_offset.is_some()));
    }
    Ok(())
}

fn encode_body(p: &PosteriorApprox, out: &mut Vec<u8>) -> Result<()> {
    match p {
        PosteriorApprox::DiracEnsemble(members) => {
            out.push(TAG_DIRAC);
            put_layout(out, members[0].layout())?;
            put_u32(out, members.len())?;
            for m in members {
                put_f64s(out, m.values());
            }
        }
        PosteriorApprox::Factorized(q) => {
            out.push(TAG_FACTORIZED);
            put_layout(out, q.mean.layout())?;
            put_f64s(out, q.mean.values());
            put_f64s(out, &q.log_std);
        }
        PosteriorApprox::Swag(g) => {
            out.push(TAG_SWAG);
            put_layout(out, g.mean.layout())?;
            put_u32(out, g.rank)?;
            put_f64s(out, g.mean.values());
            put_f64s(out, &g.diag_var);
            for col in &g.deviations {
                put_f64s(out, col);
            }
        }
        PosteriorApprox::Mixture(parts) => {
            out.push(TAG_MIXTURE);
            put_u32(out, parts.len())?;
            for part in parts {
                encode_body(part, out)?;
            }
        }
    }
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated container at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("payload size overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    fn layout(&mut self) -> Result<Layout> {
        let n = self.u32()?;
        if n == 0 {
            return Err(Error::Format("layout with no layers".into()));
        }
        let mut shapes = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let inputs = self.u32()?;
            let outputs = self.u32()?;
            let bias = match self.u8()? {
                0 => false,
                1 => true,
                b => return Err(Error::Format(format!("bad bias flag {b}"))),
            };
            shapes.push((inputs, outputs, bias));
        }
        Ok(Layout::from_shapes(&shapes))
    }
}

pub fn decode(bytes: &[u8]) -> Result<PosteriorApprox> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not a BMAF container".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let p = decode_body(&mut r, 0)?;
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    p.validate().map_err(|e| Error::Format(e.to_string()))?;
    Ok(p)
}

fn decode_body(r: &mut Reader<'_>, depth: usize) -> Result<PosteriorApprox> {
    match r.u8()? {
        TAG_DIRAC => {
            let layout = r.layout()?;
            let count = r.u32()?;
            let members = (0..count)
                .map(|_| ParamVector::new(r.f64s(layout.len())?, layout.clone()))
                .collect::<Result<_>>()?;
            Ok(PosteriorApprox::DiracEnsemble(members))
        }
        TAG_FACTORIZED => {
            let layout = r.layout()?;
            let mean = ParamVector::new(r.f64s(layout.len())?, layout.clone())?;
            let log_std = r.f64s(layout.len())?;
            Ok(PosteriorApprox::Factorized(FactorizedGaussian { mean, log_std }))
        }
        TAG_SWAG => {
            let layout = r.layout()?;
            let rank = r.u32()?;
            let mean = ParamVector::new(r.f64s(layout.len())?, layout.clone())?;
            let diag_var = r.f64s(layout.len())?;
            let deviations = (0..rank).map(|_| r.f64s(layout.len())).collect::<Result<_>>()?;
            Ok(PosteriorApprox::Swag(SwagGaussian { mean, diag_var, deviations, rank }))
        }
        TAG_MIXTURE if depth == 0 => {
            let count = r.u32()?;
            let parts = (0..count).map(|_| decode_body(r, depth + 1)).collect::<Result<_>>()?;
            Ok(PosteriorApprox::Mixture(parts))
        }
        TAG_MIXTURE => Err(Error::Format("nested mixture".into())),
        t => Err(Error::Format(format!("unknown variant tag {t}"))),
    }
}

pub fn write_posterior(path: impl AsRef<Path>, posterior: &PosteriorApprox) -> Result<()> {
    std::fs::write(path, encode(posterior)?)?;
    Ok(())
}

pub fn read_posterior(path: impl AsRef<Path>) -> Result<PosteriorApprox> {
    decode(&std::fs::read(path)?)
}
