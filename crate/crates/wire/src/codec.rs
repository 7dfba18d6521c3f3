//! Byte encodings for ciphertexts, public keys, layouts, and models.
//!
//! Multi-byte integers are little-endian; scales are IEEE-754 binary64 bit
//! patterns; residue vectors are 8-byte words. Every `encode_*` /
//! `decode_*` pair round-trips bit-exactly. There is intentionally no
//! encoder for secret keys.

use fedhe_core::ckks::{Ciphertext, CkksParams, PublicKey};
use fedhe_core::pack::{ArrayDescriptor, ModelLayout, NamedArray, PackedModel};
use fedhe_core::ring::{Domain, RnsPolynomial};

use crate::{Result, WireError};

/// Cursor over an input buffer that reports exactly how much is missing.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize, context: &'static str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(WireError::Truncated {
                needed: n - self.remaining(),
                context,
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self, context: &'static str) -> Result<u8> {
        Ok(self.take(1, context)?[0])
    }

    pub fn u16(&mut self, context: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, context)?.try_into().unwrap()))
    }

    pub fn u32(&mut self, context: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, context)?.try_into().unwrap()))
    }

    pub fn u64(&mut self, context: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, context)?.try_into().unwrap()))
    }

    pub fn f64(&mut self, context: &'static str) -> Result<f64> {
        Ok(f64::from_bits(self.u64(context)?))
    }

    pub fn bytes(&mut self, n: usize, context: &'static str) -> Result<&'a [u8]> {
        self.take(n, context)
    }

    pub fn u64_vec(&mut self, n: usize, context: &'static str) -> Result<Vec<u64>> {
        let raw = self.take(n * 8, context)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn finish(&self, context: &'static str) -> Result<()> {
        if self.remaining() == 0 {
            Ok(())
        } else {
            Err(WireError::Malformed {
                context,
                detail: format!("{} trailing bytes", self.remaining()),
            })
        }
    }
}

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    put_u64(out, v.to_bits());
}

fn put_poly(out: &mut Vec<u8>, poly: &RnsPolynomial) {
    for residue in poly.residues() {
        for &word in residue {
            put_u64(out, word);
        }
    }
}

fn read_poly(
    r: &mut Reader,
    params: &CkksParams,
    level: usize,
    context: &'static str,
) -> Result<RnsPolynomial> {
    let n = params.ring().degree();
    let mut residues = Vec::with_capacity(level + 1);
    for _ in 0..=level {
        residues.push(r.u64_vec(n, context)?);
    }
    RnsPolynomial::from_residues(params.ring(), residues, Domain::Evaluation)
        .map_err(|e| WireError::ParamsMismatch(e.to_string()))
}

/// Ciphertext encoding: `[level u8][scale f64][c0 residues][c1 residues]`.
pub fn serialize_ciphertext(ct: &Ciphertext) -> Vec<u8> {
    let (c0, c1) = ct.components();
    let n = c0.params().degree();
    let mut out = Vec::with_capacity(1 + 8 + 2 * (ct.level() + 1) * n * 8);
    out.push(ct.level() as u8);
    put_f64(&mut out, ct.scale());
    put_poly(&mut out, c0);
    put_poly(&mut out, c1);
    out
}

pub fn deserialize_ciphertext(bytes: &[u8], params: &CkksParams) -> Result<Ciphertext> {
    let mut r = Reader::new(bytes);
    let level = r.u8("ciphertext level")? as usize;
    if level >= params.ring().chain_len() {
        return Err(WireError::ParamsMismatch(format!(
            "level {level} outside a chain of {} primes",
            params.ring().chain_len()
        )));
    }
    let scale = r.f64("ciphertext scale")?;
    if !scale.is_finite() || scale <= 0.0 {
        return Err(WireError::Malformed {
            context: "ciphertext scale",
            detail: format!("{scale}"),
        });
    }
    let expected = 2 * (level + 1) * params.ring().degree() * 8;
    if r.remaining() != expected {
        return Err(WireError::ParamsMismatch(format!(
            "{} residue bytes but the ring degree/chain imply {expected}",
            r.remaining()
        )));
    }
    let c0 = read_poly(&mut r, params, level, "ciphertext c0")?;
    let c1 = read_poly(&mut r, params, level, "ciphertext c1")?;
    r.finish("ciphertext")?;
    Ciphertext::from_parts(c0, c1, scale, params.slot_count())
        .map_err(|e| WireError::ParamsMismatch(e.to_string()))
}

/// Public-key encoding: `[level u8][b residues][a residues]`.
pub fn serialize_public_key(pk: &PublicKey) -> Vec<u8> {
    let (b, a) = pk.components();
    let mut out = Vec::new();
    out.push(b.level() as u8);
    put_poly(&mut out, b);
    put_poly(&mut out, a);
    out
}

pub fn deserialize_public_key(bytes: &[u8], params: &CkksParams) -> Result<PublicKey> {
    let mut r = Reader::new(bytes);
    let level = r.u8("public key level")? as usize;
    if level >= params.ring().chain_len() {
        return Err(WireError::ParamsMismatch(format!(
            "level {level} outside a chain of {} primes",
            params.ring().chain_len()
        )));
    }
    let b = read_poly(&mut r, params, level, "public key b")?;
    let a = read_poly(&mut r, params, level, "public key a")?;
    r.finish("public key")?;
    Ok(PublicKey::from_components(b, a))
}

fn put_descriptor(out: &mut Vec<u8>, d: &ArrayDescriptor) {
    put_u16(out, d.name.len() as u16);
    out.extend_from_slice(d.name.as_bytes());
    out.push(d.shape.len() as u8);
    for &dim in &d.shape {
        put_u64(out, dim as u64);
    }
    put_u64(out, d.elem_count as u64);
    put_u32(out, d.ciphertext_index as u32);
    put_u32(out, d.slot_offset as u32);
}

fn read_descriptor(r: &mut Reader) -> Result<ArrayDescriptor> {
    let name_len = r.u16("descriptor name length")? as usize;
    let name = String::from_utf8(r.bytes(name_len, "descriptor name")?.to_vec()).map_err(|e| {
        WireError::Malformed {
            context: "descriptor name",
            detail: e.to_string(),
        }
    })?;
    let ndims = r.u8("descriptor rank")? as usize;
    let mut shape = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        shape.push(r.u64("descriptor dim")? as usize);
    }
    Ok(ArrayDescriptor {
        name,
        shape,
        elem_count: r.u64("descriptor element count")? as usize,
        ciphertext_index: r.u32("descriptor ciphertext index")? as usize,
        slot_offset: r.u32("descriptor slot offset")? as usize,
    })
}

/// Layout encoding:
/// `[slots u32][total u64][count u32]` followed by the descriptors.
pub fn serialize_layout(layout: &ModelLayout) -> Vec<u8> {
    let mut out = Vec::new();
    put_u32(&mut out, layout.slots_per_ciphertext as u32);
    put_u64(&mut out, layout.total_parameters as u64);
    put_u32(&mut out, layout.arrays.len() as u32);
    for d in &layout.arrays {
        put_descriptor(&mut out, d);
    }
    out
}

fn read_layout(r: &mut Reader) -> Result<ModelLayout> {
    let slots_per_ciphertext = r.u32("layout slots")? as usize;
    let total_parameters = r.u64("layout total")? as usize;
    let count = r.u32("layout array count")? as usize;
    if count > 1 << 20 {
        return Err(WireError::Malformed {
            context: "layout array count",
            detail: format!("{count}"),
        });
    }
    let mut arrays = Vec::with_capacity(count);
    for _ in 0..count {
        arrays.push(read_descriptor(r)?);
    }
    Ok(ModelLayout {
        arrays,
        total_parameters,
        slots_per_ciphertext,
    })
}

pub fn deserialize_layout(bytes: &[u8]) -> Result<ModelLayout> {
    let mut r = Reader::new(bytes);
    let layout = read_layout(&mut r)?;
    r.finish("layout")?;
    Ok(layout)
}

/// Packed-model encoding: layout, ciphertext count, then length-prefixed
/// ciphertexts.
pub fn serialize_packed_model(model: &PackedModel) -> Vec<u8> {
    let mut out = serialize_layout(&model.layout);
    put_u32(&mut out, model.ciphertexts.len() as u32);
    for ct in &model.ciphertexts {
        let bytes = serialize_ciphertext(ct);
        put_u64(&mut out, bytes.len() as u64);
        out.extend_from_slice(&bytes);
    }
    out
}

pub fn deserialize_packed_model(bytes: &[u8], params: &CkksParams) -> Result<PackedModel> {
    let mut r = Reader::new(bytes);
    let layout = read_layout(&mut r)?;
    let count = r.u32("packed ciphertext count")? as usize;
    if count != layout.ciphertext_count() {
        return Err(WireError::ParamsMismatch(format!(
            "{count} ciphertexts but the layout implies {}",
            layout.ciphertext_count()
        )));
    }
    let mut ciphertexts = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u64("packed ciphertext length")? as usize;
        let ct_bytes = r.bytes(len, "packed ciphertext body")?;
        ciphertexts.push(deserialize_ciphertext(ct_bytes, params)?);
    }
    r.finish("packed model")?;
    let packed = PackedModel {
        layout,
        ciphertexts,
    };
    packed
        .validate()
        .map_err(|e| WireError::ParamsMismatch(e.to_string()))?;
    Ok(packed)
}

/// Plain (unencrypted) model encoding: named arrays with raw f64 data.
pub fn serialize_plain_model(model: &[NamedArray]) -> Vec<u8> {
    let mut out = Vec::new();
    put_u32(&mut out, model.len() as u32);
    for array in model {
        put_u16(&mut out, array.name.len() as u16);
        out.extend_from_slice(array.name.as_bytes());
        out.push(array.shape.len() as u8);
        for &dim in &array.shape {
            put_u64(&mut out, dim as u64);
        }
        for &x in &array.data {
            put_f64(&mut out, x);
        }
    }
    out
}

pub fn deserialize_plain_model(bytes: &[u8]) -> Result<Vec<NamedArray>> {
    let mut r = Reader::new(bytes);
    let count = r.u32("plain model array count")? as usize;
    if count > 1 << 20 {
        return Err(WireError::Malformed {
            context: "plain model array count",
            detail: format!("{count}"),
        });
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.u16("array name length")? as usize;
        let name =
            String::from_utf8(r.bytes(name_len, "array name")?.to_vec()).map_err(|e| {
                WireError::Malformed {
                    context: "array name",
                    detail: e.to_string(),
                }
            })?;
        let ndims = r.u8("array rank")? as usize;
        let mut shape = Vec::with_capacity(ndims);
        for _ in 0..ndims {
            shape.push(r.u64("array dim")? as usize);
        }
        let elem_count: usize = shape.iter().product();
        if elem_count > r.remaining() / 8 {
            return Err(WireError::Truncated {
                needed: elem_count * 8 - r.remaining(),
                context: "array data",
            });
        }
        let mut data = Vec::with_capacity(elem_count);
        for _ in 0..elem_count {
            data.push(r.f64("array value")?);
        }
        out.push(
            NamedArray::new(name, shape, data)
                .map_err(|e| WireError::ParamsMismatch(e.to_string()))?,
        );
    }
    r.finish("plain model")?;
    Ok(out)
}

/// A model payload: either raw arrays (plaintext mode) or an encrypted
/// packed model. The tag byte keeps the two modes on one message set.
#[derive(Debug, Clone)]
pub enum ModelBlob {
    Plain(Vec<NamedArray>),
    Encrypted(PackedModel),
}

const BLOB_PLAIN: u8 = 0;
const BLOB_ENCRYPTED: u8 = 1;

impl ModelBlob {
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            ModelBlob::Plain(model) => {
                let mut out = vec![BLOB_PLAIN];
                out.extend_from_slice(&serialize_plain_model(model));
                out
            }
            ModelBlob::Encrypted(packed) => {
                let mut out = vec![BLOB_ENCRYPTED];
                out.extend_from_slice(&serialize_packed_model(packed));
                out
            }
        }
    }

    pub fn from_bytes(bytes: &[u8], params: &CkksParams) -> Result<Self> {
        let (tag, body) = bytes.split_first().ok_or(WireError::Truncated {
            needed: 1,
            context: "model blob tag",
        })?;
        match *tag {
            BLOB_PLAIN => Ok(ModelBlob::Plain(deserialize_plain_model(body)?)),
            BLOB_ENCRYPTED => Ok(ModelBlob::Encrypted(deserialize_packed_model(
                body, params,
            )?)),
            other => Err(WireError::Malformed {
                context: "model blob tag",
                detail: format!("{other}"),
            }),
        }
    }
}
