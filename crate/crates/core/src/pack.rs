//! Packing model parameter arrays into ciphertext slots.
//!
//! A model is an ordered list of named arrays. Arrays are flattened row-major
//! and concatenated into one parameter vector, which is chunked into
//! slot-count-sized pieces (zero-padded tail), each encoded at the default
//! scale and encrypted. The layout records where every array starts in
//! (ciphertext, slot) space so the per-array view stays recoverable.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::ckks::{decrypt, encrypt, Ciphertext, CkksParams, Plaintext, PublicKey, SecretKey};
use crate::{Error, Result};

/// One named parameter array with a declared shape.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedArray {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let name = name.into();
        let expect: usize = shape.iter().product();
        if expect != data.len() {
            return Err(Error::ShapeMismatch {
                name,
                expect,
                got: data.len(),
            });
        }
        Ok(Self { name, shape, data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Where one array lives in the packed representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayDescriptor {
    pub name: String,
    pub shape: Vec<usize>,
    pub elem_count: usize,
    /// Index of the ciphertext holding the array's first element.
    pub ciphertext_index: usize,
    /// Slot offset of the first element within that ciphertext.
    pub slot_offset: usize,
}

/// Slot map shared between the packing and unpacking sides.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelLayout {
    pub arrays: Vec<ArrayDescriptor>,
    pub total_parameters: usize,
    pub slots_per_ciphertext: usize,
}

impl ModelLayout {
    /// Ciphertexts needed: one per full-or-partial slot chunk.
    pub fn ciphertext_count(&self) -> usize {
        self.total_parameters.div_ceil(self.slots_per_ciphertext)
    }
}

/// An encrypted model: the layout plus one ciphertext per parameter chunk.
#[derive(Debug, Clone)]
pub struct PackedModel {
    pub layout: ModelLayout,
    pub ciphertexts: Vec<Ciphertext>,
}

impl PackedModel {
    /// Checks the ciphertext list against the layout and that scale and
    /// level agree across chunks.
    pub fn validate(&self) -> Result<()> {
        if self.ciphertexts.len() != self.layout.ciphertext_count() {
            return Err(Error::PackedModelMismatch(format!(
                "{} ciphertexts for a layout needing {}",
                self.ciphertexts.len(),
                self.layout.ciphertext_count()
            )));
        }
        if let Some(first) = self.ciphertexts.first() {
            for ct in &self.ciphertexts[1..] {
                if ct.level() != first.level() {
                    return Err(Error::PackedModelMismatch("mixed levels".into()));
                }
                if ct.scale() != first.scale() {
                    return Err(Error::PackedModelMismatch("mixed scales".into()));
                }
            }
        }
        Ok(())
    }

    pub fn level(&self) -> Option<usize> {
        self.ciphertexts.first().map(|ct| ct.level())
    }

    pub fn scale(&self) -> Option<f64> {
        self.ciphertexts.first().map(|ct| ct.scale())
    }
}

/// Concatenates arrays row-major in declaration order, producing the layout
/// and the flat parameter vector.
pub fn flatten(
    model: &[NamedArray],
    slots_per_ciphertext: usize,
) -> Result<(ModelLayout, Vec<f64>)> {
    if model.is_empty() {
        return Err(Error::EmptyModel);
    }
    let mut flat = Vec::new();
    let mut arrays = Vec::with_capacity(model.len());
    for array in model {
        let expect: usize = array.shape.iter().product();
        if expect != array.data.len() {
            return Err(Error::ShapeMismatch {
                name: array.name.clone(),
                expect,
                got: array.data.len(),
            });
        }
        arrays.push(ArrayDescriptor {
            name: array.name.clone(),
            shape: array.shape.clone(),
            elem_count: array.data.len(),
            ciphertext_index: flat.len() / slots_per_ciphertext,
            slot_offset: flat.len() % slots_per_ciphertext,
        });
        flat.extend_from_slice(&array.data);
    }
    Ok((
        ModelLayout {
            arrays,
            total_parameters: flat.len(),
            slots_per_ciphertext,
        },
        flat,
    ))
}

/// Exact inverse of [`flatten`]: splits the flat vector back into named
/// arrays. Bitwise round trip; no arithmetic touches the values.
pub fn unflatten(layout: &ModelLayout, flat: &[f64]) -> Result<Vec<NamedArray>> {
    if flat.len() < layout.total_parameters {
        return Err(Error::LengthMismatch {
            need: layout.total_parameters,
            got: flat.len(),
        });
    }
    let mut out = Vec::with_capacity(layout.arrays.len());
    let mut offset = 0usize;
    for desc in &layout.arrays {
        let data = flat[offset..offset + desc.elem_count].to_vec();
        out.push(NamedArray {
            name: desc.name.clone(),
            shape: desc.shape.clone(),
            data,
        });
        offset += desc.elem_count;
    }
    Ok(out)
}

/// Flattens, chunks, encodes at the default scale, and encrypts each chunk.
/// Chunks are encrypted in parallel with per-chunk RNG streams derived
/// sequentially from `rng`, so the result is independent of scheduling.
pub fn encrypt_model<R: Rng + ?Sized>(
    model: &[NamedArray],
    params: &CkksParams,
    pk: &PublicKey,
    rng: &mut R,
) -> Result<PackedModel> {
    let (layout, flat) = flatten(model, params.slot_count())?;
    let chunk_seeds: Vec<[u8; 32]> = (0..layout.ciphertext_count())
        .map(|_| {
            let mut seed = [0u8; 32];
            rng.fill_bytes(&mut seed);
            seed
        })
        .collect();
    let scale = params.scale();
    let ciphertexts = flat
        .par_chunks(params.slot_count())
        .zip(chunk_seeds)
        .map(|(chunk, seed)| {
            let pt = Plaintext::encode(params, chunk, scale)?;
            let mut chunk_rng = rand_chacha::ChaCha20Rng::from_seed(seed);
            Ok(encrypt(params, pk, &pt, &mut chunk_rng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PackedModel {
        layout,
        ciphertexts,
    })
}

/// Decrypts and decodes every chunk, truncates the tail padding, and
/// restores the named arrays.
pub fn decrypt_model(packed: &PackedModel, params: &CkksParams, sk: &SecretKey) -> Result<Vec<NamedArray>> {
    packed.validate()?;
    let mut flat: Vec<f64> = packed
        .ciphertexts
        .par_iter()
        .map(|ct| decrypt(sk, ct).decode(params))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    flat.truncate(packed.layout.total_parameters);
    unflatten(&packed.layout, &flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_single_array_row_major() {
        let m = vec![NamedArray::new("w", vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()];
        let (layout, flat) = flatten(&m, 8).unwrap();
        assert_eq!(flat, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(layout.arrays.len(), 1);
        assert_eq!(layout.arrays[0].ciphertext_index, 0);
        assert_eq!(layout.arrays[0].slot_offset, 0);
        assert_eq!(layout.ciphertext_count(), 1);
    }

    #[test]
    fn flatten_two_arrays_records_offsets() {
        let m = vec![
            NamedArray::new("a", vec![3], vec![0.0; 3]).unwrap(),
            NamedArray::new("b", vec![5], vec![0.0; 5]).unwrap(),
        ];
        let (layout, flat) = flatten(&m, 8).unwrap();
        assert_eq!(flat.len(), 8);
        assert_eq!(layout.arrays[0].slot_offset, 0);
        assert_eq!(layout.arrays[1].slot_offset, 3);
        assert_eq!(layout.total_parameters, 8);
    }

    #[test]
    fn million_parameters_need_123_ciphertexts() {
        let m = vec![NamedArray::new("w", vec![1_000_000], vec![0.0; 1_000_000]).unwrap()];
        let (layout, _) = flatten(&m, 8192).unwrap();
        assert_eq!(layout.ciphertext_count(), 123);
    }

    #[test]
    fn unflatten_is_bitwise_inverse() {
        let m = vec![
            NamedArray::new("a", vec![2, 3], vec![1.5, -2.5, 3.25, 0.1, 0.2, 0.3]).unwrap(),
            NamedArray::new("b", vec![4], vec![9.0, 8.0, 7.0, 6.0]).unwrap(),
        ];
        let (layout, flat) = flatten(&m, 4).unwrap();
        let back = unflatten(&layout, &flat).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn empty_model_and_length_mismatch() {
        assert!(matches!(flatten(&[], 8), Err(Error::EmptyModel)));
        let m = vec![NamedArray::new("a", vec![3], vec![0.0; 3]).unwrap()];
        let (layout, _) = flatten(&m, 8).unwrap();
        assert!(matches!(
            unflatten(&layout, &[0.0; 2]),
            Err(Error::LengthMismatch { need: 3, got: 2 })
        ));
    }

    #[test]
    fn layout_is_deterministic() {
        let build = || {
            vec![
                NamedArray::new("w1", vec![4, 2], vec![0.0; 8]).unwrap(),
                NamedArray::new("b1", vec![4], vec![0.0; 4]).unwrap(),
            ]
        };
        let (l1, _) = flatten(&build(), 8).unwrap();
        let (l2, _) = flatten(&build(), 8).unwrap();
        assert_eq!(l1, l2);
    }
}
