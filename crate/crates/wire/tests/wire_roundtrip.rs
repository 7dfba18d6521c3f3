//! Serialization round trips and decoder robustness.

use fedhe_core::ckks::{encrypt, keygen, CkksParams, CkksParamsSpec, Plaintext};
use fedhe_core::pack::{encrypt_model, NamedArray};
use fedhe_core::ring::RingParams;
use fedhe_wire::codec::{
    deserialize_ciphertext, deserialize_layout, deserialize_packed_model,
    deserialize_plain_model, deserialize_public_key, serialize_ciphertext, serialize_layout,
    serialize_packed_model, serialize_plain_model, serialize_public_key, ModelBlob,
};
use fedhe_wire::{frame_decode, frame_encode, Message, WireError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::io::Cursor;

fn production_params() -> CkksParams {
    CkksParams::new(&CkksParamsSpec::default()).unwrap()
}

fn small_params() -> CkksParams {
    use fedhe_core::ring::modarith::next_ntt_prime;
    let q0 = next_ntt_prime(1 << 55, 128);
    let q1 = next_ntt_prime(1 << 40, 128);
    let ring = RingParams::new_insecure(64, &[q0, q1]).unwrap();
    CkksParams::with_ring(
        ring,
        &CkksParamsSpec {
            slot_count: 32,
            scale_bits: 40,
            max_depth: 1,
            security_bits: 0,
            error_sigma: 3.19,
        },
    )
    .unwrap()
}

#[test]
fn ciphertext_round_trip_bit_exact_many() {
    let params = small_params();
    let mut rng = ChaCha20Rng::seed_from_u64(50);
    let kp = keygen(&params, &mut rng);
    for _ in 0..1000 {
        let values: Vec<f64> = (0..32).map(|_| rng.random_range(-50.0..50.0)).collect();
        let pt = Plaintext::encode(&params, &values, params.scale()).unwrap();
        let ct = encrypt(&params, &kp.public, &pt, &mut rng);
        let bytes = serialize_ciphertext(&ct);
        let back = deserialize_ciphertext(&bytes, &params).unwrap();
        assert_eq!(serialize_ciphertext(&back), bytes);
        let (c0, c1) = ct.components();
        let (d0, d1) = back.components();
        assert_eq!(c0, d0);
        assert_eq!(c1, d1);
        assert_eq!(ct.scale().to_bits(), back.scale().to_bits());
        assert_eq!(ct.level(), back.level());
    }
}

#[test]
fn production_ciphertext_size_matches_format_arithmetic() {
    // 1 level byte + 8 scale bytes + 2 components x 3 residues x 16384 x 8.
    let params = production_params();
    let mut rng = ChaCha20Rng::seed_from_u64(51);
    let kp = keygen(&params, &mut rng);
    let pt = Plaintext::encode(&params, &[1.0; 8192], params.scale()).unwrap();
    let ct = encrypt(&params, &kp.public, &pt, &mut rng);
    let bytes = serialize_ciphertext(&ct);
    assert_eq!(bytes.len(), 1 + 8 + 2 * 3 * 16384 * 8);
    assert_eq!(bytes.len(), 786_441);
    let back = deserialize_ciphertext(&bytes, &params).unwrap();
    assert_eq!(serialize_ciphertext(&back), bytes);
}

#[test]
fn wrong_ring_degree_is_params_mismatch() {
    let params = small_params();
    let mut rng = ChaCha20Rng::seed_from_u64(52);
    let kp = keygen(&params, &mut rng);
    let pt = Plaintext::encode(&params, &[1.0; 32], params.scale()).unwrap();
    let ct = encrypt(&params, &kp.public, &pt, &mut rng);
    let bytes = serialize_ciphertext(&ct);

    // Same chain shape, different degree.
    use fedhe_core::ring::modarith::next_ntt_prime;
    let q0 = next_ntt_prime(1 << 55, 256);
    let q1 = next_ntt_prime(1 << 40, 256);
    let other_ring = RingParams::new_insecure(128, &[q0, q1]).unwrap();
    let other = CkksParams::with_ring(
        other_ring,
        &CkksParamsSpec {
            slot_count: 64,
            scale_bits: 40,
            max_depth: 1,
            security_bits: 0,
            error_sigma: 3.19,
        },
    )
    .unwrap();
    assert!(matches!(
        deserialize_ciphertext(&bytes, &other),
        Err(WireError::ParamsMismatch(_))
    ));
}

#[test]
fn truncated_ciphertext_is_structured_error() {
    let params = small_params();
    let mut rng = ChaCha20Rng::seed_from_u64(53);
    let kp = keygen(&params, &mut rng);
    let pt = Plaintext::encode(&params, &[2.0; 32], params.scale()).unwrap();
    let ct = encrypt(&params, &kp.public, &pt, &mut rng);
    let bytes = serialize_ciphertext(&ct);
    for cut in [0usize, 1, 8, bytes.len() / 2, bytes.len() - 1] {
        assert!(deserialize_ciphertext(&bytes[..cut], &params).is_err());
    }
}

#[test]
fn public_key_round_trip() {
    let params = small_params();
    let mut rng = ChaCha20Rng::seed_from_u64(54);
    let kp = keygen(&params, &mut rng);
    let bytes = serialize_public_key(&kp.public);
    let back = deserialize_public_key(&bytes, &params).unwrap();
    assert_eq!(serialize_public_key(&back), bytes);
}

#[test]
fn layout_and_models_round_trip() {
    let params = small_params();
    let mut rng = ChaCha20Rng::seed_from_u64(55);
    let kp = keygen(&params, &mut rng);
    let model = vec![
        NamedArray::new("w1", vec![8, 4], (0..32).map(|i| i as f64 / 7.0).collect()).unwrap(),
        NamedArray::new("b1", vec![8], vec![-0.5; 8]).unwrap(),
    ];

    let packed = encrypt_model(&model, &params, &kp.public, &mut rng).unwrap();
    let layout_bytes = serialize_layout(&packed.layout);
    assert_eq!(deserialize_layout(&layout_bytes).unwrap(), packed.layout);

    let packed_bytes = serialize_packed_model(&packed);
    let back = deserialize_packed_model(&packed_bytes, &params).unwrap();
    assert_eq!(serialize_packed_model(&back), packed_bytes);

    let plain_bytes = serialize_plain_model(&model);
    let plain_back = deserialize_plain_model(&plain_bytes).unwrap();
    assert_eq!(plain_back, model);

    // Blob tagging.
    let blob = ModelBlob::Encrypted(packed).to_bytes();
    assert!(matches!(
        ModelBlob::from_bytes(&blob, &params).unwrap(),
        ModelBlob::Encrypted(_)
    ));
    let blob = ModelBlob::Plain(model.clone()).to_bytes();
    match ModelBlob::from_bytes(&blob, &params).unwrap() {
        ModelBlob::Plain(m) => assert_eq!(m, model),
        other => panic!("wrong blob variant: {other:?}"),
    }
}

#[test]
fn encrypt_serialize_deserialize_decrypt_round_trip() {
    let params = production_params();
    let mut rng = ChaCha20Rng::seed_from_u64(56);
    let kp = keygen(&params, &mut rng);
    let values: Vec<f64> = (0..8192).map(|_| rng.random_range(-100.0..100.0)).collect();
    let pt = Plaintext::encode(&params, &values, params.scale()).unwrap();
    let ct = encrypt(&params, &kp.public, &pt, &mut rng);
    let back = deserialize_ciphertext(&serialize_ciphertext(&ct), &params).unwrap();
    let decoded = fedhe_core::ckks::decrypt(&kp.secret, &back)
        .decode(&params)
        .unwrap();
    let tol = 1.0 / (1u64 << 30) as f64;
    for (v, d) in values.iter().zip(&decoded) {
        assert!((v - d).abs() < tol);
    }
}

#[test]
fn frame_fuzz_random_bytes_never_panic() {
    // A slice of the acceptance fuzz budget: random byte strings and
    // bit-flipped valid frames must only ever produce structured errors.
    let mut rng = ChaCha20Rng::seed_from_u64(57);
    for _ in 0..50_000 {
        let len = rng.random_range(0..64usize);
        let bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let _ = frame_decode(&mut Cursor::new(bytes));
    }
    let valid = frame_encode(&Message::Register {
        learner_id: 1,
        contribution: 2,
    });
    for _ in 0..10_000 {
        let mut mutated = valid.clone();
        let flips = rng.random_range(1..4usize);
        for _ in 0..flips {
            let idx = rng.random_range(0..mutated.len());
            mutated[idx] ^= 1 << rng.random_range(0..8u32);
        }
        let _ = frame_decode(&mut Cursor::new(mutated));
    }
}
