//! CKKS at the production parameter set (16384 ring degree, 8192 slots,
//! 52-bit scale, depth 2) against plaintext oracles.

use fedhe_core::ckks::{
    add_ct, decrypt, encrypt, keygen, mul_plain, rescale, CkksParams, CkksParamsSpec, Plaintext,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn production_params() -> CkksParams {
    CkksParams::new(&CkksParamsSpec::default()).unwrap()
}

fn random_values(rng: &mut impl Rng, n: usize, lim: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-lim..lim)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

const TOL_2_POW_30: f64 = 1.0 / (1u64 << 30) as f64;
const TOL_2_POW_29: f64 = 1.0 / (1u64 << 29) as f64;
const TOL_2_POW_25: f64 = 1.0 / (1u64 << 25) as f64;

#[test]
fn encode_decode_round_trip_full_width() {
    let params = production_params();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for trial in 0..5 {
        let values = random_values(&mut rng, params.slot_count(), 100.0);
        let pt = Plaintext::encode(&params, &values, params.scale()).unwrap();
        let decoded = pt.decode(&params).unwrap();
        let err = max_abs_diff(&values, &decoded);
        assert!(err < TOL_2_POW_30, "trial {trial}: error {err:e}");
    }
}

#[test]
fn encrypt_decrypt_round_trip() {
    let params = production_params();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let kp = keygen(&params, &mut rng);
    for trial in 0..5 {
        let values = random_values(&mut rng, params.slot_count(), 100.0);
        let pt = Plaintext::encode(&params, &values, params.scale()).unwrap();
        let ct = encrypt(&params, &kp.public, &pt, &mut rng);
        let decoded = decrypt(&kp.secret, &ct).decode(&params).unwrap();
        let err = max_abs_diff(&values, &decoded);
        assert!(err < TOL_2_POW_30, "trial {trial}: error {err:e}");
    }
}

#[test]
fn add_identity_and_inverse() {
    let params = production_params();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let kp = keygen(&params, &mut rng);
    let v = random_values(&mut rng, params.slot_count(), 100.0);
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    let scale = params.scale();

    let ct_v = encrypt(
        &params,
        &kp.public,
        &Plaintext::encode(&params, &v, scale).unwrap(),
        &mut rng,
    );
    let ct_zero = encrypt(
        &params,
        &kp.public,
        &Plaintext::encode(&params, &vec![0.0; params.slot_count()], scale).unwrap(),
        &mut rng,
    );
    let ct_neg = encrypt(
        &params,
        &kp.public,
        &Plaintext::encode(&params, &neg, scale).unwrap(),
        &mut rng,
    );

    let id = decrypt(&kp.secret, &add_ct(&ct_v, &ct_zero).unwrap())
        .decode(&params)
        .unwrap();
    assert!(max_abs_diff(&v, &id) < TOL_2_POW_29);

    let cancel = decrypt(&kp.secret, &add_ct(&ct_v, &ct_neg).unwrap())
        .decode(&params)
        .unwrap();
    assert!(cancel.iter().all(|x| x.abs() < TOL_2_POW_29));
}

#[test]
fn add_matches_plaintext_oracle() {
    let params = production_params();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let kp = keygen(&params, &mut rng);
    let scale = params.scale();
    for _ in 0..3 {
        let u = random_values(&mut rng, params.slot_count(), 512.0);
        let v = random_values(&mut rng, params.slot_count(), 512.0);
        let sum_expected: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let ct = add_ct(
            &encrypt(
                &params,
                &kp.public,
                &Plaintext::encode(&params, &u, scale).unwrap(),
                &mut rng,
            ),
            &encrypt(
                &params,
                &kp.public,
                &Plaintext::encode(&params, &v, scale).unwrap(),
                &mut rng,
            ),
        )
        .unwrap();
        let decoded = decrypt(&kp.secret, &ct).decode(&params).unwrap();
        assert!(max_abs_diff(&sum_expected, &decoded) < TOL_2_POW_29);
    }
}

#[test]
fn mul_plain_rescale_matches_product_oracle() {
    let params = production_params();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let kp = keygen(&params, &mut rng);
    let scale = params.scale();
    for _ in 0..3 {
        let v = random_values(&mut rng, params.slot_count(), 32.0);
        let w = random_values(&mut rng, params.slot_count(), 1.0);
        let expected: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a * b).collect();
        let ct = encrypt(
            &params,
            &kp.public,
            &Plaintext::encode(&params, &v, scale).unwrap(),
            &mut rng,
        );
        let w_pt = Plaintext::encode(&params, &w, scale).unwrap();
        let out = rescale(&mul_plain(&ct, &w_pt).unwrap()).unwrap();
        let decoded = decrypt(&kp.secret, &out).decode(&params).unwrap();
        assert!(max_abs_diff(&expected, &decoded) < TOL_2_POW_25);
    }
}

#[test]
fn rescale_returns_scale_near_default() {
    // The rescaling primes are the closest NTT-friendly primes above 2^52;
    // their spacing (multiples of 32768 apart) puts the post-rescale scale
    // within 2^-33 of D, measured: ~2^-33.4.
    let params = production_params();
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let kp = keygen(&params, &mut rng);
    let scale = params.scale();
    let ct = encrypt(
        &params,
        &kp.public,
        &Plaintext::encode(&params, &[1.0; 8192], scale).unwrap(),
        &mut rng,
    );
    let w_pt = Plaintext::encode(&params, &[1.0; 8192], scale).unwrap();
    let out = rescale(&mul_plain(&ct, &w_pt).unwrap()).unwrap();
    let rel = (out.scale() / scale - 1.0).abs();
    assert!(rel < 1.0 / (1u64 << 33) as f64, "relative deviation {rel:e}");

    // Scale metadata is exact algebra: D * D / q_dropped.
    let dropped = params.ring().primes()[params.top_level()];
    assert_eq!(out.scale(), scale * scale / dropped as f64);
}

#[test]
fn mul_by_ones_after_rescale_is_identity() {
    let params = production_params();
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let kp = keygen(&params, &mut rng);
    let scale = params.scale();
    let v = random_values(&mut rng, params.slot_count(), 10.0);
    let ct = encrypt(
        &params,
        &kp.public,
        &Plaintext::encode(&params, &v, scale).unwrap(),
        &mut rng,
    );
    let ones = Plaintext::encode(&params, &vec![1.0; params.slot_count()], scale).unwrap();
    let out = rescale(&mul_plain(&ct, &ones).unwrap()).unwrap();
    let decoded = decrypt(&kp.secret, &out).decode(&params).unwrap();
    assert!(max_abs_diff(&v, &decoded) < TOL_2_POW_25);

    let zeros = Plaintext::encode(&params, &vec![0.0; params.slot_count()], scale).unwrap();
    let nil = rescale(&mul_plain(&ct, &zeros).unwrap()).unwrap();
    let decoded = decrypt(&kp.secret, &nil).decode(&params).unwrap();
    assert!(decoded.iter().all(|x| x.abs() < TOL_2_POW_25));
}

#[test]
fn weighted_sum_homomorphism_eight_operands() {
    // Eval correctness for F = weighted sum with public weights: the shape of
    // the encrypted-aggregation circuit (8 products at depth 1, then adds,
    // one rescale).
    let params = production_params();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let kp = keygen(&params, &mut rng);
    let scale = params.scale();

    let operands: Vec<Vec<f64>> = (0..8)
        .map(|_| random_values(&mut rng, params.slot_count(), 10.0))
        .collect();
    let raw: Vec<f64> = (0..8).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();

    let mut expected = vec![0.0f64; params.slot_count()];
    for (op, w) in operands.iter().zip(&weights) {
        for (e, x) in expected.iter_mut().zip(op) {
            *e += w * x;
        }
    }

    let mut acc: Option<fedhe_core::ckks::Ciphertext> = None;
    for (op, w) in operands.iter().zip(&weights) {
        let ct = encrypt(
            &params,
            &kp.public,
            &Plaintext::encode(&params, op, scale).unwrap(),
            &mut rng,
        );
        let w_pt =
            Plaintext::encode(&params, &vec![*w; params.slot_count()], scale).unwrap();
        let term = mul_plain(&ct, &w_pt).unwrap();
        acc = Some(match acc {
            None => term,
            Some(prev) => add_ct(&prev, &term).unwrap(),
        });
    }
    let out = rescale(&acc.unwrap()).unwrap();
    let decoded = decrypt(&kp.secret, &out).decode(&params).unwrap();
    assert!(max_abs_diff(&expected, &decoded) < TOL_2_POW_25);
}

#[test]
fn keygen_is_deterministic_under_seed() {
    let params = production_params();
    let k1 = keygen(&params, &mut ChaCha20Rng::seed_from_u64(99));
    let k2 = keygen(&params, &mut ChaCha20Rng::seed_from_u64(99));
    let pt = Plaintext::encode(&params, &[1.25; 8192], params.scale()).unwrap();
    let c1 = encrypt(&params, &k1.public, &pt, &mut ChaCha20Rng::seed_from_u64(1));
    let c2 = encrypt(&params, &k2.public, &pt, &mut ChaCha20Rng::seed_from_u64(1));
    let (a0, a1) = c1.components();
    let (b0, b1) = c2.components();
    assert_eq!(a0, b0);
    assert_eq!(a1, b1);
}
