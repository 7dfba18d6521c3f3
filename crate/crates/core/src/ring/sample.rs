//! Cryptographic samplers over the ring: uniform ternary secrets, centered
//! discrete Gaussian noise (6-sigma tail cut), and uniform ring elements.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{Domain, RingParams, RnsPolynomial};

/// Uniform ternary polynomial with coefficients in {-1, 0, 1}, top level,
/// coefficient domain.
pub fn sample_ternary_secret<R: Rng + ?Sized>(
    params: &Arc<RingParams>,
    rng: &mut R,
) -> RnsPolynomial {
    let coeffs: Vec<i64> = (0..params.degree())
        .map(|_| rng.random_range(-1..=1i64))
        .collect();
    RnsPolynomial::from_signed_coeffs(params, &coeffs)
}

/// Centered discrete Gaussian with standard deviation `sigma`, rejecting
/// samples beyond the 6-sigma tail. Top level, coefficient domain.
pub fn sample_gaussian_error<R: Rng + ?Sized>(
    params: &Arc<RingParams>,
    rng: &mut R,
    sigma: f64,
) -> RnsPolynomial {
    assert!(sigma > 0.0, "sigma must be positive");
    let bound = (6.0 * sigma).floor() as i64;
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let coeffs: Vec<i64> = (0..params.degree())
        .map(|_| loop {
            let v = normal.sample(rng).round() as i64;
            if v.abs() <= bound {
                break v;
            }
        })
        .collect();
    RnsPolynomial::from_signed_coeffs(params, &coeffs)
}

/// Uniform element of the ring at top level. Residues are drawn
/// independently per prime, which by CRT is uniform over Z_Q; the result is
/// labelled evaluation-domain since uniformity is basis-independent and the
/// consumer (key generation) works there.
pub fn sample_uniform<R: Rng + ?Sized>(params: &Arc<RingParams>, rng: &mut R) -> RnsPolynomial {
    let residues = params
        .primes()
        .iter()
        .map(|&q| (0..params.degree()).map(|_| rng.random_range(0..q)).collect())
        .collect();
    RnsPolynomial::from_residues(params, residues, Domain::Evaluation)
        .expect("freshly sampled residues are reduced")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn params_n16384() -> Arc<RingParams> {
        RingParams::new_insecure(16384, &[65537]).unwrap()
    }

    #[test]
    fn ternary_deterministic_under_seed() {
        let params = params_n16384();
        let a = sample_ternary_secret(&params, &mut ChaCha20Rng::seed_from_u64(7));
        let b = sample_ternary_secret(&params, &mut ChaCha20Rng::seed_from_u64(7));
        let c = sample_ternary_secret(&params, &mut ChaCha20Rng::seed_from_u64(8));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ternary_histogram_within_5_sigma() {
        // Each symbol is Binomial(n, 1/3): sd = sqrt(n * 2/9).
        let params = params_n16384();
        let p = sample_ternary_secret(&params, &mut ChaCha20Rng::seed_from_u64(1));
        let q = params.primes()[0];
        let mut counts = [0usize; 3];
        for &x in &p.residues()[0] {
            match x {
                0 => counts[0] += 1,
                1 => counts[1] += 1,
                v if v == q - 1 => counts[2] += 1,
                other => panic!("non-ternary residue {other}"),
            }
        }
        let n = params.degree() as f64;
        let sd = (n * 2.0 / 9.0).sqrt();
        for c in counts {
            assert!(
                (c as f64 - n / 3.0).abs() < 5.0 * sd,
                "count {c} outside 5 sigma of {}",
                n / 3.0
            );
        }
    }

    #[test]
    fn ternary_minus_one_is_q_minus_one_in_every_residue() {
        let params = RingParams::new_insecure(8, &[97, 193]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let p = loop {
            let p = sample_ternary_secret(&params, &mut rng);
            if p.residues()[0].contains(&96) {
                break p;
            }
        };
        for (idx, &x) in p.residues()[0].iter().enumerate() {
            if x == 96 {
                assert_eq!(p.residues()[1][idx], 192);
            }
        }
    }

    #[test]
    fn gaussian_tail_cut_and_mean() {
        let params = params_n16384();
        let sigma = 3.19;
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        // ~10^5 draws across several polynomials.
        let mut sum = 0i64;
        let mut count = 0usize;
        for _ in 0..7 {
            let p = sample_gaussian_error(&params, &mut rng, sigma);
            let q = params.primes()[0];
            for &x in &p.residues()[0] {
                let v = if x > q / 2 { x as i64 - q as i64 } else { x as i64 };
                assert!(v.abs() <= 19, "sample {v} beyond 6 sigma cut");
                sum += v;
                count += 1;
            }
        }
        assert!(count > 100_000);
        let mean = sum as f64 / count as f64;
        assert!(mean.abs() < 0.1, "sample mean {mean} too far from zero");
    }

    #[test]
    fn gaussian_deterministic_under_seed() {
        let params = params_n16384();
        let a = sample_gaussian_error(&params, &mut ChaCha20Rng::seed_from_u64(5), 3.19);
        let b = sample_gaussian_error(&params, &mut ChaCha20Rng::seed_from_u64(5), 3.19);
        assert_eq!(a, b);
    }
}
