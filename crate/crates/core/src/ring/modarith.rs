//! Word-sized modular arithmetic for primes below 2^62.

/// `(a + b) mod q`, assuming both operands are reduced.
#[inline(always)]
pub fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    let s = a + b;
    if s >= q {
        s - q
    } else {
        s
    }
}

/// `(a - b) mod q`, assuming both operands are reduced.
#[inline(always)]
pub fn sub_mod(a: u64, b: u64, q: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + q - b
    }
}

/// `(a * b) mod q` through a 128-bit intermediate.
#[inline(always)]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

/// `base^exp mod q` by square-and-multiply.
pub fn pow_mod(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1u64;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    acc
}

/// Multiplicative inverse mod a prime `q` (Fermat).
pub fn inv_mod(a: u64, q: u64) -> u64 {
    debug_assert!(a % q != 0);
    pow_mod(a, q - 2, q)
}

/// Shoup precomputation: `floor(w << 64 / q)` for fast repeated products by `w`.
#[inline]
pub fn shoup_precompute(w: u64, q: u64) -> u64 {
    (((w as u128) << 64) / q as u128) as u64
}

/// `(x * w) mod q` using the Shoup companion word of `w`.
///
/// Requires `q < 2^63` and reduced inputs; one multiply cheaper than a
/// generic 128-bit reduction.
#[inline(always)]
pub fn mul_mod_shoup(x: u64, w: u64, w_shoup: u64, q: u64) -> u64 {
    let quot = ((w_shoup as u128 * x as u128) >> 64) as u64;
    let r = w.wrapping_mul(x).wrapping_sub(quot.wrapping_mul(q));
    if r >= q {
        r - q
    } else {
        r
    }
}

/// Deterministic Miller-Rabin, exact for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `p > floor` with `p ≡ 1 (mod step)`.
pub fn next_ntt_prime(floor: u64, step: u64) -> u64 {
    let mut p = (floor / step) * step + 1;
    while p <= floor {
        p += step;
    }
    while !is_prime(p) {
        p += step;
    }
    p
}

/// Reverse the low `bits` bits of `x`.
#[inline]
pub fn bit_reverse(x: usize, bits: u32) -> usize {
    x.reverse_bits() >> (usize::BITS - bits)
}
