//! Deterministic randomness primitives shared across the crate.
//!
//! Everything downstream of a 64-bit seed is pinned bit-exactly so that runs
//! reproduce across machines and so that ports to other languages can agree:
//!
//! * `fnv1a_64` — FNV-1a over bytes (offset basis `0xcbf29ce484222325`,
//!   prime `0x100000001b3`).
//! * `SplitMix64` — the standard splitmix64 sequence: the state advances by
//!   `0x9e3779b97f4a7c15` and each output is the mixed new state.
//!
//! Test vectors (frozen in the unit tests below):
//!
//! | input | output |
//! |---|---|
//! | `fnv1a_64(b"")` | `0xcbf29ce484222325` |
//! | `fnv1a_64(b"a")` | `0xaf63dc4c8601ec8c` |
//! | `fnv1a_64(b"foobar")` | `0x85944171f73967e8` |
//! | `SplitMix64::new(0)` first output | `0xe220a8397b1dcdaf` |
//! | `SplitMix64::new(0)` second output | `0x6e789e6aa1b965f4` |

pub const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte slice, folded to 64 bits.
#[inline]
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET_BASIS;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Incremental FNV-1a, for hashing multi-part keys without allocating.
#[derive(Debug, Clone, Copy)]
pub struct Fnv1a(u64);

impl Fnv1a {
    #[inline]
    pub fn new() -> Self {
        Fnv1a(FNV_OFFSET_BASIS)
    }

    #[inline]
    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    #[inline]
    pub fn write_byte(&mut self, b: u8) {
        self.0 ^= b as u64;
        self.0 = self.0.wrapping_mul(FNV_PRIME);
    }

    /// Feeds the decimal digits of `v` without going through a format string.
    #[inline]
    pub fn write_u64_decimal(&mut self, v: u64) {
        let mut buf = [0u8; 20];
        let mut i = buf.len();
        let mut v = v;
        loop {
            i -= 1;
            buf[i] = b'0' + (v % 10) as u8;
            v /= 10;
            if v == 0 {
                break;
            }
        }
        self.write(&buf[i..]);
    }

    #[inline]
    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

/// splitmix64 stream. Cheap to construct, so every seed gets its own
/// instance; there is no shared stream state anywhere in the crate.
#[derive(Debug, Clone, Copy)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in (0, 1]; safe to feed through `ln`.
    #[inline]
    pub fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). `n` must be positive.
    #[inline]
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Multiply-shift; bias is negligible for the small n used here.
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal via Box-Muller. Consumes two outputs.
    pub fn next_standard_normal(&mut self) -> f64 {
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Poisson draw by Knuth's product method, splitting large rates so the
    /// running product never underflows. Exact for all finite rates >= 0.
    pub fn next_poisson(&mut self, rate: f64) -> u64 {
        if rate <= 0.0 {
            return 0;
        }
        if rate > 200.0 {
            let half = rate / 2.0;
            return self.next_poisson(half) + self.next_poisson(rate - half);
        }
        let limit = (-rate).exp();
        let mut count = 0u64;
        let mut product = 1.0;
        loop {
            product *= self.next_f64_open();
            if product <= limit {
                return count;
            }
            count += 1;
        }
    }
}

/// One-shot output for a given seed: the first value of the seed's stream.
#[inline]
pub fn mix_u64(seed: u64) -> u64 {
    SplitMix64::new(seed).next_u64()
}

/// A stream domain-separated by string parts, hashed with FNV-1a using the
/// same 0x1F field separator as seed derivation.
pub fn keyed_stream(parts: &[&str]) -> SplitMix64 {
    let mut h = Fnv1a::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h.write_byte(0x1f);
        }
        h.write(p.as_bytes());
    }
    SplitMix64::new(h.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_vectors() {
        assert_eq!(fnv1a_64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a_64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a_64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn splitmix_vectors() {
        let mut s = SplitMix64::new(0);
        assert_eq!(s.next_u64(), 0xe220a8397b1dcdaf);
        assert_eq!(s.next_u64(), 0x6e789e6aa1b965f4);
    }

    #[test]
    fn incremental_fnv_matches_oneshot() {
        let mut h = Fnv1a::new();
        h.write(b"foo");
        h.write(b"bar");
        assert_eq!(h.finish(), fnv1a_64(b"foobar"));

        let mut h = Fnv1a::new();
        h.write_u64_decimal(1234567890123456789);
        assert_eq!(h.finish(), fnv1a_64(b"1234567890123456789"));
        let mut h = Fnv1a::new();
        h.write_u64_decimal(0);
        assert_eq!(h.finish(), fnv1a_64(b"0"));
    }

    #[test]
    fn unit_interval_bounds() {
        let mut s = SplitMix64::new(42);
        for _ in 0..1000 {
            let u = s.next_f64();
            assert!((0.0..1.0).contains(&u));
            let v = s.next_f64_open();
            assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn poisson_mean_and_variance() {
        for &rate in &[0.3, 2.0, 9.0, 50.0, 400.0] {
            let mut s = SplitMix64::new(7);
            let n = 20_000;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..n {
                let k = s.next_poisson(rate) as f64;
                sum += k;
                sumsq += k * k;
            }
            let mean = sum / n as f64;
            let var = sumsq / n as f64 - mean * mean;
            // Both mean and variance of Poisson(rate) equal rate.
            let se = (rate / n as f64).sqrt();
            assert!(
                (mean - rate).abs() < 6.0 * se,
                "rate {rate}: mean {mean}"
            );
            assert!(
                (var - rate).abs() < 0.15 * rate.max(1.0),
                "rate {rate}: var {var}"
            );
        }
    }

    #[test]
    fn normal_moments() {
        let mut s = SplitMix64::new(11);
        let n = 100_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let z = s.next_standard_normal();
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 5.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.03);
    }

    #[test]
    fn poisson_zero_and_negative_rate() {
        let mut s = SplitMix64::new(1);
        assert_eq!(s.next_poisson(0.0), 0);
        assert_eq!(s.next_poisson(-1.0), 0);
    }
}
