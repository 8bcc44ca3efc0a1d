//! Seeded random streams and small sampling helpers.
//!
//! Every replication draws from a ChaCha8 stream keyed by
//! `(master seed, experiment label)` with the replication index as the
//! ChaCha stream id, so results never depend on the parallel schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};

pub type SimRng = ChaCha8Rng;

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream `index` of the generator keyed by `(master_seed, label)`.
pub fn stream_rng(master_seed: u64, label: &str, index: u64) -> SimRng {
    let mut state = master_seed ^ fnv1a(label);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Exact Poisson draw; a non-positive mean yields 0.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    d.sample(rng) as u64
}

pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

/// Uniform on (0, 1].
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Number of failures before the first success of Bernoulli(p) trials.
pub fn geometric_skip<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    if p <= 0.0 {
        return u64::MAX;
    }
    let k = (open_unit(rng).ln() / (-p).ln_1p()).floor();
    if k >= 1.8e19 {
        u64::MAX
    } else {
        k as u64
    }
}

/// Exponential(rate) conditioned on being at most `horizon`.
pub fn truncated_exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64, horizon: f64) -> f64 {
    let mass = -(-rate * horizon).exp_m1();
    let u: f64 = rng.random::<f64>();
    let t = -(-u * mass).ln_1p() / rate;
    t.min(horizon)
}

/// Geometric skipping over a non-increasing probability sequence `p(i)`,
/// `i` in `start..end`: calls `hit(i)` for each success of independent
/// Bernoulli(p(i)) trials.
pub fn bernoulli_skip<R, P, H>(rng: &mut R, start: u64, end: u64, mut p: P, mut hit: H)
where
    R: Rng + ?Sized,
    P: FnMut(u64) -> f64,
    H: FnMut(u64),
{
    let mut i = start;
    if i >= end {
        return;
    }
    let mut q = p(i);
    while i < end && q > 0.0 {
        if q < 1.0 {
            let skip = geometric_skip(rng, q);
            i = i.saturating_add(skip);
            if i >= end {
                break;
            }
        }
        let pi = p(i);
        if pi >= q || rng.random::<f64>() * q < pi {
            hit(i);
        }
        q = pi;
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut r1 = stream_rng(7, "x", 3);
        let mut r2 = stream_rng(7, "x", 3);
        let mut r3 = stream_rng(7, "x", 4);
        let mut r4 = stream_rng(7, "y", 3);
        let v1: u64 = r1.random();
        assert_eq!(v1, r2.random::<u64>());
        assert_ne!(v1, r3.random::<u64>());
        assert_ne!(v1, r4.random::<u64>());
    }

    #[test]
    fn poisson_zero_mean() {
        let mut rng = stream_rng(1, "p", 0);
        assert_eq!(poisson(&mut rng, 0.0), 0);
    }

    #[test]
    fn bernoulli_skip_matches_marginals() {
        let mut rng = stream_rng(2, "skip", 0);
        let probs = [0.9, 0.5, 0.5, 0.2, 0.05, 0.01];
        let reps = 100_000;
        let mut counts = [0u32; 6];
        for _ in 0..reps {
            bernoulli_skip(&mut rng, 0, 6, |i| probs[i as usize], |i| counts[i as usize] += 1);
        }
        for (c, p) in counts.iter().zip(probs) {
            let f = *c as f64 / reps as f64;
            let sd = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((f - p).abs() < 4.0 * sd + 1e-12, "p={p} f={f}");
        }
    }

    #[test]
    fn truncated_exponential_stays_in_range() {
        let mut rng = stream_rng(3, "te", 0);
        for _ in 0..1000 {
            let t = truncated_exponential(&mut rng, 2.0, 0.1);
            assert!(t > 0.0 && t <= 0.1);
        }
    }
}
