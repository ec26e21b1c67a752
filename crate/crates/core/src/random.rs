//! Seeded random streams and small sampling helpers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Default number of samples per chunk for Monte Carlo loops.
pub const CHUNK: usize = 4096;

/// The generator for chunk `stream` of a run seeded with `seed`.
///
/// Distinct chunks get independent ChaCha streams, so a sampled result only
/// depends on `(seed, chunk size)` and never on thread scheduling.
pub fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard Gaussian vector.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform point on the unit sphere in ℝⁿ.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let g = gaussian(rng, n);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Uniform point in the box `[lo, hi]`.
pub fn in_box<R: Rng + ?Sized>(rng: &mut R, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(a, b)| a + (b - a) * rng.random::<f64>())
        .collect()
}

/// A random orthonormal `k`-frame in ℝⁿ (Gaussian vectors, Gram-Schmidt).
pub fn orthonormal_frame<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<Vec<f64>> {
    assert!(k <= n);
    loop {
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut ok = true;
        for _ in 0..k {
            let mut v = gaussian(rng, n);
            for u in &frame {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= dot * ui;
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < 1e-9 {
                ok = false;
                break;
            }
            frame.push(v.into_iter().map(|a| a / norm).collect());
        }
        if ok {
            return frame;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_are_orthonormal() {
        let mut r = rng(3);
        let f = orthonormal_frame(&mut r, 5, 3);
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = f[i].iter().zip(&f[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: f64 = chunk_rng(7, 0).random();
        let b: f64 = chunk_rng(7, 1).random();
        let c: f64 = chunk_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
