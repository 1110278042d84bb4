//! Seeded random streams and quasi-random point sets.
//!
//! Every random draw is keyed by `(seed, index)`: a ChaCha stream selected
//! by the index, so results never depend on thread count or completion
//! order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Additive recurrence `x_n = frac(s + n α)` with `α_k = g^{−(k+1)}`, where
/// `g` is the positive root of `x^{d+1} = x + 1`.
#[derive(Debug, Clone)]
pub struct RdSequence {
    alpha: Vec<f64>,
}

impl RdSequence {
    pub fn new(dim: usize) -> Self {
        let mut g: f64 = 2.0;
        for _ in 0..64 {
            g = (1.0 + g).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|k| g.powi(-(k as i32)).fract()).collect();
        Self { alpha }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Point `n` shifted by `shift`, written into `out`.
    pub fn point(&self, n: u64, shift: &[f64], out: &mut [f64]) {
        for ((o, a), s) in out.iter_mut().zip(&self.alpha).zip(shift) {
            *o = (s + (n as f64) * a).fract();
        }
    }
}

/// Random Cranley–Patterson shifts, one per replicate.
pub fn random_shifts(seed: u64, stream: u64, replicates: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, stream);
    (0..replicates)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// Maps `u ∈ [0,1]` to `[0,π]` with density `∝ sin x`.
pub fn inverse_cdf_sin(u: f64) -> f64 {
    (1.0 - 2.0 * u).clamp(-1.0, 1.0).acos()
}

/// Maps `u ∈ [0,1]` to `[0,π]` with density `∝ sin² x`; the CDF is
/// `(x − sin x cos x)/π`.
pub fn inverse_cdf_sin2(u: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let target = u.clamp(0.0, 1.0) * pi;
    let (mut lo, mut hi) = (0.0, pi);
    let mut x = target;
    for _ in 0..60 {
        let f = x - x.sin() * x.cos() - target;
        if f.abs() < 1e-16 {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo < 1e-15 {
            break;
        }
        let df = 2.0 * x.sin().powi(2);
        let newton = if df > 1e-300 { x - f / df } else { f64::NAN };
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(1, 0).random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let x: u64 = stream_rng(1, 0).random();
        let y: u64 = stream_rng(1, 1).random();
        assert_ne!(x, y);
    }

    #[test]
    fn rd_is_equidistributed() {
        let seq = RdSequence::new(5);
        let shift = vec![0.0; 5];
        let mut p = vec![0.0; 5];
        let n = 20_000;
        let mut sums = vec![0.0; 5];
        for i in 0..n {
            seq.point(i, &shift, &mut p);
            for (s, x) in sums.iter_mut().zip(&p) {
                *s += x;
            }
        }
        for s in sums {
            assert!((s / n as f64 - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn inverse_cdfs() {
        for k in 0..=100 {
            let u = k as f64 / 100.0;
            let x = inverse_cdf_sin(u);
            assert!(((1.0 - x.cos()) / 2.0 - u).abs() < 1e-12);
            let y = inverse_cdf_sin2(u);
            assert!(
                ((y - y.sin() * y.cos()) / PI - u).abs() < 1e-12,
                "u={u} y={y}"
            );
        }
        assert_eq!(inverse_cdf_sin2(0.0), 0.0);
        assert!((inverse_cdf_sin2(0.5) - PI / 2.0).abs() < 1e-12);
    }
}
