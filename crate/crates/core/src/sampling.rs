//! Seeded sample streams.
//!
//! Every randomized routine takes a [`SampleSpec`]; identical specs reproduce
//! identical streams. Pair streams interleave a Halton sequence with uniform
//! draws so that a prefix of the stream is itself a valid smaller sample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Seed plus number of samples for a randomized check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub seed: u64,
    pub count: usize,
}

impl SampleSpec {
    pub fn new(seed: u64, count: usize) -> Self {
        Self { seed, count }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Closed interval `[lo, hi]` of the real line; infinite ends allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    /// Returns `None` when `lo > hi` or either end is NaN.
    pub fn new(lo: T, hi: T) -> Option<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            None
        } else {
            Some(Self { lo, hi })
        }
    }

    pub fn real_line() -> Self {
        Self {
            lo: T::neg_infinity(),
            hi: T::infinity(),
        }
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval<T>) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    /// Maps `u ∈ [0,1]` affinely onto the interval.
    pub fn lerp(&self, u: f64) -> T {
        let lo = self.lo.as_f64();
        let hi = self.hi.as_f64();
        let v = lo + (hi - lo) * u;
        T::of(v.clamp(lo, hi))
    }
}

/// Radical inverse of `index` in `base`: the Halton / van der Corput point.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Prefix-stable stream of points in `[0,1]²`: even positions are Halton
/// points (bases 2, 3), odd positions are uniform draws.
pub struct UnitPairStream {
    rng: ChaCha8Rng,
    position: u64,
}

impl UnitPairStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            position: 0,
        }
    }
}

impl Iterator for UnitPairStream {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        let k = self.position;
        self.position += 1;
        if k.is_multiple_of(2) {
            // skip index 0, which is the corner (0, 0)
            let i = k / 2 + 1;
            Some((halton(i, 2), halton(i, 3)))
        } else {
            Some((self.rng.random::<f64>(), self.rng.random::<f64>()))
        }
    }
}

/// Pairs `(x, y)` drawn from `bx × by` using [`UnitPairStream`].
pub fn pairs_in_box<T: Scalar>(
    bx: Interval<T>,
    by: Interval<T>,
    spec: SampleSpec,
) -> impl Iterator<Item = (T, T)> {
    UnitPairStream::new(spec.seed)
        .take(spec.count)
        .map(move |(u, v)| (bx.lerp(u), by.lerp(v)))
}

/// Draw in `[0,1]` that hits the endpoints with probability 1/4 each.
///
/// Extremal ratios over cones are typically attained on faces, which a
/// plain uniform draw never touches.
pub fn boundary_weighted_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    match rng.random_range(0..4u8) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random::<f64>(),
    }
}
