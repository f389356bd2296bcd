//! Exponential integral, the seeded generator and energy-arrival sampling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::EnergyTrace;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_SWITCH: f64 = 1.0;
const MIN_CF_LEVELS: usize = 30;
const MAX_CF_LEVELS: usize = 10_000;

/// First-order exponential integral `E1(z) = int_z^inf e^-u / u du` for `z > 0`.
pub fn exp_integral_e1(z: f64) -> Result<f64> {
    check_positive(z)?;
    if z <= SERIES_SWITCH {
        Ok(e1_series(z))
    } else {
        Ok((-z).exp() * scaled_e1_fraction(z))
    }
}

/// `e^z E1(z)`, evaluated without forming `e^z` when `z` is large.
pub fn scaled_exp_integral_e1(z: f64) -> Result<f64> {
    check_positive(z)?;
    if z <= SERIES_SWITCH {
        Ok(z.exp() * e1_series(z))
    } else {
        Ok(scaled_e1_fraction(z))
    }
}

fn check_positive(z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("E1 requires a finite z > 0, got {z}")))
    }
}

// -gamma - ln z - sum_{k>=1} (-z)^k / (k k!)
fn e1_series(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -z / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() < f64::EPSILON * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

// Modified Lentz evaluation of 1/(z+1- 1/(z+3- 4/(z+5- ...))) = e^z E1(z).
fn scaled_e1_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_CF_LEVELS {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if i >= MIN_CF_LEVELS && (del - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h
}

/// The single pseudorandom generator used by every stochastic routine.
///
/// ChaCha8 seeded through `seed_from_u64`; equal seeds give bit-identical streams
/// on every platform.
#[derive(Debug, Clone)]
pub struct SimRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// One Bernoulli(`lambda`) draw. `lambda` outside `[0, 1]` is clamped.
pub fn energy_arrival(lambda: f64, rng: &mut SimRng) -> u8 {
    u8::from(rng.gen_bool(lambda.clamp(0.0, 1.0)))
}

/// `k` i.i.d. unit-energy arrivals with probability `lambda` each.
pub fn bernoulli_trace(lambda: f64, k: usize, rng: &mut SimRng) -> EnergyTrace {
    let arrivals = (0..k).map(|_| energy_arrival(lambda, rng)).collect();
    EnergyTrace {
        arrivals,
        seed: rng.seed(),
    }
}

/// Mean and second moment of the number of blocks needed to harvest `units`
/// energy units: `(P / lambda, P (P + 1 - lambda) / lambda^2)`.
pub fn negbinomial_moments(units: u32, lambda: f64) -> (f64, f64) {
    let p = f64::from(units);
    (p / lambda, p * (p + 1.0 - lambda) / (lambda * lambda))
}

/// Number of Bernoulli(`lambda`) blocks until `units` arrivals have occurred.
pub fn sample_accumulation_time(units: u32, lambda: f64, rng: &mut SimRng) -> u64 {
    let mut got = 0;
    let mut blocks = 0;
    while got < units {
        blocks += 1;
        got += u32::from(energy_arrival(lambda, rng));
    }
    blocks
}
