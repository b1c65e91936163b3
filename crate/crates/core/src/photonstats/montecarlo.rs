//! Seeded simulator of the counting experiment and the exact expected click
//! probabilities of the same model.
//!
//! Model per coincidence window: a Poissonian number of pairs; each signal
//! photon reaches its detector with probability `eta_signal`; each idler
//! photon survives with `eta_idler` and then takes either output of a 50:50
//! splitter. Detectors are threshold (click / no click) without dark counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CountRecord, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSource {
    /// Mean pairs per coincidence window.
    pub mean_pairs: f64,
    pub eta_signal: f64,
    pub eta_idler: f64,
}

impl PairSource {
    pub fn validate(&self) -> Result<(), StatsError> {
        if !(self.mean_pairs >= 0.0 && self.mean_pairs.is_finite()) {
            return Err(StatsError::Domain(format!("mean pairs must be non-negative, got {}", self.mean_pairs)));
        }
        for (name, e) in [("eta_signal", self.eta_signal), ("eta_idler", self.eta_idler)] {
            if !(0.0..=1.0).contains(&e) {
                return Err(StatsError::Domain(format!("{name} must lie in [0, 1], got {e}")));
            }
        }
        Ok(())
    }
}

/// Per-window probabilities of each click pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClickProbabilities {
    pub signal: f64,
    pub idler_1: f64,
    pub idler_2: f64,
    pub signal_idler_1: f64,
    pub signal_idler_2: f64,
    pub threefold: f64,
}

impl ClickProbabilities {
    /// Exact values from Poisson thinning: the pairs reaching any detector
    /// set are Poissonian, so no-click probabilities are exponentials and
    /// joint clicks follow by inclusion-exclusion.
    pub fn of(src: &PairSource) -> Self {
        let n = src.mean_pairs;
        let (es, ei) = (src.eta_signal, src.eta_idler);
        let hit = |p: f64| -(-n * p).exp_m1();
        let a_s = hit(es);
        let a_1 = hit(0.5 * ei);
        let a_s1 = hit(1.0 - (1.0 - es) * (1.0 - 0.5 * ei));
        let a_12 = hit(ei);
        let a_s12 = hit(1.0 - (1.0 - es) * (1.0 - ei));
        let two = a_s + a_1 - a_s1;
        Self {
            signal: a_s,
            idler_1: a_1,
            idler_2: a_1,
            signal_idler_1: two,
            signal_idler_2: two,
            threefold: a_s + 2.0 * a_1 - 2.0 * a_s1 - a_12 + a_s12,
        }
    }

    /// Expected signal-arm Klyshko estimate, as a ratio of expected counts.
    pub fn klyshko_signal(&self) -> f64 {
        (self.signal_idler_1 + self.signal_idler_2) / (self.idler_1 + self.idler_2)
    }

    pub fn klyshko_idler(&self) -> f64 {
        (self.signal_idler_1 + self.signal_idler_2) / self.signal
    }

    pub fn g2(&self) -> f64 {
        self.threefold * self.signal / (self.signal_idler_1 * self.signal_idler_2)
    }

    /// Expected pair-rate estimate times the window, i.e. the mean pair
    /// number the counting formulas report.
    pub fn apparent_mean_pairs(&self) -> f64 {
        self.signal * (self.idler_1 + self.idler_2) / (self.signal_idler_1 + self.signal_idler_2)
    }
}

/// Expected counts over `windows` windows, as a record of reals.
pub fn expected_counts(src: &PairSource, windows: f64) -> [f64; 6] {
    let p = ClickProbabilities::of(src);
    [
        p.signal,
        p.idler_1,
        p.idler_2,
        p.signal_idler_1,
        p.signal_idler_2,
        p.threefold,
    ]
    .map(|v| v * windows)
}

const BLOCK: u64 = 1 << 20;

#[derive(Default, Clone, Copy)]
struct Tally {
    s: u64,
    d1: u64,
    d2: u64,
    s1: u64,
    s2: u64,
    s12: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally {
            s: self.s + o.s,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            s1: self.s1 + o.s1,
            s2: self.s2 + o.s2,
            s12: self.s12 + o.s12,
        }
    }
}

/// Draws from a Poisson distribution conditioned on at least one event.
fn zero_truncated_poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    let p0 = (-mean).exp();
    let u = p0 + (1.0 - p0) * rng.random::<f64>();
    let mut k = 1u64;
    let mut pk = p0 * mean;
    let mut cdf = p0 + pk;
    while cdf < u && k < 10_000 {
        k += 1;
        pk *= mean / k as f64;
        cdf += pk;
    }
    k
}

fn simulate_block(src: &PairSource, windows: u64, seed: u64, block: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let mut t = Tally::default();
    let p_busy = -(-src.mean_pairs).exp_m1();
    if p_busy <= 0.0 {
        return t;
    }
    let busy = Binomial::new(windows, p_busy.min(1.0)).unwrap().sample(&mut rng);
    for _ in 0..busy {
        let k = zero_truncated_poisson(&mut rng, src.mean_pairs);
        let (mut s, mut d1, mut d2) = (false, false, false);
        for _ in 0..k {
            s |= rng.random::<f64>() < src.eta_signal;
            let u = rng.random::<f64>();
            if u < 0.5 * src.eta_idler {
                d1 = true;
            } else if u < src.eta_idler {
                d2 = true;
            }
        }
        t.s += s as u64;
        t.d1 += d1 as u64;
        t.d2 += d2 as u64;
        t.s1 += (s && d1) as u64;
        t.s2 += (s && d2) as u64;
        t.s12 += (s && d1 && d2) as u64;
    }
    t
}

/// Simulated counts over `windows` coincidence windows of length `tau_c_s`.
/// Blocks of windows use independent streams of one seed, so the result does
/// not depend on the thread count.
pub fn simulate(src: &PairSource, windows: u64, tau_c_s: f64, power_w: f64, seed: u64) -> Result<CountRecord, StatsError> {
    src.validate()?;
    if windows == 0 || !(tau_c_s > 0.0) {
        return Err(StatsError::Domain("need at least one window of positive length".into()));
    }
    let blocks = windows.div_ceil(BLOCK);
    let t = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let w = BLOCK.min(windows - b * BLOCK);
            simulate_block(src, w, seed, b)
        })
        .reduce(Tally::default, |a, b| a + b);
    Ok(CountRecord {
        power_w,
        t_int_s: windows as f64 * tau_c_s,
        tau_c_s,
        n_s: t.s,
        n_1: t.d1,
        n_2: t.d2,
        c_s1: t.s1,
        c_s2: t.s2,
        c_s12: t.s12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probabilities_reduce_to_efficiencies_at_low_mean() {
        let p = ClickProbabilities::of(&PairSource {
            mean_pairs: 1e-6,
            eta_signal: 0.3,
            eta_idler: 0.2,
        });
        assert!((p.klyshko_signal() - 0.3).abs() < 1e-5);
        assert!((p.klyshko_idler() - 0.2).abs() < 1e-5);
        assert!((p.apparent_mean_pairs() / 1e-6 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn lossless_single_detector_limits() {
        let p = ClickProbabilities::of(&PairSource {
            mean_pairs: 0.2,
            eta_signal: 1.0,
            eta_idler: 0.0,
        });
        assert!((p.signal - (1.0 - (-0.2f64).exp())).abs() < 1e-15);
        assert_eq!(p.threefold, 0.0);
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let src = PairSource {
            mean_pairs: 0.05,
            eta_signal: 0.5,
            eta_idler: 0.4,
        };
        let a = simulate(&src, 3_000_000, 1e-9, 1e-6, 11).unwrap();
        let b = simulate(&src, 3_000_000, 1e-9, 1e-6, 11).unwrap();
        let c = simulate(&src, 3_000_000, 1e-9, 1e-6, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        a.validate().unwrap();
    }
}
