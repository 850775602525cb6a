//! Evolution times drawn from the truncated Gaussian.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// `N` draws with `|t_n| ≤ σT`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSamples<T: Real> {
    pub times: Vec<T>,
    /// Filter width `T`.
    pub width: T,
    pub sigma: T,
    pub seed: u64,
}

impl<T: Real> TimeSamples<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `σT`, the longest evolution time that can be drawn.
    pub fn max_time(&self) -> T {
        self.sigma * self.width
    }

    /// Explicit times, e.g. for deterministic tests. Width and σ are recorded
    /// as given and the bound `|t| ≤ σT` is checked.
    pub fn from_times(times: Vec<T>, width: T, sigma: T) -> Result<Self> {
        check_params(width.f64(), sigma.f64(), times.len())?;
        let cap = sigma * width;
        if times.iter().any(|t| !t.is_finite() || t.abs() > cap) {
            return Err(invalid("explicit times must be finite and within σT"));
        }
        Ok(Self {
            times,
            width,
            sigma,
            seed: 0,
        })
    }
}

fn check_params(width: f64, sigma: f64, n: usize) -> Result<()> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(invalid(format!("filter width T must be positive, got {width}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("truncation sigma must be positive, got {sigma}")));
    }
    if n == 0 {
        return Err(invalid("need at least one time sample"));
    }
    Ok(())
}

/// Draws `s ~ N(0, 2T²)` and emits `s` if `|s| ≤ σT`, else `0`. The resulting
/// law is the Gaussian density truncated to `[-σT, σT]` with the removed mass
/// placed as an atom at zero.
pub fn sample_times<T: Real>(width: T, sigma: T, n: usize, seed: u64) -> Result<TimeSamples<T>> {
    check_params(width.f64(), sigma.f64(), n)?;
    let std = std::f64::consts::SQRT_2 * width.f64();
    let cap = sigma.f64() * width.f64();
    let normal = Normal::new(0.0, std).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = (0..n)
        .map(|_| {
            let s: f64 = normal.sample(&mut rng);
            if s.abs() > cap {
                T::zero()
            } else {
                T::lit(s)
            }
        })
        .collect();
    Ok(TimeSamples {
        times,
        width,
        sigma,
        seed,
    })
}

/// Probability of the atom at zero, `P(|s| > σT) = erfc(σ/2)`.
pub fn zero_atom_mass(sigma: f64) -> f64 {
    libm::erfc(sigma / 2.0)
}

/// `F(x) = E[e^{ixt}]` for the truncated law: the zero atom plus
/// `∫_{-σT}^{σT} cos(xt) e^{-t²/4T²} / (2T√π) dt`, integrated by composite
/// Simpson on a fine grid.
pub fn characteristic_function(x: f64, width: f64, sigma: f64) -> f64 {
    let cap = sigma * width;
    let panels = 4096usize;
    let h = 2.0 * cap / panels as f64;
    let norm = 1.0 / (2.0 * width * std::f64::consts::PI.sqrt());
    let f = |t: f64| (x * t).cos() * (-t * t / (4.0 * width * width)).exp() * norm;
    let mut acc = f(-cap) + f(cap);
    for k in 1..panels {
        let t = -cap + k as f64 * h;
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(t);
    }
    zero_atom_mass(sigma) + acc * h / 3.0
}

/// Untruncated filter `e^{-x²T²}`.
pub fn gaussian_filter(x: f64, width: f64) -> f64 {
    (-(x * width).powi(2)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_and_deterministic() {
        let a = sample_times::<f64>(3.0, 1.5, 5000, 7).unwrap();
        let b = sample_times::<f64>(3.0, 1.5, 5000, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.times.iter().all(|t| t.abs() <= 4.5));
    }

    #[test]
    fn wide_truncation_variance() {
        let s = sample_times::<f64>(2.0, 10.0, 100_000, 3).unwrap();
        let var = s.times.iter().map(|t| t * t).sum::<f64>() / s.len() as f64;
        assert!((var / 8.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_atom_frequency() {
        let n = 100_000;
        let s = sample_times::<f64>(1.0, 1.0, n, 11).unwrap();
        let zeros = s.times.iter().filter(|&&t| t == 0.0).count() as f64 / n as f64;
        let p = zero_atom_mass(1.0);
        assert!((p - 0.4795).abs() < 1e-4);
        assert!((zeros - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn characteristic_function_limits() {
        // Total mass is one.
        assert!((characteristic_function(0.0, 2.0, 1.0) - 1.0).abs() < 1e-12);
        // Wide truncation reproduces the Gaussian filter.
        for x in [0.0, 0.1, 0.3, 0.7] {
            assert!((characteristic_function(x, 2.0, 12.0) - gaussian_filter(x, 2.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(sample_times::<f64>(0.0, 1.0, 10, 0).is_err());
        assert!(sample_times::<f64>(1.0, -1.0, 10, 0).is_err());
        assert!(sample_times::<f64>(1.0, 1.0, 0, 0).is_err());
    }
}
