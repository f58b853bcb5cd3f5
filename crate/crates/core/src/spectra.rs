//! Dirichlet-Laplacian spectra of the supported domains.
//!
//! A [`DomainSpectrum`] is a lazily extended, nondecreasing list of eigenvalues
//! (with multiplicity). Generated values are cached behind a mutex so that
//! concurrent readers observe the same prefix.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};
use std::f64::consts::PI;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::bessel;
use crate::error::{Result, SpecflowError};

/// The domain whose Dirichlet eigenvalues drive everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// `(0, length)`.
    Interval { length: f64 },
    /// Product of intervals with the given side lengths.
    Box { sides: Vec<f64> },
    /// Disc of the given radius in the plane.
    Disc { radius: f64 },
    /// Explicit nondecreasing list of positive eigenvalues.
    Custom {
        values: Vec<f64>,
        #[serde(default = "one")]
        dimension: usize,
    },
}

fn one() -> usize {
    1
}

impl DomainSpec {
    pub fn interval(length: f64) -> Self {
        Self::Interval { length }
    }

    pub fn unit_interval_pi() -> Self {
        Self::Interval { length: PI }
    }

    pub fn boxed(sides: &[f64]) -> Self {
        Self::Box {
            sides: sides.to_vec(),
        }
    }

    pub fn disc(radius: f64) -> Self {
        Self::Disc { radius }
    }

    pub fn custom(values: &[f64]) -> Self {
        Self::Custom {
            values: values.to_vec(),
            dimension: 1,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::Interval { .. } => 1,
            Self::Box { sides } => sides.len(),
            Self::Disc { .. } => 2,
            Self::Custom { dimension, .. } => *dimension,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SpecflowError::InvalidDomain(format!(
                    "{what} must be positive and finite, got {v}"
                )))
            }
        };
        match self {
            Self::Interval { length } => positive(*length, "interval length"),
            Self::Box { sides } => {
                if sides.is_empty() {
                    return Err(SpecflowError::InvalidDomain(
                        "box needs at least one side".into(),
                    ));
                }
                sides.iter().try_for_each(|&s| positive(s, "box side"))
            }
            Self::Disc { radius } => positive(*radius, "disc radius"),
            Self::Custom { values, dimension } => {
                if values.is_empty() {
                    return Err(SpecflowError::InvalidDomain(
                        "custom spectrum is empty".into(),
                    ));
                }
                if *dimension == 0 {
                    return Err(SpecflowError::InvalidDomain(
                        "dimension must be positive".into(),
                    ));
                }
                values
                    .iter()
                    .try_for_each(|&v| positive(v, "custom eigenvalue"))?;
                if values.windows(2).any(|w| w[1] < w[0]) {
                    return Err(SpecflowError::InvalidDomain(
                        "custom eigenvalues must be nondecreasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Nondecreasing Dirichlet eigenvalues `alpha_1 <= alpha_2 <= ...` of a domain,
/// optionally for the shrunk domain `r * U`.
#[derive(Debug)]
pub struct DomainSpectrum {
    source: DomainSpec,
    /// Cumulative shrink factor `r`; emitted values are `base / r^2`.
    radius_scale: f64,
    cache: Mutex<Vec<f64>>,
}

impl Clone for DomainSpectrum {
    fn clone(&self) -> Self {
        Self {
            source: self.source.clone(),
            radius_scale: self.radius_scale,
            cache: Mutex::new(self.base_cache_snapshot()),
        }
    }
}

impl PartialEq for DomainSpectrum {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.radius_scale == other.radius_scale
    }
}

/// Build the spectrum of a validated domain.
pub fn spectrum(spec: DomainSpec) -> Result<DomainSpectrum> {
    spec.validate()?;
    Ok(DomainSpectrum {
        source: spec,
        radius_scale: 1.0,
        cache: Mutex::new(Vec::new()),
    })
}

impl DomainSpectrum {
    pub fn source(&self) -> &DomainSpec {
        &self.source
    }

    pub fn radius_scale(&self) -> f64 {
        self.radius_scale
    }

    /// Number of eigenvalues available, `None` when unbounded.
    pub fn len_hint(&self) -> Option<usize> {
        match &self.source {
            DomainSpec::Custom { values, .. } => Some(values.len()),
            _ => None,
        }
    }

    /// First `n` eigenvalues.
    pub fn take(&self, n: usize) -> Result<Vec<f64>> {
        let base = self.base_prefix(n)?;
        let s2 = self.radius_scale * self.radius_scale;
        Ok(base.into_iter().map(|v| v / s2).collect())
    }

    /// The `k`-th eigenvalue, 1-based.
    pub fn alpha(&self, k: usize) -> Result<f64> {
        assert!(k >= 1, "eigenvalue index is 1-based");
        let base = {
            let cached = self.cache.lock().expect("spectrum cache poisoned");
            cached.get(k - 1).copied()
        };
        let base = match base {
            Some(v) => v,
            None => self.base_prefix(k)?[k - 1],
        };
        Ok(base / (self.radius_scale * self.radius_scale))
    }

    /// Smallest `k` with `alpha_k > bound`.
    pub fn first_index_above(&self, bound: f64) -> Result<usize> {
        let mut k = 1;
        loop {
            if self.alpha(k)? > bound {
                return Ok(k);
            }
            k += 1;
        }
    }

    /// Spectrum of `r * U`: every eigenvalue divided by `r^2`.
    pub fn scale(&self, r: f64) -> Result<DomainSpectrum> {
        if !(r.is_finite() && r > 0.0) {
            return Err(SpecflowError::InvalidDomain(format!(
                "scaling factor must be positive, got {r}"
            )));
        }
        Ok(DomainSpectrum {
            source: self.source.clone(),
            radius_scale: self.radius_scale * r,
            cache: Mutex::new(self.base_cache_snapshot()),
        })
    }

    fn base_cache_snapshot(&self) -> Vec<f64> {
        self.cache.lock().expect("spectrum cache poisoned").clone()
    }

    fn base_prefix(&self, n: usize) -> Result<Vec<f64>> {
        let mut cached = self.cache.lock().expect("spectrum cache poisoned");
        if cached.len() < n {
            let want = n.max(2 * cached.len()).max(16);
            *cached = generate(&self.source, want)?;
        }
        if cached.len() < n {
            return Err(SpecflowError::SpectrumExhausted {
                available: cached.len(),
                requested: n,
            });
        }
        Ok(cached[..n].to_vec())
    }
}

/// Unscaled eigenvalues; Custom lists may come back shorter than `n`.
fn generate(spec: &DomainSpec, n: usize) -> Result<Vec<f64>> {
    Ok(match spec {
        DomainSpec::Interval { length } => (1..=n)
            .map(|k| {
                let w = k as f64 * PI / length;
                w * w
            })
            .collect(),
        DomainSpec::Box { sides } => box_eigenvalues(sides, n),
        DomainSpec::Disc { radius } => disc_eigenvalues(*radius, n),
        DomainSpec::Custom { values, .. } => values.iter().take(n).copied().collect(),
    })
}

#[derive(PartialEq)]
struct Frontier {
    value: f64,
    modes: Vec<usize>,
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| self.modes.cmp(&other.modes))
    }
}

fn box_value(sides: &[f64], modes: &[usize]) -> f64 {
    modes
        .iter()
        .zip(sides)
        .map(|(&k, &l)| {
            let w = k as f64 * PI / l;
            w * w
        })
        .sum()
}

/// Lazy k-way merge over mode tuples. Each tuple is reached along exactly one
/// path: only coordinates at or after the last raised one may be raised.
fn box_eigenvalues(sides: &[f64], n: usize) -> Vec<f64> {
    let dim = sides.len();
    let mut heap = BinaryHeap::new();
    let start = vec![1usize; dim];
    heap.push(Reverse(Frontier {
        value: box_value(sides, &start),
        modes: start,
    }));
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let Reverse(top) = heap.pop().expect("box frontier never empties");
        let last_raised = top.modes.iter().rposition(|&k| k > 1).unwrap_or(0);
        for i in last_raised..dim {
            let mut next = top.modes.clone();
            next[i] += 1;
            heap.push(Reverse(Frontier {
                value: box_value(sides, &next),
                modes: next,
            }));
        }
        out.push(top.value);
    }
    out
}

/// Disc eigenvalues `(j_{nm}/R)^2`, angular orders `n >= 1` emitted twice.
fn disc_eigenvalues(radius: f64, n: usize) -> Vec<f64> {
    // Weyl: about x^2/4 eigenvalues with j < x on the unit disc
    let mut limit = (2.0 * (n as f64).sqrt() * 1.1 + 4.0).max(8.0);
    loop {
        let mut modes: BTreeSet<(OrdF64, usize, usize)> = BTreeSet::new();
        let mut order = 0usize;
        // j_{n,1} > n, so orders at or above the limit contribute nothing
        while (order as f64) < limit {
            for (m, z) in bessel::zeros_below(order, limit).into_iter().enumerate() {
                modes.insert((OrdF64(z), order, m + 1));
            }
            order += 1;
        }
        let count: usize = modes
            .iter()
            .map(|&(_, order, _)| if order == 0 { 1 } else { 2 })
            .sum();
        if count >= n {
            let mut out = Vec::with_capacity(count);
            for (z, order, _) in modes {
                let v = (z.0 / radius) * (z.0 / radius);
                out.push(v);
                if order > 0 {
                    out.push(v);
                }
            }
            out.truncate(n);
            return out;
        }
        limit *= 1.4;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_pi_is_squares() {
        let s = spectrum(DomainSpec::unit_interval_pi()).unwrap();
        let v = s.take(6).unwrap();
        for (k, a) in v.iter().enumerate() {
            let expected = ((k + 1) * (k + 1)) as f64;
            assert!((a - expected).abs() <= 1e-12 * expected);
        }
        assert_eq!(s.take(3).unwrap(), s.take(3).unwrap());
    }

    #[test]
    fn square_box_multiplicities() {
        let s = spectrum(DomainSpec::boxed(&[PI, PI])).unwrap();
        let v = s.take(8).unwrap();
        let expected = [2.0, 5.0, 5.0, 8.0, 10.0, 10.0, 13.0, 13.0];
        for (a, e) in v.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn unit_disc_leading_values() {
        let s = spectrum(DomainSpec::disc(1.0)).unwrap();
        let v = s.take(3).unwrap();
        let b01 = bessel::bessel_zero(0, 1).unwrap();
        let b11 = bessel::bessel_zero(1, 1).unwrap();
        assert!((v[0] - b01 * b01).abs() < 1e-12);
        assert!((v[0] - 5.7832).abs() < 1e-4);
        assert!(5.0 < v[0] && v[0] < 6.0);
        assert!((v[1] - 14.6820).abs() < 1e-4);
        assert_eq!(v[1], b11 * b11);
        assert_eq!(v[2], v[1]);
    }

    #[test]
    fn custom_echo_and_exhaustion() {
        let s = spectrum(DomainSpec::custom(&[2.0, 2.0, 7.0])).unwrap();
        assert_eq!(s.take(2).unwrap(), vec![2.0, 2.0]);
        assert!(matches!(
            s.take(4),
            Err(SpecflowError::SpectrumExhausted {
                available: 3,
                requested: 4
            })
        ));
    }

    #[test]
    fn invalid_domains() {
        assert!(spectrum(DomainSpec::interval(0.0)).is_err());
        assert!(spectrum(DomainSpec::interval(-1.0)).is_err());
        assert!(spectrum(DomainSpec::boxed(&[1.0, 0.0])).is_err());
        assert!(spectrum(DomainSpec::disc(f64::NAN)).is_err());
        assert!(spectrum(DomainSpec::custom(&[0.0, 1.0])).is_err());
        assert!(spectrum(DomainSpec::custom(&[3.0, 1.0])).is_err());
        assert!(spectrum(DomainSpec::custom(&[])).is_err());
    }

    #[test]
    fn scaling() {
        let s = spectrum(DomainSpec::unit_interval_pi()).unwrap();
        let half = s.scale(0.5).unwrap();
        let v = half.take(3).unwrap();
        for (a, e) in v.iter().zip([4.0, 16.0, 36.0]) {
            assert!((a - e).abs() < 1e-11);
        }
        assert_eq!(s.scale(1.0).unwrap().take(5).unwrap(), s.take(5).unwrap());
        assert!(s.scale(0.0).is_err());

        let d = spectrum(DomainSpec::disc(1.0)).unwrap();
        let b01 = bessel::bessel_zero(0, 1).unwrap();
        let r = 0.3;
        assert!((d.scale(r).unwrap().alpha(1).unwrap() - (b01 / r).powi(2)).abs() < 1e-10);
    }

    #[test]
    fn first_index_above() {
        let s = spectrum(DomainSpec::unit_interval_pi()).unwrap();
        assert_eq!(s.first_index_above(5.5).unwrap(), 3);
        assert_eq!(s.first_index_above(0.0).unwrap(), 1);
    }
}
