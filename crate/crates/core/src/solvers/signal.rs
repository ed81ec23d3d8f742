use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Construction parameters for a multi-scale test vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDescriptor {
    /// `(wavenumber, amplitude)` pairs, each contributing `a·sin(2πk·i/n)`.
    pub waves: Vec<(usize, f64)>,
    /// Bump centre as a fraction of `n`.
    pub bump_center: f64,
    /// Bump standard deviation as a fraction of `n`.
    pub bump_width: f64,
    pub bump_amplitude: f64,
}

impl Default for SignalDescriptor {
    fn default() -> Self {
        Self {
            waves: vec![(1, 1.0), (4, 0.5), (16, 0.25)],
            bump_center: 1.0 / 3.0,
            bump_width: 1.0 / 20.0,
            bump_amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSignal {
    pub values: Vec<f64>,
    pub descriptor: SignalDescriptor,
}

impl TestSignal {
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

pub fn make_test_signal(n: usize, descriptor: &SignalDescriptor) -> Result<TestSignal> {
    if n < 8 {
        return Err(Error::param(format!("test signal needs n >= 8, got {n}")));
    }
    if let Some(&(k, _)) = descriptor.waves.iter().find(|(k, _)| 2 * k >= n) {
        return Err(Error::param(format!(
            "wavenumber {k} is not resolvable on {n} points"
        )));
    }
    if !(descriptor.bump_width > 0.0) {
        return Err(Error::param("bump width must be positive"));
    }
    let nf = n as f64;
    let center = descriptor.bump_center * nf;
    let sigma = descriptor.bump_width * nf;
    let values = (0..n)
        .map(|i| {
            let t = i as f64;
            let waves: f64 = descriptor
                .waves
                .iter()
                .map(|&(k, a)| a * (2.0 * PI * k as f64 * t / nf).sin())
                .sum();
            let z = (t - center) / sigma;
            waves + descriptor.bump_amplitude * (-0.5 * z * z).exp()
        })
        .collect();
    Ok(TestSignal {
        values,
        descriptor: descriptor.clone(),
    })
}

/// Magnitude of the `k`-th discrete Fourier coefficient, normalized by `n/2`
/// so a unit sinusoid at wavenumber `k` has amplitude 1.
pub fn fourier_amplitude(values: &[f64], k: usize) -> f64 {
    let n = values.len() as f64;
    let (re, im) = values.iter().enumerate().fold((0.0, 0.0), |(re, im), (i, &v)| {
        let angle = 2.0 * PI * k as f64 * i as f64 / n;
        (re + v * angle.cos(), im - v * angle.sin())
    });
    (re * re + im * im).sqrt() / (n / 2.0)
}
