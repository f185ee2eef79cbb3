// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature.

use std::collections::BinaryHeap;

use thiserror::Error;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
    #[error("subdivision limit reached (estimate {value}, error {error:e})")]
    SubdivisionLimit { value: f64, error: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-13,
            rel: 1e-12,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Segment, QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |f: &mut F, x: f64| -> Result<f64, QuadratureError> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadratureError::NonFinite { x })
        }
    };
    let fc = eval(f, center)?;
    let mut k = fc * WGK[10];
    let mut g = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let s = eval(f, center - dx)? + eval(f, center + dx)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    let value = k * half;
    let error = ((k - g) * half).abs();
    Ok(Segment { a, b, value, error })
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<Integral, QuadratureError> {
    integrate_with_breaks(f, a, b, &[], tol)
}

/// Integrate `f` over `[a, b]`, splitting at the interior `breaks` first.
///
/// Kinks or jumps of the integrand should be passed as breaks.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Integral, QuadratureError> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut nodes = vec![lo];
    let mut interior: Vec<f64> = breaks.iter().cloned().filter(|&x| x > lo && x < hi).collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    nodes.extend(interior);
    nodes.push(hi);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in nodes.windows(2) {
        heap.push(kronrod(&mut f, w[0], w[1])?);
        evaluations += 21;
    }
    loop {
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(Integral {
                value: sign * value,
                error,
                evaluations,
            });
        }
        if heap.len() >= tol.max_intervals {
            return Err(QuadratureError::SubdivisionLimit {
                value: sign * value,
                error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine precision; accept it as is
            let mut frozen = worst;
            frozen.error = 0.0;
            heap.push(frozen);
            continue;
        }
        heap.push(kronrod(&mut f, worst.a, mid)?);
        heap.push(kronrod(&mut f, mid, worst.b)?);
        evaluations += 42;
    }
}

/// Cumulative integrals `∫_{x_0}^{x_k} f` at every node of a sorted grid.
pub fn cumulative<F: FnMut(f64) -> f64>(
    mut f: F,
    grid: &[f64],
    tol: Tolerance,
) -> Result<Vec<f64>, QuadratureError> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    if grid.is_empty() {
        return Ok(out);
    }
    out.push(0.0);
    for w in grid.windows(2) {
        acc += integrate(&mut f, w[0], w[1], tol)?.value;
        out.push(acc);
    }
    Ok(out)
}

/// Trapezoidal cumulative integral of samples `y` on grid `x`.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    if x.is_empty() {
        return out;
    }
    out.push(0.0);
    for k in 1..x.len() {
        acc += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-14);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(f64::sin, PI, 0.0, Tolerance::default()).unwrap();
        assert!((r.value + 2.0).abs() < 1e-13);
    }

    #[test]
    fn sqrt_endpoint_and_kink() {
        let r = integrate(f64::sqrt, 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12);
        let k = integrate_with_breaks(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], Tolerance::default())
            .unwrap();
        assert!((k.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn integrable_inverse_sqrt() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::new(1e-10, 1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn non_finite_is_reported() {
        let r = integrate(|x: f64| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, Tolerance::default());
        assert!(matches!(r, Err(QuadratureError::NonFinite { .. })));
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let c = cumulative(f64::exp, &grid, Tolerance::default()).unwrap();
        for (x, v) in grid.iter().zip(&c) {
            assert!((v - (x.exp() - 1.0)).abs() < 1e-13);
        }
    }
}
