// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! Control trajectories `G(t)` with analytic derivative access.

/// A trajectory of control amplitudes over `[0, t_f]`.
pub trait ControlPath: Send + Sync {
    fn n_controls(&self) -> usize;

    fn duration(&self) -> f64;

    fn evaluate(&self, t: f64) -> Vec<f64>;

    fn derivative(&self, t: f64) -> Vec<f64>;

    /// Whether the path claims `Ġ(0) = Ġ(t_f) = 0`.
    fn boundary_smooth(&self) -> bool {
        false
    }

    /// Interior times where `Ġ` is not smooth; used to split quadratures.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<P: ControlPath + ?Sized> ControlPath for &P {
    fn n_controls(&self) -> usize {
        (**self).n_controls()
    }
    fn duration(&self) -> f64 {
        (**self).duration()
    }
    fn evaluate(&self, t: f64) -> Vec<f64> {
        (**self).evaluate(t)
    }
    fn derivative(&self, t: f64) -> Vec<f64> {
        (**self).derivative(t)
    }
    fn boundary_smooth(&self) -> bool {
        (**self).boundary_smooth()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Check `‖Ġ(0)‖, ‖Ġ(t_f)‖ ≤ 1e-9 · max_t ‖Ġ‖` on `n_samples` points.
pub fn is_boundary_smooth<P: ControlPath + ?Sized>(path: &P, n_samples: usize) -> bool {
    let tf = path.duration();
    let n = n_samples.max(3);
    let peak = (0..n)
        .map(|k| norm(&path.derivative(tf * k as f64 / (n - 1) as f64)))
        .fold(0.0, f64::max);
    let tol = 1e-9 * peak;
    norm(&path.derivative(0.0)) <= tol && norm(&path.derivative(tf)) <= tol
}

/// A path that stays at fixed controls.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPath {
    pub controls: Vec<f64>,
    pub t_f: f64,
}

impl ControlPath for ConstantPath {
    fn n_controls(&self) -> usize {
        self.controls.len()
    }
    fn duration(&self) -> f64 {
        self.t_f
    }
    fn evaluate(&self, _t: f64) -> Vec<f64> {
        self.controls.clone()
    }
    fn derivative(&self, _t: f64) -> Vec<f64> {
        vec![0.0; self.controls.len()]
    }
    fn boundary_smooth(&self) -> bool {
        true
    }
}

/// Straight line from `start` to `end` at uniform speed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPath {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub t_f: f64,
}

impl ControlPath for LinearPath {
    fn n_controls(&self) -> usize {
        self.start.len()
    }
    fn duration(&self) -> f64 {
        self.t_f
    }
    fn evaluate(&self, t: f64) -> Vec<f64> {
        let s = t / self.t_f;
        self.start
            .iter()
            .zip(&self.end)
            .map(|(a, b)| a + (b - a) * s)
            .collect()
    }
    fn derivative(&self, _t: f64) -> Vec<f64> {
        self.start
            .iter()
            .zip(&self.end)
            .map(|(a, b)| (b - a) / self.t_f)
            .collect()
    }
}

/// Smooth straight line: `G(t) = G₀ + (G₁ − G₀)·s(t/t_f)` with
/// `s(u) = u − sin(2πu)/(2π)`, so the velocity vanishes at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothRampPath {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub t_f: f64,
}

impl ControlPath for SmoothRampPath {
    fn n_controls(&self) -> usize {
        self.start.len()
    }
    fn duration(&self) -> f64 {
        self.t_f
    }
    fn evaluate(&self, t: f64) -> Vec<f64> {
        let u = t / self.t_f;
        let tau = std::f64::consts::TAU;
        let s = u - (tau * u).sin() / tau;
        self.start
            .iter()
            .zip(&self.end)
            .map(|(a, b)| a + (b - a) * s)
            .collect()
    }
    fn derivative(&self, t: f64) -> Vec<f64> {
        let u = t / self.t_f;
        let ds = (1.0 - (std::f64::consts::TAU * u).cos()) / self.t_f;
        self.start
            .iter()
            .zip(&self.end)
            .map(|(a, b)| (b - a) * ds)
            .collect()
    }
    fn boundary_smooth(&self) -> bool {
        true
    }
}

/// Natural cubic spline through sampled controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SplinePath {
    times: Vec<f64>,
    // per control: values and second derivatives at the knots
    values: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl SplinePath {
    /// `samples[k]` is the control vector at `times[k]`; times must be
    /// strictly increasing and start at zero.
    pub fn new(times: Vec<f64>, samples: &[Vec<f64>]) -> Self {
        assert!(times.len() >= 2 && times.len() == samples.len());
        let nc = samples[0].len();
        let values: Vec<Vec<f64>> = (0..nc)
            .map(|c| samples.iter().map(|s| s[c]).collect())
            .collect();
        let second = values.iter().map(|y| natural_second(&times, y)).collect();
        Self {
            times,
            values,
            second,
        }
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.times.len();
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(k) => k.min(n - 2),
            Err(0) => 0,
            Err(k) => (k - 1).min(n - 2),
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

fn natural_second(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior knots
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let a = h0 / 6.0;
        let b = (h0 + h1) / 3.0;
        let c = h1 / 6.0;
        let d = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        let denom = b - a * c_prime[i - 1];
        c_prime[i] = c / denom;
        d_prime[i] = (d - a * d_prime[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

impl ControlPath for SplinePath {
    fn n_controls(&self) -> usize {
        self.values.len()
    }
    fn duration(&self) -> f64 {
        *self.times.last().unwrap()
    }
    fn evaluate(&self, t: f64) -> Vec<f64> {
        let k = self.locate(t);
        let (x0, x1) = (self.times[k], self.times[k + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        self.values
            .iter()
            .zip(&self.second)
            .map(|(y, m)| {
                a * y[k] + b * y[k + 1] + ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0
            })
            .collect()
    }
    fn derivative(&self, t: f64) -> Vec<f64> {
        let k = self.locate(t);
        let (x0, x1) = (self.times[k], self.times[k + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        self.values
            .iter()
            .zip(&self.second)
            .map(|(y, m)| {
                (y[k + 1] - y[k]) / h - (3.0 * a * a - 1.0) * h * m[k] / 6.0
                    + (3.0 * b * b - 1.0) * h * m[k + 1] / 6.0
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_ramp_has_zero_end_velocity() {
        let p = SmoothRampPath {
            start: vec![0.0, 1.0],
            end: vec![2.0, -1.0],
            t_f: 3.0,
        };
        assert!(is_boundary_smooth(&p, 101));
        let end = p.evaluate(3.0);
        assert!((end[0] - 2.0).abs() < 1e-15 && (end[1] + 1.0).abs() < 1e-15);
        let lin = LinearPath {
            start: vec![0.0],
            end: vec![1.0],
            t_f: 1.0,
        };
        assert!(!is_boundary_smooth(&lin, 11));
    }

    #[test]
    fn spline_reproduces_cubic_interior() {
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
        let samples: Vec<Vec<f64>> = times.iter().map(|t| vec![t.sin()]).collect();
        let s = SplinePath::new(times, &samples);
        for &t in &[0.33, 1.01, 1.57] {
            assert!((s.evaluate(t)[0] - f64::sin(t)).abs() < 1e-5);
            assert!((s.derivative(t)[0] - f64::cos(t)).abs() < 1e-3);
        }
    }
}
