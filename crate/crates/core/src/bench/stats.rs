//! Mean, amplitude and frequency of the last full oscillation of a signal.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillationStats {
    pub mean: f64,
    pub amplitude: f64,
    pub frequency: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Oscillation {
    Steady(OscillationStats),
    NoSteadyOscillations,
}

impl std::fmt::Display for Oscillation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Oscillation::Steady(s) => write!(f, "mean {:.4e}, amplitude {:.4e}, frequency {:.4}", s.mean, s.amplitude, s.frequency),
            Oscillation::NoSteadyOscillations => write!(f, "no steady oscillations"),
        }
    }
}

/// Crossing times of `level`, linearly interpolated, with `true` for upward
/// crossings.
fn crossings(t: &[f64], s: &[f64], level: f64) -> Vec<(f64, bool)> {
    let mut out = Vec::new();
    for i in 1..s.len() {
        let (a, b) = (s[i - 1] - level, s[i] - level);
        if (a < 0.0) != (b < 0.0) {
            let tc = t[i - 1] + (t[i] - t[i - 1]) * (-a) / (b - a);
            out.push((tc, b >= 0.0));
        }
    }
    out
}

/// Statistics of `signal` sampled at `times`, ignoring samples before
/// `skip_before`. The period is delimited by the last two same-direction
/// crossings of the mean-removed signal.
pub fn oscillation_stats(times: &[f64], signal: &[f64], skip_before: f64) -> Oscillation {
    let start = times.iter().position(|&t| t >= skip_before).unwrap_or(times.len());
    let (t, s) = (&times[start..], &signal[start..]);
    if s.len() < 3 || s.iter().any(|v| !v.is_finite()) {
        return Oscillation::NoSteadyOscillations;
    }
    let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi - lo <= 1e-14 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        return Oscillation::NoSteadyOscillations;
    }
    let mut level = 0.5 * (hi + lo);
    let mut result = Oscillation::NoSteadyOscillations;
    // the second pass uses the mean of the detected period
    for _ in 0..2 {
        let c = crossings(t, s, level);
        if c.len() < 3 {
            return Oscillation::NoSteadyOscillations;
        }
        let (t1, dir) = c[c.len() - 1];
        let Some(&(t0, _)) = c[..c.len() - 1].iter().rev().find(|e| e.1 == dir) else {
            return Oscillation::NoSteadyOscillations;
        };
        let (mut mx, mut mn) = (f64::NEG_INFINITY, f64::INFINITY);
        for (ti, si) in t.iter().zip(s) {
            if *ti >= t0 && *ti <= t1 {
                mx = mx.max(*si);
                mn = mn.min(*si);
            }
        }
        if !(t1 > t0) || !(mx > mn) {
            return Oscillation::NoSteadyOscillations;
        }
        let stats = OscillationStats { mean: 0.5 * (mx + mn), amplitude: 0.5 * (mx - mn), frequency: 1.0 / (t1 - t0) };
        level = stats.mean;
        result = Oscillation::Steady(stats);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sample(tau: f64, n: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (1..=n).map(|i| i as f64 * tau).collect();
        let s = t.iter().map(|&t| f(t)).collect();
        (t, s)
    }

    #[test]
    fn sine_at_two_hertz() {
        let (t, s) = sample(0.005, 1000, |t| (2.0 * PI * 2.0 * t).sin());
        let Oscillation::Steady(o) = oscillation_stats(&t, &s, 0.25) else { panic!() };
        assert!((o.frequency - 2.0).abs() <= 0.02);
        assert!(o.mean.abs() < 1e-3);
        assert!((o.amplitude - 1.0).abs() <= 0.01);
    }

    #[test]
    fn reported_signal_format() {
        let (t, s) = sample(0.005, 3200, |t| 1.23e-3 + 80.77e-3 * (4.0 * PI * t).sin());
        let Oscillation::Steady(o) = oscillation_stats(&t, &s, 0.8) else { panic!() };
        assert!((o.mean - 1.23e-3).abs() <= 0.01 * 1.23e-3, "{o:?}");
        assert!((o.amplitude - 80.77e-3).abs() <= 0.01 * 80.77e-3, "{o:?}");
        assert!((o.frequency - 2.0).abs() <= 0.02, "{o:?}");
    }

    #[test]
    fn degenerate_signals() {
        let (t, s) = sample(0.01, 100, |_| 0.3);
        assert_eq!(oscillation_stats(&t, &s, 0.0), Oscillation::NoSteadyOscillations);
        assert_eq!(oscillation_stats(&t, &s, 0.0).to_string(), "no steady oscillations");
        let (t, s) = sample(0.01, 100, |t| t * t);
        assert_eq!(oscillation_stats(&t, &s, 0.0), Oscillation::NoSteadyOscillations);
        // half a period only
        let (t, s) = sample(0.01, 40, |t| (PI * t).sin());
        assert_eq!(oscillation_stats(&t, &s, 0.0), Oscillation::NoSteadyOscillations);
    }

    proptest! {
        #[test]
        fn recovers_sampled_harmonics(f in 0.5f64..4.0, a in 1e-3f64..10.0, m in -5.0f64..5.0, phase in 0.0f64..6.28) {
            let tau = 1.0 / (200.0 * f);
            let (t, s) = sample(tau, 2000, |t| m + a * (2.0 * PI * f * t + phase).sin());
            let Oscillation::Steady(o) = oscillation_stats(&t, &s, 0.0) else { panic!() };
            prop_assert!((o.frequency - f).abs() <= 1e-3 * f);
            prop_assert!((o.amplitude - a).abs() <= 1e-3 * a);
            prop_assert!((o.mean - m).abs() <= 1e-3 * a);
            prop_assert!(o.amplitude >= 0.0);
        }
    }
}
