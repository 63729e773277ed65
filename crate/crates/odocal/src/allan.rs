//! Allan-deviation noise identification.
//!
//! [`allan_deviation`] computes the overlapping Allan deviation of a
//! uniformly sampled scalar stream on a caller-supplied grid of cluster
//! times, and [`fit_noise_params`] reads the white-noise density (the
//! `tau^-1/2` segment evaluated at 1 s) and the bias instability (curve
//! minimum divided by 0.664) off the resulting curve.
//!
//! Per-tau computations are independent and run on the rayon pool when the
//! `parallel` feature is enabled; each tau's sum is accumulated in sample
//! order either way, so results are bit-identical across both builds.

use crate::exec::map_collect;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AllanError {
    /// The stream is too short for the requested cluster time.
    #[error(
        "insufficient data: tau {tau} s leaves {n_clusters} clusters (need >= {MIN_CLUSTERS})"
    )]
    InsufficientData { tau: f64, n_clusters: usize },
    /// Timestamps deviate from a uniform grid by more than 1%.
    #[error("non-uniform sampling: interval at index {index} is {dt} s, expected {expected} s")]
    NonUniformSampling {
        index: usize,
        dt: f64,
        expected: f64,
    },
    /// No contiguous run of at least 5 points has log-log slope in
    /// [-0.6, -0.4], so the white-noise density cannot be read off.
    #[error("no white-noise region: no 5-point run with log-log slope in [-0.6, -0.4]")]
    NoWhiteNoiseRegion,
}

/// Minimum number of non-overlapping clusters a retained point must have;
/// bounds the estimator's relative error.
pub const MIN_CLUSTERS: usize = 9;

/// Conversion factor from the Allan-deviation minimum to the bias
/// instability coefficient (flat-region read-off convention).
pub const BIAS_INSTABILITY_FACTOR: f64 = 0.664;

/// One point of an Allan-deviation curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllanPoint {
    /// Cluster time, seconds.
    pub tau: f64,
    /// Allan deviation at `tau`, in the units of the input signal.
    pub adev: f64,
    /// Number of non-overlapping clusters of length `tau` in the stream.
    pub n_clusters: usize,
}

/// Noise parameters read off an Allan-deviation curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllanFit {
    /// White-noise density, signal units per √Hz.
    pub white_noise_density: f64,
    /// Bias instability, signal units.
    pub bias_instability: f64,
    /// Cluster time at the curve minimum, seconds.
    pub tau_at_minimum: f64,
}

/// Overlapping Allan deviation of `samples` at each requested cluster time.
///
/// Cluster times are snapped to the nearest integer multiple of the sample
/// interval; the snapped tau is reported in the output. Every requested tau
/// must leave at least [`MIN_CLUSTERS`] non-overlapping clusters.
pub fn allan_deviation(
    samples: &[f64],
    sample_rate: f64,
    taus: &[f64],
) -> Result<Vec<AllanPoint>, AllanError> {
    let n = samples.len();
    let dt = 1.0 / sample_rate;

    // Validate every tau up front so the error is deterministic regardless
    // of evaluation order.
    let mut ms = Vec::with_capacity(taus.len());
    for &tau in taus {
        let m = (tau * sample_rate).round() as usize;
        let m = m.max(1);
        let n_clusters = n / m;
        if n_clusters < MIN_CLUSTERS || n < 2 * m {
            return Err(AllanError::InsufficientData { tau, n_clusters });
        }
        ms.push(m);
    }

    // Integrated (phase) sequence with a leading zero: theta_k is the
    // integral of the signal over the first k samples. The mean is removed
    // first; it cancels exactly in the second differences, and keeping it
    // out of the running sum avoids large-magnitude cancellation.
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut phase = Vec::with_capacity(n + 1);
    phase.push(0.0);
    let mut acc = 0.0;
    for &y in samples {
        acc += (y - mean) * dt;
        phase.push(acc);
    }

    let points = map_collect(&ms, |&m| {
        let tau = m as f64 * dt;
        let p = phase.len();
        let terms = p - 2 * m;
        let mut sum = 0.0;
        for k in 0..terms {
            let d = phase[k + 2 * m] - 2.0 * phase[k + m] + phase[k];
            sum += d * d;
        }
        let var = sum / (2.0 * tau * tau * terms as f64);
        AllanPoint {
            tau,
            adev: var.sqrt(),
            n_clusters: n / m,
        }
    });
    Ok(points)
}

/// Logarithmic tau grid, 10 points per decade, from two sample intervals up
/// to a tenth of the stream length, deduplicated after snapping to integer
/// multiples of the sample interval.
pub fn default_taus(sample_rate: f64, n_samples: usize) -> Vec<f64> {
    let dt = 1.0 / sample_rate;
    let tau_min = 2.0 * dt;
    let tau_max = n_samples as f64 * dt / 10.0;
    let mut taus = Vec::new();
    if tau_max <= tau_min {
        return taus;
    }
    let decades = (tau_max / tau_min).log10();
    let steps = (decades * 10.0).ceil() as usize;
    let mut last_m = 0usize;
    for i in 0..=steps {
        let tau = tau_min * 10f64.powf(i as f64 / 10.0);
        if tau > tau_max {
            break;
        }
        let m = (tau * sample_rate).round() as usize;
        if m > last_m {
            taus.push(m as f64 * dt);
            last_m = m;
        }
    }
    taus
}

/// Checks that timestamps lie on a uniform grid (within 1% per interval)
/// and returns the implied sample rate.
pub fn uniform_rate(times: &[f64]) -> Result<f64, AllanError> {
    assert!(times.len() >= 2, "need at least two timestamps");
    let expected = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (i, w) in times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        if (dt - expected).abs() > 0.01 * expected {
            return Err(AllanError::NonUniformSampling {
                index: i,
                dt,
                expected,
            });
        }
    }
    Ok(1.0 / expected)
}

/// Reads white-noise density and bias instability off an Allan curve.
///
/// The white-noise segment is the longest contiguous run of points whose
/// local log-log slopes all lie in [-0.6, -0.4]; the model
/// `adev = N / sqrt(tau)` is least-squares fitted over that run, and `N`
/// (the value at 1 s) is reported. The bias instability is
/// `min(adev) / 0.664`.
pub fn fit_noise_params(curve: &[AllanPoint]) -> Result<AllanFit, AllanError> {
    // Local slopes between consecutive points; out-of-range or undefined
    // slopes break a run.
    let in_range = |i: usize| -> bool {
        let (a, b) = (&curve[i], &curve[i + 1]);
        if a.adev <= 0.0 || b.adev <= 0.0 || a.tau <= 0.0 || b.tau <= 0.0 {
            return false;
        }
        let slope = (b.adev.ln() - a.adev.ln()) / (b.tau.ln() - a.tau.ln());
        (-0.6..=-0.4).contains(&slope)
    };

    let mut best: Option<(usize, usize)> = None; // [start, end] point indices
    let mut run_start = None;
    let n_slopes = curve.len().saturating_sub(1);
    for i in 0..=n_slopes {
        if i < n_slopes && in_range(i) {
            run_start.get_or_insert(i);
        } else if let Some(s) = run_start.take() {
            let span = (s, i); // points s..=i
            if best.is_none() || span.1 - span.0 > best.unwrap().1 - best.unwrap().0 {
                best = Some(span);
            }
        }
    }
    let (s, e) = best.ok_or(AllanError::NoWhiteNoiseRegion)?;
    if e - s + 1 < 5 {
        return Err(AllanError::NoWhiteNoiseRegion);
    }

    // LS fit with the slope pinned to -1/2: ln(adev) = ln(N) - ln(tau)/2.
    let mut acc = 0.0;
    for p in &curve[s..=e] {
        acc += p.adev.ln() + 0.5 * p.tau.ln();
    }
    let white = (acc / (e - s + 1) as f64).exp();

    let min_pt = curve
        .iter()
        .min_by(|a, b| a.adev.partial_cmp(&b.adev).unwrap())
        .ok_or(AllanError::NoWhiteNoiseRegion)?;

    Ok(AllanFit {
        white_noise_density: white,
        bias_instability: min_pt.adev / BIAS_INSTABILITY_FACTOR,
        tau_at_minimum: min_pt.tau,
    })
}
