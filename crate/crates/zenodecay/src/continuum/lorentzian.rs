//! Lorentzian peak fit: A·(Γ/2)² / ((E−E₀)² + (Γ/2)²) by Gauss–Newton with
//! Levenberg damping, initialized from the empirical peak.

use crate::error::{Error, Result};
use crate::tol::{LORENTZIAN_MAX_ITERS, LORENTZIAN_STEP_TOL};
use nalgebra::{Matrix3, Vector3};

/// Converged Lorentzian parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub rms_residual: f64,
    pub iterations: usize,
}

fn lorentz(e: f64, center: f64, hwhm: f64, amp: f64) -> f64 {
    amp * hwhm * hwhm / ((e - center) * (e - center) + hwhm * hwhm)
}

fn cost(points: &[(f64, f64)], p: &[f64; 3]) -> f64 {
    points
        .iter()
        .map(|&(e, y)| {
            let r = lorentz(e, p[0], p[1], p[2]) - y;
            r * r
        })
        .sum()
}

/// Nonlinear least squares of the Lorentzian model over (E, population)
/// samples.
///
/// Initialization: center at the empirical peak, width from the half-max
/// crossings, amplitude from the peak value. Iteration stops when the
/// relative parameter step drops below 1e-10; more than 200 iterations is
/// reported as non-convergence.
pub fn fit_lorentzian(points: &[(f64, f64)]) -> Result<LorentzianFit> {
    if points.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "need at least 5 points for a Lorentzian fit, got {}",
            points.len()
        )));
    }
    let (peak_idx, &(peak_e, peak_y)) = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty");
    let min_y = points.iter().map(|&(_, y)| y).fold(f64::INFINITY, f64::min);
    if !(peak_y > 0.0) || peak_y - min_y <= 0.0 {
        return Err(Error::InvalidInput(
            "flat or non-positive input has no peak to fit".into(),
        ));
    }

    let mut p = [peak_e, initial_hwhm(points, peak_idx, peak_y), peak_y];
    let mut lambda = 1e-3;
    let mut best = cost(points, &p);
    for iteration in 1..=LORENTZIAN_MAX_ITERS {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for &(e, y) in points {
            let de = e - p[0];
            let denom = de * de + p[1] * p[1];
            let f = p[2] * p[1] * p[1] / denom;
            let r = f - y;
            let grad = [
                p[2] * p[1] * p[1] * 2.0 * de / (denom * denom),
                2.0 * p[2] * p[1] * de * de / (denom * denom),
                p[1] * p[1] / denom,
            ];
            for i in 0..3 {
                for j in 0..3 {
                    jtj[(i, j)] += grad[i] * grad[j];
                }
                jtr[i] += grad[i] * r;
            }
        }
        let mut damped = jtj;
        for i in 0..3 {
            damped[(i, i)] *= 1.0 + lambda;
        }
        let Some(step) = damped.lu().solve(&(-jtr)) else {
            lambda *= 10.0;
            if lambda > 1e12 {
                return Err(Error::NoConvergence(iteration));
            }
            continue;
        };
        let candidate = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
        let c = cost(points, &candidate);
        if c < best {
            let rel = step.norm() / Vector3::from_column_slice(&p).norm().max(f64::MIN_POSITIVE);
            p = candidate;
            best = c;
            lambda = (lambda * 0.3).max(1e-14);
            if rel < LORENTZIAN_STEP_TOL {
                return Ok(LorentzianFit {
                    center: p[0],
                    fwhm: 2.0 * p[1].abs(),
                    amplitude: p[2],
                    rms_residual: (best / points.len() as f64).sqrt(),
                    iterations: iteration,
                });
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                // damping saturated: the step is already numerically zero
                return Ok(LorentzianFit {
                    center: p[0],
                    fwhm: 2.0 * p[1].abs(),
                    amplitude: p[2],
                    rms_residual: (best / points.len() as f64).sqrt(),
                    iterations: iteration,
                });
            }
        }
    }
    Err(Error::NoConvergence(LORENTZIAN_MAX_ITERS))
}

/// Half width at half maximum from the half-max crossings around the peak,
/// by linear interpolation; falls back to the distance to the data edge on
/// a side with no crossing.
fn initial_hwhm(points: &[(f64, f64)], peak_idx: usize, peak_y: f64) -> f64 {
    let half = peak_y / 2.0;
    let peak_e = points[peak_idx].0;
    let mut left = None;
    for k in (1..=peak_idx).rev() {
        let (e0, y0) = points[k - 1];
        let (e1, y1) = points[k];
        if y0 < half && y1 >= half {
            left = Some(e0 + (half - y0) / (y1 - y0) * (e1 - e0));
            break;
        }
    }
    let mut right = None;
    for k in peak_idx..points.len().saturating_sub(1) {
        let (e0, y0) = points[k];
        let (e1, y1) = points[k + 1];
        if y0 >= half && y1 < half {
            right = Some(e0 + (half - y0) / (y1 - y0) * (e1 - e0));
            break;
        }
    }
    let span_left = points.first().map(|&(e, _)| (peak_e - e).abs()).unwrap_or(1.0);
    let span_right = points.last().map(|&(e, _)| (e - peak_e).abs()).unwrap_or(1.0);
    let l = left.map(|e| peak_e - e).unwrap_or(span_left.max(f64::MIN_POSITIVE));
    let r = right.map(|e| e - peak_e).unwrap_or(span_right.max(f64::MIN_POSITIVE));
    (0.5 * (l + r)).max(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn samples(center: f64, fwhm: f64, amp: f64, n: usize, span: f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let e = center - span / 2.0 + span * k as f64 / (n - 1) as f64;
                (e, lorentz(e, center, fwhm / 2.0, amp))
            })
            .collect()
    }

    #[test]
    fn recovers_exact_lorentzian() {
        let pts = samples(0.0, 0.1, 1.0, 101, 2.0);
        let fit = fit_lorentzian(&pts).unwrap();
        assert_relative_eq!(fit.center, 0.0, epsilon = 1e-8);
        assert_relative_eq!(fit.fwhm, 0.1, epsilon = 1e-8);
        assert_relative_eq!(fit.amplitude, 1.0, epsilon = 1e-8);
        assert!(fit.rms_residual < 1e-10);
    }

    #[test]
    fn recovers_off_center_peak() {
        let pts = samples(0.37, 0.25, 0.02, 81, 3.0);
        let fit = fit_lorentzian(&pts).unwrap();
        assert_relative_eq!(fit.center, 0.37, epsilon = 1e-7);
        assert_relative_eq!(fit.fwhm, 0.25, epsilon = 1e-7);
    }

    #[test]
    fn symmetric_input_centers_on_symmetry_point() {
        let pts = samples(1.5, 0.4, 1.0, 41, 4.0);
        let fit = fit_lorentzian(&pts).unwrap();
        assert!((fit.center - 1.5).abs() < 1e-10);
    }

    #[test]
    fn rejects_flat_and_tiny_inputs() {
        let flat: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 1.0)).collect();
        assert!(matches!(
            fit_lorentzian(&flat),
            Err(Error::InvalidInput(_))
        ));
        let few = samples(0.0, 0.1, 1.0, 4, 1.0);
        assert!(matches!(fit_lorentzian(&few), Err(Error::InvalidInput(_))));
        let dark: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 0.0)).collect();
        assert!(matches!(
            fit_lorentzian(&dark),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn handles_noisy_peak() {
        // deterministic pseudo-noise around a known line
        let pts: Vec<(f64, f64)> = samples(0.0, 0.2, 1.0, 201, 2.0)
            .into_iter()
            .enumerate()
            .map(|(k, (e, y))| {
                let wobble = ((k as f64 * 12.9898).sin() * 43758.5453).fract() - 0.5;
                (e, (y + 0.01 * wobble).max(0.0))
            })
            .collect();
        let fit = fit_lorentzian(&pts).unwrap();
        assert!((fit.fwhm - 0.2).abs() / 0.2 < 0.05, "fwhm {}", fit.fwhm);
    }
}
