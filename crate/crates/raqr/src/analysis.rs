//! Small curve-analysis helpers shared by scenario sweeps and tests:
//! feature widths of spectral lines and least-squares slopes for power-law
//! fits.

/// Full width at half maximum of the central feature of a sampled curve.
///
/// The feature amplitude is measured against a baseline taken from the two
/// endpoints, so the curve works for both peaks (transparency windows) and
/// dips (absorption features). Returns `None` when no half-level crossing
/// exists on one side of the extremum.
pub fn feature_fwhm(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 5 {
        return None;
    }
    let baseline = 0.5 * (ys[0] + ys[ys.len() - 1]);
    let (center, _) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| {
            (a.1 - baseline)
                .abs()
                .total_cmp(&(b.1 - baseline).abs())
        })?;
    let half = baseline + (ys[center] - baseline) / 2.0;
    let crossing = |mut range: Box<dyn Iterator<Item = usize>>| -> Option<f64> {
        let mut prev = range.next()?;
        for i in range {
            let (y1, y2) = (ys[prev], ys[i]);
            if (y1 - half) * (y2 - half) <= 0.0 {
                let (x1, x2) = (xs[prev], xs[i]);
                return Some(if y2 == y1 {
                    x1
                } else {
                    x1 + (half - y1) * (x2 - x1) / (y2 - y1)
                });
            }
            prev = i;
        }
        None
    };
    let left = crossing(Box::new((0..=center).rev()))?;
    let right = crossing(Box::new(center..xs.len()))?;
    Some((right - left).abs())
}

/// Least-squares slope of y against x.
pub fn linear_fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fwhm_of_lorentzian_peak() {
        let gamma = 2.0;
        let xs: Vec<f64> = (0..801).map(|k| -40.0 + 0.1 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 / (1.0 + (x / gamma).powi(2))).collect();
        let w = feature_fwhm(&xs, &ys).unwrap();
        assert_relative_eq!(w, 2.0 * gamma, max_relative = 1e-2);
    }

    #[test]
    fn fwhm_of_inverted_dip() {
        let xs: Vec<f64> = (0..801).map(|k| -40.0 + 0.1 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 0.4 / (1.0 + (x / 3.0).powi(2))).collect();
        let w = feature_fwhm(&xs, &ys).unwrap();
        assert_relative_eq!(w, 6.0, max_relative = 1e-2);
    }

    #[test]
    fn slope_of_exact_line() {
        let xs: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.5 * x - 2.0).collect();
        assert_relative_eq!(linear_fit_slope(&xs, &ys), 3.5, max_relative = 1e-12);
    }
}
