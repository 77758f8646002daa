//! Selection and aggregation operators linking the monthly process to
//! what is actually observed each month.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tsdata::{MixedPanel, Month};

/// Weights applied to `(z_t, z_{t−1}, …, z_{t−4})` to obtain the quarterly
/// growth rate observed at month `t`.
///
/// The latent quarterly variables are month-on-month growth rates scaled
/// by three, so the weights sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationScheme {
    pub weights: [f64; 5],
}

impl Default for AggregationScheme {
    fn default() -> Self {
        triangular_weights()
    }
}

/// `(1, 2, 3, 2, 1) / 9`.
pub fn triangular_weights() -> AggregationScheme {
    AggregationScheme {
        weights: [1.0 / 9.0, 2.0 / 9.0, 3.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0],
    }
}

impl AggregationScheme {
    pub fn window(&self) -> usize {
        self.weights.len()
    }

    /// `window[k]` holds `z_{t−k}`.
    pub fn apply(&self, window: &[f64]) -> f64 {
        debug_assert!(window.len() >= self.weights.len());
        self.weights.iter().zip(window).map(|(w, z)| w * z).sum()
    }
}

/// Variables observed in one month (global column indices, sorted).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SelectionPattern {
    pub monthly: Vec<usize>,
    pub quarterly: Vec<usize>,
}

impl SelectionPattern {
    pub fn at(panel: &MixedPanel, t: usize) -> Self {
        let n_m = panel.n_m();
        let row = panel.row(t);
        Self {
            monthly: (0..n_m).filter(|&j| row[j].is_some()).collect(),
            quarterly: (n_m..panel.n()).filter(|&j| row[j].is_some()).collect(),
        }
    }

    pub fn full(n_m: usize, n_q: usize) -> Self {
        Self {
            monthly: (0..n_m).collect(),
            quarterly: (n_m..n_m + n_q).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.monthly.len() + self.quarterly.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Linear map from the stacked vector `(z_t', z_{t−1}', …, z_{t−p}')'` to the
/// observed `y_t`.
///
/// Monthly rows are unit selectors on the current month; quarterly rows put
/// the aggregation weights on the variable's current and four lagged values.
/// Months without a quarterly release have no quarterly rows at all.
pub fn build_observation_operator(
    pattern: &SelectionPattern,
    scheme: &AggregationScheme,
    n_m: usize,
    n_q: usize,
    p: usize,
) -> Result<DMatrix<f64>> {
    if p + 1 < scheme.window() {
        return Err(Error::Config(format!(
            "lag order p = {p} cannot hold the {}-month aggregation window (need p >= {})",
            scheme.window(),
            scheme.window() - 1
        )));
    }
    let n = n_m + n_q;
    for &j in &pattern.monthly {
        if j >= n_m {
            return Err(Error::Validation(format!("monthly index {j} outside 0..{n_m}")));
        }
    }
    for &j in &pattern.quarterly {
        if j < n_m || j >= n {
            return Err(Error::Validation(format!("quarterly index {j} outside {n_m}..{n}")));
        }
    }
    let mut h = DMatrix::zeros(pattern.len(), n * (p + 1));
    for (r, &j) in pattern.monthly.iter().enumerate() {
        h[(r, j)] = 1.0;
    }
    let offset = pattern.monthly.len();
    for (r, &j) in pattern.quarterly.iter().enumerate() {
        for (k, w) in scheme.weights.iter().enumerate() {
            h[(offset + r, k * n + j)] = *w;
        }
    }
    Ok(h)
}

/// Applies the aggregation scheme to a monthly path starting at `start`,
/// returning a value for every quarter-end month whose full window lies
/// inside the path.
pub fn aggregate_path(
    z_path: &[f64],
    start: Month,
    scheme: &AggregationScheme,
) -> Result<Vec<(Month, f64)>> {
    let w = scheme.window();
    if z_path.len() < w {
        return Err(Error::Validation(format!(
            "path of length {} is shorter than the aggregation window {w}",
            z_path.len()
        )));
    }
    let mut out = Vec::new();
    let mut window = vec![0.0; w];
    for t in (w - 1)..z_path.len() {
        let month = start.add_months(t as i64);
        if !month.is_quarter_end() {
            continue;
        }
        for (k, slot) in window.iter_mut().enumerate() {
            *slot = z_path[t - k];
        }
        out.push((month, scheme.apply(&window)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weights_are_triangular() {
        let s = triangular_weights();
        let scaled: Vec<f64> = s.weights.iter().map(|w| w * 9.0).collect();
        for (a, b) in scaled.iter().zip([1.0, 2.0, 3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((s.apply(&[4.2; 5]) - 4.2).abs() < 1e-14);
    }

    #[test]
    fn hand_expansion_of_growth_window() {
        // Δz* for (t, …, t−4) = (0, 0, 1, 1, 1); z = 3Δz*
        let dz = [0.0, 0.0, 1.0, 1.0, 1.0];
        let z: Vec<f64> = dz.iter().map(|d| 3.0 * d).collect();
        assert!((triangular_weights().apply(&z) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn operator_shapes() {
        let s = triangular_weights();
        let intra = SelectionPattern {
            monthly: vec![0, 1],
            quarterly: vec![],
        };
        let h = build_observation_operator(&intra, &s, 2, 1, 4).unwrap();
        assert_eq!(h.nrows(), 2);

        let full = SelectionPattern::full(2, 1);
        let h = build_observation_operator(&full, &s, 2, 1, 4).unwrap();
        assert_eq!(h.nrows(), 3);
        let n = 3;
        for k in 0..5 {
            assert!((h[(2, k * n + 2)] * 9.0 - [1.0, 2.0, 3.0, 2.0, 1.0][k]).abs() < 1e-14);
        }
        assert!(matches!(
            build_observation_operator(&full, &s, 2, 1, 3),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn spike_contributes_to_overlapping_windows() {
        let start = Month::new(2000, 1).unwrap();
        let mut path = vec![0.0; 24];
        path[10] = 9.0; // November 2000
        let agg = aggregate_path(&path, start, &triangular_weights()).unwrap();
        let nonzero: Vec<(Month, f64)> = agg.into_iter().filter(|(_, v)| v.abs() > 0.0).collect();
        // quarter ends Dec 2000 (lag 1) and Mar 2001 (lag 4)
        assert_eq!(nonzero.len(), 2);
        assert_eq!(nonzero[0].0, Month::new(2000, 12).unwrap());
        assert!((nonzero[0].1 - 2.0).abs() < 1e-12);
        assert!((nonzero[1].1 - 1.0).abs() < 1e-12);
        // across all monthly end points the spike enters with (1,2,3,2,1)
        let s = triangular_weights();
        let contrib: Vec<f64> = (10..15)
            .map(|t| s.apply(&(0..5).map(|k| path[t - k]).collect::<Vec<_>>()))
            .collect();
        for (c, e) in contrib.iter().zip([1.0, 2.0, 3.0, 2.0, 1.0]) {
            assert!((c - e).abs() < 1e-12);
        }
    }

    #[test]
    fn short_path_rejected() {
        let start = Month::new(2000, 1).unwrap();
        assert!(aggregate_path(&[1.0; 4], start, &triangular_weights()).is_err());
    }

    proptest! {
        #[test]
        fn aggregation_is_linear(
            x in proptest::collection::vec(-10.0..10.0f64, 12),
            y in proptest::collection::vec(-10.0..10.0f64, 12),
            a in -3.0..3.0f64,
            b in -3.0..3.0f64,
        ) {
            let start = Month::new(2001, 1).unwrap();
            let s = triangular_weights();
            let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
            let lhs = aggregate_path(&combo, start, &s).unwrap();
            let ax = aggregate_path(&x, start, &s).unwrap();
            let by = aggregate_path(&y, start, &s).unwrap();
            for ((l, u), v) in lhs.iter().zip(&ax).zip(&by) {
                prop_assert!((l.1 - (a * u.1 + b * v.1)).abs() < 1e-12);
            }
        }
    }
}
