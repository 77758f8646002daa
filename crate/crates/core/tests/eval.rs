use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use mfbvar::eval::{
    build_report, compare, dm_test, lpds, relative_rmse, rmse, LpdsForm, ScoreRecord, MONTHLY_SET,
    QUARTERLY_SET,
};
use mfbvar::stats::{standard_normal, RngStream};
use mfbvar::tsdata::{Frequency, Month};

fn spd(entries: &[f64], k: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |i, j| entries[i * k + j]);
    &a * a.transpose() + DMatrix::identity(k, k) * 0.5
}

proptest! {
    #[test]
    fn lpds_invariant_to_variable_order(
        y in prop::collection::vec(-5.0f64..5.0, 3),
        m in prop::collection::vec(-5.0f64..5.0, 3),
        a in prop::collection::vec(-2.0f64..2.0, 9),
        perm in Just([2usize, 0, 1]),
    ) {
        let v = spd(&a, 3);
        let base = lpds(&DVector::from_vec(y.clone()), &DVector::from_vec(m.clone()), &v).unwrap();
        let yp = DVector::from_fn(3, |i, _| y[perm[i]]);
        let mp = DVector::from_fn(3, |i, _| m[perm[i]]);
        let vp = DMatrix::from_fn(3, 3, |i, j| v[(perm[i], perm[j])]);
        let permuted = lpds(&yp, &mp, &vp).unwrap();
        prop_assert!((base - permuted).abs() < 1e-10 * base.abs().max(1.0));
    }

    #[test]
    fn univariate_lpds_matches_scalar_formula(y in -10.0f64..10.0, m in -10.0f64..10.0, v in 1e-3f64..50.0) {
        let s = lpds(&DVector::from_element(1, y), &DVector::from_element(1, m), &DMatrix::from_element(1, 1, v)).unwrap();
        let direct = (2.0 * std::f64::consts::PI).ln() + v.ln() + (y - m) * (y - m) / v;
        prop_assert!((s - direct).abs() < 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn textbook_form_is_gaussian_log_density(y in -5.0f64..5.0, v in 0.1f64..5.0) {
        let (yv, mv, vv) = (DVector::from_element(1, y), DVector::zeros(1), DMatrix::from_element(1, 1, v));
        let t = LpdsForm::Textbook.score(&yv, &mv, &vv).unwrap();
        let log_pdf = -0.5 * (2.0 * std::f64::consts::PI * v).ln() - 0.5 * y * y / v;
        prop_assert!((t - log_pdf).abs() < 1e-12);
    }

    #[test]
    fn relative_rmse_is_scale_free(e in prop::collection::vec(-3.0f64..3.0, 2..30), c in 0.1f64..10.0) {
        prop_assume!(e.iter().any(|x| x.abs() > 1e-6));
        let scaled: Vec<f64> = e.iter().map(|x| c * x).collect();
        prop_assert!((relative_rmse(&scaled, &e).unwrap() - c).abs() < 1e-12 * c);
        prop_assert!((relative_rmse(&e, &e).unwrap() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn singular_covariance_is_reported() {
    let v = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let err = lpds(&DVector::zeros(2), &DVector::zeros(2), &v).unwrap_err();
    assert!(err.to_string().contains("condition number"), "{err}");
}

#[test]
fn zero_benchmark_rmse_is_an_error() {
    assert!(relative_rmse(&[1.0], &[0.0]).is_err());
    assert!(rmse(&[]).is_err());
}

#[test]
fn dm_guards() {
    assert!(dm_test(&[1.0, 2.0], 2).is_err());
    let flat = dm_test(&[0.5; 20], 1).unwrap();
    assert!(flat.statistic.is_none() && !flat.reject_10);
}

#[test]
fn dm_size_and_power() {
    let mut rng = RngStream::new(41, 0).rng();
    let reps = 400;
    let (mut null_rej, mut alt_rej) = (0, 0);
    for _ in 0..reps {
        let d0: Vec<f64> = (0..100).map(|_| standard_normal(&mut rng)).collect();
        let d1: Vec<f64> = d0.iter().map(|x| x + 0.5).collect();
        null_rej += usize::from(dm_test(&d0, 1).unwrap().reject_10);
        alt_rej += usize::from(dm_test(&d1, 1).unwrap().reject_10);
    }
    let size = null_rej as f64 / reps as f64;
    let power = alt_rej as f64 / reps as f64;
    assert!((0.05..=0.16).contains(&size), "size {size}");
    assert!(power >= 0.5, "power {power}");
}

#[test]
fn dm_with_h_one_is_a_t_test() {
    let d = [0.3, -0.1, 0.8, 0.2, 0.5, -0.4, 0.9, 0.1];
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let expected = mean / (var / n).sqrt() * ((n - 1.0) / n).sqrt();
    let r = dm_test(&d, 1).unwrap();
    assert!((r.statistic.unwrap() - expected).abs() < 1e-12);
}

fn record(model: &str, set: &str, freq: Frequency, h: usize, origin: Month, lp: f64, err: f64) -> ScoreRecord {
    ScoreRecord {
        model: model.into(),
        set: set.into(),
        frequency: freq,
        horizon: h,
        origin,
        lpds: Some(lp),
        error: Some(err),
    }
}

/// Three origins, two models, one quarterly variable.
fn fixture() -> Vec<ScoreRecord> {
    let o: Vec<Month> = (0..3).map(|k| Month::new(2010, 1).unwrap().add_months(k)).collect();
    let a = [(2.0, 0.5), (3.0, -1.0), (1.0, 0.2)];
    let b = [(2.5, 1.0), (3.5, -2.0), (2.0, 0.4)];
    let mut r = Vec::new();
    for k in 0..3 {
        r.push(record("A", "gdp", Frequency::Quarterly, 0, o[k], a[k].0, a[k].1));
        r.push(record("B", "gdp", Frequency::Quarterly, 0, o[k], b[k].0, b[k].1));
    }
    r
}

#[test]
fn hand_assembled_report() {
    let records = fixture();
    let origins: Vec<Month> = records.iter().map(|r| r.origin).collect();
    let report = build_report(vec!["A".into(), "B".into()], origins, records, Vec::new(), "B", "B");
    let a = report.cell("A", "gdp", 0).unwrap();
    assert_eq!(a.origins, 3);
    assert!((a.lpds.unwrap() - 2.0).abs() < 1e-15);
    assert!((a.rel_lpds.unwrap() - (-2.0 / 3.0)).abs() < 1e-12);
    let ra = ((0.25 + 1.0 + 0.04) / 3.0f64).sqrt();
    let rb = ((1.0 + 4.0 + 0.16) / 3.0f64).sqrt();
    assert!((a.rmse.unwrap() - ra).abs() < 1e-12);
    assert!((a.rel_rmse.unwrap() - ra / rb).abs() < 1e-12);
    assert_eq!(a.benchmark, "B");
    let b = report.cell("B", "gdp", 0).unwrap();
    assert_eq!(b.rel_lpds, Some(0.0));
    assert_eq!(b.rel_rmse, Some(1.0));
    assert!(b.dm_lpds.is_none_or(|d| d.statistic.is_none()));
    let table = report.render_tables();
    assert!(table.contains("gdp") && table.contains("h = 0"), "{table}");
}

#[test]
fn comparisons_use_common_origins_only() {
    let mut records = fixture();
    records.retain(|r| !(r.model == "B" && r.origin == Month::new(2010, 3).unwrap()));
    let c = compare(&records, "A", "B", "gdp", 0);
    assert_eq!(c.origins, 2);
    assert!((c.rel_lpds.unwrap() - (-0.5)).abs() < 1e-12);
}

#[test]
fn single_origin_cell_reduces_to_raw_scores() {
    let o = Month::new(2012, 6).unwrap();
    let records = vec![
        record("A", MONTHLY_SET, Frequency::Monthly, 1, o, 4.0, 0.0),
        record("B", MONTHLY_SET, Frequency::Monthly, 1, o, 5.5, 0.0),
        record("A", QUARTERLY_SET, Frequency::Quarterly, 1, o, 1.0, 2.0),
        record("B", QUARTERLY_SET, Frequency::Quarterly, 1, o, 1.0, 4.0),
    ];
    let c = compare(&records, "A", "B", MONTHLY_SET, 1);
    assert_eq!(c.rel_lpds, Some(-1.5));
    assert!(c.dm_lpds.is_none(), "one origin cannot be tested");
    let q = compare(&records, "A", "B", QUARTERLY_SET, 1);
    assert_eq!(q.rel_rmse, Some(0.5));
}
