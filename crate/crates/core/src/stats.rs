//! Random variates and densities used by the sampler.
//!
//! Gamma distributions are parametrized by shape and rate throughout.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, symmetrize};

/// Generator used by every chain.
pub type ChainRng = ChaCha8Rng;

/// Reproducibility handle: the same `(seed, stream)` always yields the same
/// variate sequence, and distinct streams are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChainRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// A derived stream, e.g. one per replication or per forecast origin.
    pub fn child(&self, k: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream: self
                .stream
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(k.wrapping_add(1)),
        }
    }
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| standard_normal(rng))
}

/// Draw from `G(shape, rate)`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
        return Err(Error::Parameter(format!(
            "gamma requires shape > 0 and rate > 0, got ({shape}, {rate})"
        )));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(g.sample(rng))
}

pub fn sample_chi_squared<R: Rng + ?Sized>(dof: f64, rng: &mut R) -> Result<f64> {
    sample_gamma(0.5 * dof, 0.5, rng)
}

/// Draw from `IW(S, ν)`, whose mean is `S / (ν − n − 1)` for `ν > n + 1`.
///
/// Uses the Bartlett decomposition: with `S = U Uᵀ` and `A` the Bartlett
/// factor of a standard Wishart, `Σ = (U A⁻ᵀ)(U A⁻ᵀ)ᵀ`.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    scale: &DMatrix<f64>,
    dof: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = scale.nrows();
    if !scale.is_square() || n == 0 {
        return Err(Error::Parameter("inverse Wishart scale must be a non-empty square matrix".into()));
    }
    if !(dof > n as f64 - 1.0) {
        return Err(Error::Parameter(format!(
            "inverse Wishart needs dof > n - 1 = {}, got {dof}",
            n - 1
        )));
    }
    let u = cholesky(scale, "inverse Wishart scale")?.l();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = sample_chi_squared(dof - i as f64, rng)?.sqrt();
        for j in 0..i {
            a[(i, j)] = standard_normal(rng);
        }
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let a_inv = a
        .solve_lower_triangular(&eye)
        .ok_or_else(|| Error::Numeric("singular Bartlett factor".into()))?;
    let k = u * a_inv.transpose();
    let mut sigma = &k * k.transpose();
    symmetrize(&mut sigma);
    Ok(sigma)
}

/// Draws the transposed coefficient matrix `B = Π'` (np × n) from the
/// matrix normal with row covariance `Ω̄` and column covariance `Σ`.
///
/// `precursor` is `Ω̲⁻¹ Π̲' + Σ_t Z̄_{t−1} z̄_t'`, so that the centre is
/// `Ω̄ · precursor`. Two triangular solves with the Cholesky factor of
/// `Ω̄⁻¹` produce both the centre and the noise term.
pub fn sample_pi_matrix<R: Rng + ?Sized>(
    precursor: &DMatrix<f64>,
    omega_bar_inv: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let xi = DMatrix::from_fn(precursor.nrows(), precursor.ncols(), |_, _| standard_normal(rng));
    sample_pi_matrix_with_noise(precursor, omega_bar_inv, sigma, &xi)
}

/// Deterministic core of [`sample_pi_matrix`] for a given noise matrix `Ξ`.
pub fn sample_pi_matrix_with_noise(
    precursor: &DMatrix<f64>,
    omega_bar_inv: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    xi: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let k = omega_bar_inv.nrows();
    let n = sigma.nrows();
    if precursor.shape() != (k, n) || xi.shape() != (k, n) {
        return Err(Error::Parameter(format!(
            "coefficient draw: expected {k}x{n} precursor and noise, got {:?} and {:?}",
            precursor.shape(),
            xi.shape()
        )));
    }
    let l = cholesky(omega_bar_inv, "posterior coefficient precision")?.l();
    let c = cholesky(sigma, "error covariance")?.l();
    let inner = l
        .solve_lower_triangular(precursor)
        .ok_or_else(|| Error::Numeric("singular precision factor".into()))?
        + xi * c.transpose();
    l.transpose()
        .solve_upper_triangular(&inner)
        .ok_or_else(|| Error::Numeric("singular precision factor".into()))
}

/// Draw from the generalized inverse Gaussian distribution with density
/// proportional to `y^{a−1} exp{−(b y + c / y) / 2}`.
///
/// Valid for `b > 0, c ≥ 0` with `a > 0` when `c = 0`, and for `b ≥ 0,
/// c > 0` with `a < 0` when `b = 0`. Uses the ratio-of-uniforms and
/// non-T-concave rejection schemes of Hörmann and Leydold, which cover the
/// whole parameter domain.
pub fn sample_gig<R: Rng + ?Sized>(a: f64, b: f64, c: f64, rng: &mut R) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) || b < 0.0 || c < 0.0 {
        return Err(Error::Parameter(format!("invalid GIG parameters ({a}, {b}, {c})")));
    }
    if c == 0.0 {
        if a > 0.0 && b > 0.0 {
            return sample_gamma(a, 0.5 * b, rng);
        }
        return Err(Error::Parameter(format!(
            "GIG with c = 0 needs a > 0 and b > 0, got ({a}, {b}, {c})"
        )));
    }
    if b == 0.0 {
        if a < 0.0 {
            return Ok(1.0 / sample_gamma(-a, 0.5 * c, rng)?);
        }
        return Err(Error::Parameter(format!(
            "GIG with b = 0 needs a < 0 and c > 0, got ({a}, {b}, {c})"
        )));
    }
    // y = alpha * x with x ~ GIG(lambda, omega, omega)
    let alpha = (c / b).sqrt();
    let omega = (b * c).sqrt();
    let lambda = a.abs();
    let x = if lambda >= 1.0 || omega > 1.0 {
        gig_rou_shifted(lambda, omega, rng)
    } else if omega >= (0.5f64).min(2.0 / 3.0 * (1.0 - lambda).sqrt()) {
        gig_rou(lambda, omega, rng)
    } else {
        gig_concave(lambda, omega, rng)
    };
    let x = if a < 0.0 { 1.0 / x } else { x };
    Ok(alpha * x)
}

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn gig_rou<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v: f64 = rng.random();
        if v <= 0.0 {
            continue;
        }
        let x = u / v;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn gig_rou_shifted<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    // bounding rectangle from the roots of a depressed cubic
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v: f64 = rng.random();
        if v <= 0.0 {
            continue;
        }
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Rejection from a piecewise hat for `0 ≤ λ < 1` and small `ω`, where
/// the density is not T-concave.
fn gig_concave<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = a0 + a1 + a2;
    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= a1;
                let lo = x0.max(2.0 / omega);
                x = -2.0 / omega * ((-omega / 2.0 * lo).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        if !(x > 0.0 && x.is_finite()) {
            continue;
        }
        let u = rng.random::<f64>() * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

/// Draw from `N(mu, var)` restricted to `(lower, upper)`; either bound may
/// be infinite.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    mu: f64,
    var: f64,
    lower: f64,
    upper: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(var > 0.0) || !var.is_finite() || mu.is_nan() {
        return Err(Error::Parameter(format!("truncated normal needs var > 0, got {var}")));
    }
    if !(lower < upper) {
        return Err(Error::Parameter(format!(
            "truncated normal needs lower < upper, got ({lower}, {upper})"
        )));
    }
    let sd = var.sqrt();
    let a = (lower - mu) / sd;
    let b = (upper - mu) / sd;
    let z = if a >= 0.0 {
        std_tail(a, b, rng)
    } else if b <= 0.0 {
        -std_tail(-b, -a, rng)
    } else {
        std_straddle(a, b, rng)
    };
    Ok((mu + sd * z).clamp(lower, upper))
}

// Standard normal on (a, b) with 0 ≤ a < b.
fn std_tail<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if b.is_finite() && (b * b - a * a) <= 2.0 {
        // uniform proposal, acceptance ≥ e^{-1}
        loop {
            let z = a + (b - a) * rng.random::<f64>();
            let u: f64 = rng.random();
            if u <= (0.5 * (a * a - z * z)).exp() {
                return z;
            }
        }
    }
    if a < 0.5 {
        loop {
            let z: f64 = standard_normal(rng).abs();
            if z > a && z < b {
                return z;
            }
        }
    }
    // translated exponential proposal (Robert, 1995)
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = -(1.0 - rng.random::<f64>()).ln();
        let z = a + e / alpha;
        if z >= b {
            continue;
        }
        let u: f64 = rng.random();
        if u <= (-0.5 * (z - alpha) * (z - alpha)).exp() {
            return z;
        }
    }
}

// Standard normal on (a, b) with a < 0 < b.
fn std_straddle<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if !a.is_finite() || !b.is_finite() || b - a >= (2.0 * PI).sqrt() {
        loop {
            let z = standard_normal(rng);
            if z > a && z < b {
                return z;
            }
        }
    }
    loop {
        let z = a + (b - a) * rng.random::<f64>();
        let u: f64 = rng.random();
        if u <= (-0.5 * z * z).exp() {
            return z;
        }
    }
}

/// Exact multivariate normal log density.
pub fn logpdf_normal_mv(y: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let n = y.len();
    if mean.len() != n || cov.shape() != (n, n) {
        return Err(Error::Parameter("dimension mismatch in normal log density".into()));
    }
    let chol = cholesky(cov, "normal covariance")?;
    let l = chol.l();
    let r = y - mean;
    let w = l
        .solve_lower_triangular(&r)
        .ok_or_else(|| Error::Numeric("singular covariance factor".into()))?;
    let logdet: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(-0.5 * (n as f64 * (2.0 * PI).ln() + logdet + w.norm_squared()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(k: u64) -> ChainRng {
        RngStream::new(7, k).rng()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = (0..5).map(|_| standard_normal(&mut rng(1))).collect();
        let mut r1 = rng(1);
        let mut r2 = rng(2);
        let x: Vec<f64> = (0..5).map(|_| standard_normal(&mut r1)).collect();
        let y: Vec<f64> = (0..5).map(|_| standard_normal(&mut r2)).collect();
        assert_eq!(a[0], x[0]);
        assert_ne!(x, y);
    }

    #[test]
    fn inverse_wishart_is_symmetric() {
        let s = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5]);
        let d = sample_inverse_wishart(&s, 6.0, &mut rng(3)).unwrap();
        assert!((&d - d.transpose()).amax() < 1e-12);
        assert!(crate::linalg::is_spd(&d));
        let not_spd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            sample_inverse_wishart(&not_spd, 5.0, &mut rng(3)),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn zero_noise_coefficient_draw_is_posterior_mean() {
        let omega_inv = DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 2.0]);
        let precursor = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.5, 2.0]);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
        let xi = DMatrix::zeros(2, 2);
        let b = sample_pi_matrix_with_noise(&precursor, &omega_inv, &sigma, &xi).unwrap();
        let expected = omega_inv.clone().try_inverse().unwrap() * &precursor;
        assert!((b - expected).amax() < 1e-12);
    }

    #[test]
    fn identity_case_draws_are_shifted_noise() {
        let eye = DMatrix::<f64>::identity(2, 2);
        let precursor = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let xi = DMatrix::from_row_slice(2, 2, &[0.1, -0.2, 0.3, 0.4]);
        let b = sample_pi_matrix_with_noise(&precursor, &eye, &eye, &xi).unwrap();
        assert!((b - (&precursor + &xi)).amax() < 1e-14);
    }

    #[test]
    fn gig_parameter_errors() {
        let mut r = rng(4);
        assert!(sample_gig(1.0, -1.0, 1.0, &mut r).is_err());
        assert!(sample_gig(-1.0, 1.0, 0.0, &mut r).is_err());
        assert!(sample_gig(1.0, 0.0, 1.0, &mut r).is_err());
        assert!(sample_gig(1.0, 3.0, 0.25, &mut r).unwrap() > 0.0);
    }

    #[test]
    fn gig_covers_all_regimes() {
        let mut r = rng(5);
        for &(a, b, c) in &[
            (0.3, 0.01, 0.01),
            (0.0, 0.1, 0.1),
            (0.7, 0.5, 0.5),
            (2.5, 4.0, 1.0),
            (-1.5, 2.0, 3.0),
            (0.5, 1e-3, 50.0),
        ] {
            for _ in 0..200 {
                let x = sample_gig(a, b, c, &mut r).unwrap();
                assert!(x > 0.0 && x.is_finite(), "({a},{b},{c}) -> {x}");
            }
        }
    }

    #[test]
    fn truncated_normal_support() {
        let mut r = rng(6);
        for _ in 0..2000 {
            let x = sample_truncated_normal(2.0, 0.01, -1.0, 1.0, &mut r).unwrap();
            assert!(x > -1.0 && x < 1.0);
        }
        let x = sample_truncated_normal(0.0, 1e-12, -1.0, 1.0, &mut r).unwrap();
        assert!(x.abs() < 1e-4);
        assert!(sample_truncated_normal(0.0, 1.0, 1.0, 1.0, &mut r).is_err());
        let far = sample_truncated_normal(0.0, 1.0, 30.0, f64::INFINITY, &mut r).unwrap();
        assert!(far > 30.0 && far < 31.0);
    }

    #[test]
    fn normal_log_density_hand_values() {
        let y = DVector::from_vec(vec![0.0]);
        let c1 = DMatrix::from_element(1, 1, 1.0);
        let v = logpdf_normal_mv(&y, &y, &c1).unwrap();
        assert!((v + 0.5 * (2.0 * PI).ln()).abs() < 1e-14);
        assert!((v - (-0.9189385332046727)).abs() < 1e-12);

        let y2 = DVector::from_vec(vec![1.0, 1.0]);
        let m2 = DVector::zeros(2);
        let v2 = logpdf_normal_mv(&y2, &m2, &DMatrix::identity(2, 2)).unwrap();
        assert!((v2 - (-(2.0 * PI).ln() - 1.0)).abs() < 1e-12);

        let c4 = DMatrix::from_element(1, 1, 4.0);
        let v4 = logpdf_normal_mv(&y, &y, &c4).unwrap();
        assert!((v - v4 - 0.5 * 4f64.ln()).abs() < 1e-14);
    }
}
