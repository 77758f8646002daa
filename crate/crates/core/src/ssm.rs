//! State-space representation of the mixed-frequency VAR and the
//! simulation smoother for the latent monthly series.
//!
//! Up to the balanced-through month the state holds only the quarterly
//! latents `(z_{q,t}, …, z_{q,t−p})`; the monthly equations act as noisy
//! observations whose errors are correlated with the state innovation.
//! After that month the state switches to all variables so that missing
//! monthly values at the ragged edge are sampled jointly with the rest.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::aggregation::AggregationScheme;
use crate::error::{Error, Result};
use crate::linalg::{
    companion, condition_gaussian, pinv_psd, psd_factor_floor, stationary_covariance, symmetrize,
    PSD_RTOL,
};
use crate::stats::standard_normal_vector;
use crate::tsdata::MixedPanel;

/// Panel values with the deterministic mean removed (`ỹ_t`).
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedData {
    pub n_m: usize,
    pub n_q: usize,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl AdjustedData {
    pub fn from_panel(panel: &MixedPanel) -> Self {
        Self {
            n_m: panel.n_m(),
            n_q: panel.n_q(),
            rows: panel.rows().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n_m + self.n_q
    }

    pub fn balanced_through(&self) -> Option<usize> {
        let k = self
            .rows
            .iter()
            .take_while(|r| r[..self.n_m].iter().all(Option::is_some))
            .count();
        k.checked_sub(1)
    }
}

/// `ỹ_t = y_t − M_t Λ (Ψd_t, …)`: monthly entries lose `Ψd_t`, quarterly
/// entries the aggregation-weighted `Ψd` over their window. `d` is `T × m`.
pub fn mean_adjust(
    panel: &MixedPanel,
    psi: &DMatrix<f64>,
    d: &DMatrix<f64>,
    scheme: &AggregationScheme,
) -> Result<AdjustedData> {
    let n = panel.n();
    let t_len = panel.len();
    if psi.nrows() != n || d.nrows() != t_len || psi.ncols() != d.ncols() {
        return Err(Error::Validation(format!(
            "mean_adjust: Psi is {:?}, d is {:?}, panel is {t_len}x{n}",
            psi.shape(),
            d.shape()
        )));
    }
    let mu = d * psi.transpose(); // T × n
    let mut rows = panel.rows().to_vec();
    for (t, row) in rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let Some(y) = v else { continue };
            let shift = if j < panel.n_m() {
                mu[(t, j)]
            } else {
                scheme
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * mu[(t.saturating_sub(k), j)])
                    .sum()
            };
            *y -= shift;
        }
    }
    Ok(AdjustedData {
        n_m: panel.n_m(),
        n_q: panel.n_q(),
        rows,
    })
}

/// `z_t = z̃_t + Ψd_t` for a `T × n` path.
pub fn reattach_mean(z: &DMatrix<f64>, psi: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    z + d * psi.transpose()
}

/// Parameters entering the state-space form.
#[derive(Debug, Clone, Copy)]
pub struct SsmParams<'a> {
    /// `(Π_1, …, Π_p)`, `n × np`.
    pub pi: &'a DMatrix<f64>,
    pub sigma: &'a DMatrix<f64>,
    /// Constant term of a VAR in intercept form; `None` for mean-adjusted data.
    pub intercept: Option<&'a DVector<f64>>,
    /// Volatility scale `f_t`, one per period.
    pub f: &'a [f64],
    pub scheme: AggregationScheme,
}

/// One draw of the latent monthly series (`T × n`, mean-adjusted scale).
/// Observed monthly entries equal the data; all other entries are sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherDraw {
    pub z: DMatrix<f64>,
}

impl SmootherDraw {
    /// Aggregated value of variable `j` at month `t ≥ 4`.
    pub fn aggregate(&self, scheme: &AggregationScheme, t: usize, j: usize) -> f64 {
        scheme
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * self.z[(t - k, j)])
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    /// Quarterly latents at lags `0..=p`.
    Compact,
    /// All variables at lags `0..=p`.
    Full,
}

#[derive(Debug, Clone, Copy)]
struct Dims {
    n_m: usize,
    n_q: usize,
    p: usize,
}

impl Dims {
    fn n(&self) -> usize {
        self.n_m + self.n_q
    }

    fn dim(&self, l: Layout) -> usize {
        match l {
            Layout::Compact => self.n_q * (self.p + 1),
            Layout::Full => self.n() * (self.p + 1),
        }
    }

    fn index(&self, l: Layout, j: usize, k: usize) -> Option<usize> {
        if k > self.p {
            return None;
        }
        match l {
            Layout::Compact => (j >= self.n_m).then(|| k * self.n_q + j - self.n_m),
            Layout::Full => Some(k * self.n() + j),
        }
    }

    /// `(variable, lag)` of every state entry in index order.
    fn slots(&self, l: Layout) -> Vec<(usize, usize)> {
        let vars: Vec<usize> = match l {
            Layout::Compact => (self.n_m..self.n()).collect(),
            Layout::Full => (0..self.n()).collect(),
        };
        (0..=self.p)
            .flat_map(|k| vars.iter().map(move |&j| (j, k)))
            .collect()
    }
}

/// `x_t = F x_{t−1} + c + G u_t`, `y_t = H x_t + d + J u_t`, `u_t ~ N(0, Q)`.
struct Step {
    f: DMatrix<f64>,
    c: DVector<f64>,
    g: DMatrix<f64>,
    q: DMatrix<f64>,
    obs: Observation,
    /// `(index in x_{t−1}, index in x_t)` for entries copied unchanged.
    carry: Vec<(usize, usize)>,
    /// Entries of `x_t` driven by `u_t`.
    fresh: Vec<usize>,
}

struct Observation {
    h: DMatrix<f64>,
    d: DVector<f64>,
    j: DMatrix<f64>,
    y: DVector<f64>,
    /// Rows with a non-zero `J`.
    noisy: Vec<usize>,
}

impl Observation {
    fn empty(dim: usize, n: usize) -> Self {
        Self {
            h: DMatrix::zeros(0, dim),
            d: DVector::zeros(0),
            j: DMatrix::zeros(0, n),
            y: DVector::zeros(0),
            noisy: Vec::new(),
        }
    }
}

struct Builder<'a> {
    data: &'a AdjustedData,
    params: SsmParams<'a>,
    dims: Dims,
    t_b: usize,
}

impl<'a> Builder<'a> {
    fn new(data: &'a AdjustedData, params: SsmParams<'a>) -> Result<Self> {
        let n = data.n();
        let t_len = data.len();
        if n == 0 || params.pi.nrows() != n || !params.pi.ncols().is_multiple_of(n) {
            return Err(Error::Validation(format!(
                "coefficient matrix {:?} does not match {n} variables",
                params.pi.shape()
            )));
        }
        let p = params.pi.ncols() / n;
        if p == 0 {
            return Err(Error::Validation("lag order must be at least 1".into()));
        }
        if params.sigma.shape() != (n, n) {
            return Err(Error::Validation(format!(
                "error covariance is {:?}, expected {n}x{n}",
                params.sigma.shape()
            )));
        }
        if params.intercept.is_some_and(|c| c.len() != n) {
            return Err(Error::Validation("intercept length differs from n".into()));
        }
        if data.n_q > 0 && p + 1 < params.scheme.window() {
            return Err(Error::Config(format!(
                "lag order p = {p} cannot hold the aggregation window (need p >= {})",
                params.scheme.window() - 1
            )));
        }
        if t_len < p {
            return Err(Error::Validation(format!("{t_len} periods cannot fill {p} lags")));
        }
        if params.f.len() != t_len {
            return Err(Error::Validation(format!(
                "volatility path has {} entries for {t_len} periods",
                params.f.len()
            )));
        }
        if let Some(t) = params.f.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("volatility scale f_{t} = {} is not positive", params.f[t])));
        }
        let t_b = data
            .balanced_through()
            .filter(|&tb| tb + 1 >= p)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "the first {p} periods must have every monthly variable observed"
                ))
            })?;
        Ok(Self {
            data,
            params,
            dims: Dims {
                n_m: data.n_m,
                n_q: data.n_q,
                p,
            },
            t_b,
        })
    }

    fn coef(&self, j: usize, lag: usize, i: usize) -> f64 {
        self.params.pi[(j, (lag - 1) * self.dims.n() + i)]
    }

    fn c0(&self, j: usize) -> f64 {
        self.params.intercept.map_or(0.0, |c| c[j])
    }

    fn known(&self, t: isize, j: usize) -> Result<f64> {
        if t < 0 {
            return Ok(0.0);
        }
        self.data.rows[t as usize][j].ok_or_else(|| {
            Error::Numeric(format!("state layout needs variable {j} at period {t}, which is missing"))
        })
    }

    fn layout(&self, t: usize, reference: bool) -> Layout {
        if reference || t > self.t_b {
            Layout::Full
        } else {
            Layout::Compact
        }
    }

    fn step(&self, t: usize, prev: Layout, cur: Layout) -> Result<Step> {
        let dims = self.dims;
        let n = dims.n();
        let (dp, dc) = (dims.dim(prev), dims.dim(cur));
        let mut f = DMatrix::zeros(dc, dp);
        let mut c = DVector::zeros(dc);
        let mut g = DMatrix::zeros(dc, n);
        let mut carry = Vec::new();
        let mut fresh = Vec::new();
        let ti = t as isize;
        for (r, (j, k)) in dims.slots(cur).into_iter().enumerate() {
            if k == 0 {
                fresh.push(r);
                g[(r, j)] = 1.0;
                c[r] += self.c0(j);
                for lag in 1..=dims.p {
                    for i in 0..n {
                        let a = self.coef(j, lag, i);
                        if a == 0.0 {
                            continue;
                        }
                        match dims.index(prev, i, lag - 1) {
                            Some(s) => f[(r, s)] += a,
                            None => c[r] += a * self.known(ti - lag as isize, i)?,
                        }
                    }
                }
            } else {
                match dims.index(prev, j, k - 1) {
                    Some(s) => {
                        f[(r, s)] = 1.0;
                        carry.push((s, r));
                    }
                    None => c[r] = self.known(ti - k as isize, j)?,
                }
            }
        }
        let q = self.params.sigma * self.params.f[t];
        let obs = self.observation(t, cur)?;
        Ok(Step {
            f,
            c,
            g,
            q,
            obs,
            carry,
            fresh,
        })
    }

    /// Observation equation for period `t ≥ p` in layout `cur`.
    fn observation(&self, t: usize, cur: Layout) -> Result<Observation> {
        let dims = self.dims;
        let n = dims.n();
        let dim = dims.dim(cur);
        let row = &self.data.rows[t];
        let mut hs: Vec<DVector<f64>> = Vec::new();
        let mut ds = Vec::new();
        let mut js: Vec<Option<usize>> = Vec::new();
        let mut ys = Vec::new();
        for j in 0..dims.n_m {
            let Some(y) = row[j] else { continue };
            let mut h = DVector::zeros(dim);
            let mut d = 0.0;
            if let Some(s) = dims.index(cur, j, 0) {
                h[s] = 1.0;
                js.push(None);
            } else {
                d += self.c0(j);
                for lag in 1..=dims.p {
                    for i in 0..n {
                        let a = self.coef(j, lag, i);
                        if a == 0.0 {
                            continue;
                        }
                        match dims.index(cur, i, lag) {
                            Some(s) => h[s] += a,
                            None => d += a * self.known(t as isize - lag as isize, i)?,
                        }
                    }
                }
                js.push(Some(j));
            }
            hs.push(h);
            ds.push(d);
            ys.push(y);
        }
        for j in dims.n_m..n {
            let Some(y) = row[j] else { continue };
            if t + 1 < self.params.scheme.window() {
                continue;
            }
            let mut h = DVector::zeros(dim);
            for (k, w) in self.params.scheme.weights.iter().enumerate() {
                h[dims.index(cur, j, k).expect("quarterly lags are in every layout")] = *w;
            }
            hs.push(h);
            ds.push(0.0);
            js.push(None);
            ys.push(y);
        }
        let rows = hs.len();
        let mut obs = Observation::empty(dim, n);
        obs.h = DMatrix::from_fn(rows, dim, |r, s| hs[r][s]);
        obs.d = DVector::from_vec(ds);
        obs.y = DVector::from_vec(ys);
        obs.j = DMatrix::zeros(rows, n);
        for (r, jj) in js.iter().enumerate() {
            if let Some(j) = jj {
                obs.j[(r, *j)] = 1.0;
                obs.noisy.push(r);
            }
        }
        Ok(obs)
    }

    /// Prior of the state at `t0 = p − 1` updated with quarterly releases
    /// that fall inside the presample.
    fn initial(&self, layout: Layout) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let dims = self.dims;
        let n = dims.n();
        let p = dims.p;
        let t0 = p - 1;
        let (qmean, qcov) = self.presample_prior();
        let slots = dims.slots(layout);
        let dim = slots.len();
        let mut m = DVector::zeros(dim);
        let mut cov = DMatrix::zeros(dim, dim);
        let qpos = |j: usize, k: usize| k * dims.n_q + j - dims.n_m;
        for (a, &(j, k)) in slots.iter().enumerate() {
            if k > t0 {
                continue; // before the sample: fixed at zero
            }
            if j < dims.n_m {
                m[a] = self.known((t0 - k) as isize, j)?;
            } else {
                m[a] = qmean[qpos(j, k)];
                for (b, &(j2, k2)) in slots.iter().enumerate() {
                    if j2 >= dims.n_m && k2 <= t0 {
                        cov[(a, b)] = qcov[(qpos(j, k), qpos(j2, k2))];
                    }
                }
            }
        }
        // presample quarterly releases
        let w = self.params.scheme.weights;
        let mut hs = Vec::new();
        let mut ys = Vec::new();
        for s in (w.len() - 1)..=t0 {
            for j in dims.n_m..n {
                if let Some(y) = self.data.rows[s][j] {
                    let mut h = DVector::zeros(dim);
                    for (k, wk) in w.iter().enumerate() {
                        h[dims.index(layout, j, t0 - s + k).expect("inside state")] = *wk;
                    }
                    hs.push(h);
                    ys.push(y);
                }
            }
        }
        let mut obs = Observation::empty(dim, n);
        obs.h = DMatrix::from_fn(hs.len(), dim, |r, s| hs[r][s]);
        obs.d = DVector::zeros(hs.len());
        obs.j = DMatrix::zeros(hs.len(), n);
        obs.y = DVector::from_vec(ys);
        let g = DMatrix::zeros(dim, n);
        let q = DMatrix::zeros(n, n);
        update(&mut m, &mut cov, &obs, &g, &q, t0)?;
        Ok((m, cov))
    }

    /// Mean and covariance of the presample quarterly latents, ordered
    /// lag-major from month `p − 1` back to month 0.
    fn presample_prior(&self) -> (DVector<f64>, DMatrix<f64>) {
        let dims = self.dims;
        let (n, p, n_m, n_q) = (dims.n(), dims.p, dims.n_m, dims.n_q);
        let f0 = self.params.f[p.min(self.params.f.len() - 1)];
        let comp = companion(self.params.pi);
        let mut q = DMatrix::zeros(n * p, n * p);
        q.view_mut((0, 0), (n, n)).copy_from(&(self.params.sigma * f0));
        let stat = stationary_covariance(&comp, &q);
        let mut cov = DMatrix::zeros(n_q * p, n_q * p);
        match &stat {
            Some(v) => {
                for a in 0..n_q * p {
                    for b in 0..n_q * p {
                        let (ka, ja) = (a / n_q, a % n_q + n_m);
                        let (kb, jb) = (b / n_q, b % n_q + n_m);
                        cov[(a, b)] = v[(ka * n + ja, kb * n + jb)];
                    }
                }
            }
            None => {
                for a in 0..n_q * p {
                    let j = a % n_q + n_m;
                    cov[(a, a)] = 10.0 * self.params.sigma[(j, j)];
                }
            }
        }
        let mut mean = DVector::zeros(n_q * p);
        if let Some(c) = self.params.intercept {
            let mut lhs = DMatrix::identity(n, n);
            for l in 0..p {
                lhs -= self.params.pi.columns(l * n, n);
            }
            let mu = stat
                .as_ref()
                .and_then(|_| lhs.lu().solve(c))
                .unwrap_or_else(|| {
                    // non-stationary: centre on the observed quarterly averages
                    DVector::from_fn(n, |j, _| {
                        let obs: Vec<f64> = self.data.rows.iter().filter_map(|r| r[j]).collect();
                        if obs.is_empty() {
                            0.0
                        } else {
                            obs.iter().sum::<f64>() / obs.len() as f64
                        }
                    })
                });
            for a in 0..n_q * p {
                mean[a] = mu[a % n_q + n_m];
            }
        }
        (mean, cov)
    }
}

/// Measurement update with correlated measurement and state noise.
fn update(
    m: &mut DVector<f64>,
    p: &mut DMatrix<f64>,
    obs: &Observation,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    t: usize,
) -> Result<()> {
    if obs.y.is_empty() {
        return Ok(());
    }
    let pht = &*p * obs.h.transpose();
    let cross = if obs.noisy.is_empty() {
        pht
    } else {
        pht + g * q * obs.j.transpose()
    };
    let mut s = &obs.h * &cross;
    if !obs.noisy.is_empty() {
        let gqj = g * q * obs.j.transpose();
        s += gqj.transpose() * obs.h.transpose() + &obs.j * q * obs.j.transpose();
    }
    symmetrize(&mut s);
    let innovation = &obs.y - &obs.h * &*m - &obs.d;
    let s_inv = match s.clone().cholesky() {
        Some(ch) => {
            let diag = ch.l().diagonal();
            if diag.min() * diag.min() > PSD_RTOL * diag.max() * diag.max() {
                ch.inverse()
            } else {
                pinv_psd(&s)
            }
        }
        None => pinv_psd(&s),
    };
    if !s_inv.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric(format!("innovation covariance is not finite at period {t}")));
    }
    let gain = &cross * s_inv;
    *m += &gain * innovation;
    *p -= &gain * cross.transpose();
    symmetrize(p);
    Ok(())
}

fn draw_gaussian<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    scale: f64,
    rng: &mut R,
) -> DVector<f64> {
    let l = psd_factor_floor(cov, PSD_RTOL * scale);
    mean + l * standard_normal_vector(mean.len(), rng)
}

fn run<R: Rng + ?Sized>(
    data: &AdjustedData,
    params: SsmParams<'_>,
    reference: bool,
    rng: &mut R,
) -> Result<SmootherDraw> {
    let b = Builder::new(data, params)?;
    let dims = b.dims;
    let n = dims.n();
    let t_len = data.len();
    let mut z = DMatrix::from_fn(t_len, n, |t, j| data.rows[t][j].unwrap_or(0.0));
    if dims.n_q == 0 && b.t_b + 1 == t_len && !reference {
        return Ok(SmootherDraw { z });
    }
    let t0 = dims.p - 1;

    // forward filter
    let mut layouts = vec![b.layout(t0, reference)];
    let (m0, p0) = b.initial(layouts[0])?;
    let mut means = vec![m0];
    let mut covs = vec![p0];
    let mut steps = Vec::with_capacity(t_len - t0);
    for t in (t0 + 1)..t_len {
        let prev = *layouts.last().unwrap();
        let cur = b.layout(t, reference);
        let st = b.step(t, prev, cur)?;
        let (m, p) = (means.last().unwrap(), covs.last().unwrap());
        let mut mp = &st.f * m + &st.c;
        let mut pp = &st.f * p * st.f.transpose() + &st.g * &st.q * st.g.transpose();
        symmetrize(&mut pp);
        update(&mut mp, &mut pp, &st.obs, &st.g, &st.q, t)?;
        if !pp.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!("filter covariance is not finite at period {t}")));
        }
        layouts.push(cur);
        means.push(mp);
        covs.push(pp);
        steps.push(st);
    }

    // backward sampling
    let last = means.len() - 1;
    let scale = covs[last].diagonal().amax().max(f64::MIN_POSITIVE);
    let mut x = draw_gaussian(&means[last], &covs[last], scale, rng);
    let write = |x: &DVector<f64>, t: usize, layout: Layout, z: &mut DMatrix<f64>| {
        for (a, (j, k)) in dims.slots(layout).into_iter().enumerate() {
            if k <= t {
                z[(t - k, j)] = x[a];
            }
        }
    };
    write(&x, t0 + last, layouts[last], &mut z);
    for s in (0..last).rev() {
        let st = &steps[s];
        let (m, p) = (&means[s], &covs[s]);
        let dim = m.len();
        // v = (fresh entries of x_{t+1}, J u_{t+1})
        let fr = &st.fresh;
        let noisy = &st.obs.noisy;
        let nv = fr.len() + noisy.len();
        let a_f = DMatrix::from_fn(fr.len(), dim, |r, c| st.f[(fr[r], c)]);
        let g_f = DMatrix::from_fn(fr.len(), n, |r, c| st.g[(fr[r], c)]);
        let j_n = DMatrix::from_fn(noisy.len(), n, |r, c| st.obs.j[(noisy[r], c)]);
        let mut noise = DMatrix::zeros(nv, n);
        noise.view_mut((0, 0), (fr.len(), n)).copy_from(&g_f);
        noise.view_mut((fr.len(), 0), (noisy.len(), n)).copy_from(&j_n);
        let mut load = DMatrix::zeros(nv, dim);
        load.view_mut((0, 0), (fr.len(), dim)).copy_from(&a_f);

        let mut jm = DVector::zeros(dim + nv);
        jm.rows_mut(0, dim).copy_from(m);
        for (r, &i) in fr.iter().enumerate() {
            jm[dim + r] = (st.f.row(i) * m)[0] + st.c[i];
        }
        let mut jc = DMatrix::zeros(dim + nv, dim + nv);
        jc.view_mut((0, 0), (dim, dim)).copy_from(p);
        let cross = p * load.transpose();
        jc.view_mut((0, dim), (dim, nv)).copy_from(&cross);
        jc.view_mut((dim, 0), (nv, dim)).copy_from(&cross.transpose());
        let vv = &load * p * load.transpose() + &noise * &st.q * noise.transpose();
        jc.view_mut((dim, dim), (nv, nv)).copy_from(&vv);

        let mut known = Vec::with_capacity(st.carry.len() + nv);
        let mut values = Vec::with_capacity(st.carry.len() + nv);
        for &(src, dst) in &st.carry {
            known.push(src);
            values.push(x[dst]);
        }
        for (r, &i) in fr.iter().enumerate() {
            known.push(dim + r);
            values.push(x[i]);
        }
        for (r, &row) in noisy.iter().enumerate() {
            known.push(dim + fr.len() + r);
            let fitted = (st.obs.h.row(row) * &x)[0] + st.obs.d[row];
            values.push(st.obs.y[row] - fitted);
        }
        let mut is_known = vec![false; dim];
        for &(src, _) in &st.carry {
            is_known[src] = true;
        }
        let unknown: Vec<usize> = (0..dim).filter(|&i| !is_known[i]).collect();
        let mut prev = DVector::zeros(dim);
        for &(src, dst) in &st.carry {
            prev[src] = x[dst];
        }
        if !unknown.is_empty() {
            let (cm, cc) =
                condition_gaussian(&jm, &jc, &known, &DVector::from_vec(values), &unknown);
            let scale = p.diagonal().amax().max(f64::MIN_POSITIVE);
            let u = draw_gaussian(&cm, &cc, scale, rng);
            for (r, &i) in unknown.iter().enumerate() {
                prev[i] = u[r];
            }
        }
        x = prev;
        write(&x, t0 + s, layouts[s], &mut z);
    }
    for t in 0..t_len {
        for j in 0..dims.n_m {
            if let Some(v) = data.rows[t][j] {
                z[(t, j)] = v;
            }
        }
    }
    Ok(SmootherDraw { z })
}

/// Compact mixed-frequency state-space model ready for smoothing.
pub struct CompactStateSpace<'a> {
    data: &'a AdjustedData,
    params: SsmParams<'a>,
}

impl<'a> CompactStateSpace<'a> {
    pub fn new(data: &'a AdjustedData, params: SsmParams<'a>) -> Result<Self> {
        Builder::new(data, params)?;
        Ok(Self { data, params })
    }

    /// Dimension of the state up to the balanced-through month.
    pub fn state_dim(&self) -> usize {
        self.data.n_q * (self.params.pi.ncols() / self.data.n() + 1)
    }
}

/// Joint draw of the latent monthly series given data and parameters.
pub fn simulation_smoother<R: Rng + ?Sized>(
    css: &CompactStateSpace<'_>,
    rng: &mut R,
) -> Result<SmootherDraw> {
    run(css.data, css.params, false, rng)
}

/// Same conditional law as [`simulation_smoother`] but with every variable
/// in the state at every period.
pub fn full_state_smoother<R: Rng + ?Sized>(
    data: &AdjustedData,
    params: SsmParams<'_>,
    rng: &mut R,
) -> Result<SmootherDraw> {
    run(data, params, true, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::triangular_weights;
    use crate::stats::RngStream;

    fn toy(t_len: usize, ragged: bool) -> AdjustedData {
        // two monthly, one quarterly; quarter ends at t = 2, 5, 8, ...
        let mut rows = Vec::new();
        for t in 0..t_len {
            let a = (t as f64 * 0.7).sin();
            let b = (t as f64 * 0.3).cos() * 0.5;
            let q = if t % 3 == 2 && t >= 4 { Some(0.2 * (t as f64 * 0.2).sin()) } else { None };
            rows.push(vec![Some(a), Some(b), q]);
        }
        if ragged {
            rows[t_len - 1][0] = None;
            rows[t_len - 1][1] = None;
            rows[t_len - 2][1] = None;
        }
        AdjustedData { n_m: 2, n_q: 1, rows }
    }

    fn params_matrices(n: usize, p: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut pi = DMatrix::zeros(n, n * p);
        for j in 0..n {
            pi[(j, j)] = 0.4;
            pi[(j, (j + 1) % n)] = 0.1;
            pi[(j, n + j)] = 0.1;
        }
        let sigma = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.3 });
        (pi, sigma)
    }

    #[test]
    fn conditioning_identity_holds() {
        let data = toy(40, true);
        let (pi, sigma) = params_matrices(3, 5);
        let f = vec![1.0; 40];
        let params = SsmParams {
            pi: &pi,
            sigma: &sigma,
            intercept: None,
            f: &f,
            scheme: triangular_weights(),
        };
        let css = CompactStateSpace::new(&data, params).unwrap();
        assert_eq!(css.state_dim(), 6);
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..20 {
            let draw = simulation_smoother(&css, &mut rng).unwrap();
            for t in 4..40 {
                if let Some(y) = data.rows[t][2] {
                    let agg = draw.aggregate(&params.scheme, t, 2);
                    assert!((agg - y).abs() < 1e-8, "t = {t}: {agg} vs {y}");
                }
                for j in 0..2 {
                    if let Some(y) = data.rows[t][j] {
                        assert_eq!(draw.z[(t, j)], y);
                    }
                }
            }
            let refd = full_state_smoother(&data, params, &mut rng).unwrap();
            for t in 4..40 {
                if let Some(y) = data.rows[t][2] {
                    assert!((refd.aggregate(&params.scheme, t, 2) - y).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn all_monthly_balanced_returns_data() {
        let rows: Vec<Vec<Option<f64>>> = (0..10).map(|t| vec![Some(t as f64)]).collect();
        let data = AdjustedData { n_m: 1, n_q: 0, rows };
        let pi = DMatrix::from_element(1, 2, 0.2);
        let sigma = DMatrix::identity(1, 1);
        let f = vec![1.0; 10];
        let params = SsmParams {
            pi: &pi,
            sigma: &sigma,
            intercept: None,
            f: &f,
            scheme: triangular_weights(),
        };
        let css = CompactStateSpace::new(&data, params).unwrap();
        let draw = simulation_smoother(&css, &mut RngStream::new(3, 0).rng()).unwrap();
        for t in 0..10 {
            assert_eq!(draw.z[(t, 0)], t as f64);
        }
    }

    #[test]
    fn mean_adjust_round_trip() {
        use crate::tsdata::{Frequency, Month, TemporalAggregation, VariableInfo};
        let vars = vec![
            VariableInfo {
                id: "m".into(),
                frequency: Frequency::Monthly,
                aggregation: TemporalAggregation::Triangular,
            },
            VariableInfo {
                id: "q".into(),
                frequency: Frequency::Quarterly,
                aggregation: TemporalAggregation::Triangular,
            },
        ];
        let data: Vec<Vec<Option<f64>>> = (0..9)
            .map(|t| vec![Some(3.0 + t as f64), if t % 3 == 2 { Some(5.0) } else { None }])
            .collect();
        let panel = MixedPanel::new(Month::new(2000, 1).unwrap(), Frequency::Monthly, vars, 1, data).unwrap();
        let psi = DMatrix::from_column_slice(2, 1, &[3.0, 5.0]);
        let d = DMatrix::from_element(9, 1, 1.0);
        let adj = mean_adjust(&panel, &psi, &d, &triangular_weights()).unwrap();
        assert_eq!(adj.rows[0][0], Some(0.0));
        assert!((adj.rows[5][1].unwrap()).abs() < 1e-14);
        let z = DMatrix::from_fn(9, 2, |t, j| adj.rows[t][j].unwrap_or(0.0));
        let back = reattach_mean(&z, &psi, &d);
        for t in 0..9 {
            assert_eq!(back[(t, 0)], panel.value(t, 0).unwrap());
        }
        let zero = mean_adjust(&panel, &DMatrix::zeros(2, 1), &d, &triangular_weights()).unwrap();
        assert_eq!(zero.rows, panel.rows().to_vec());
    }

    #[test]
    fn short_lag_order_rejected() {
        let data = toy(20, false);
        let (pi, sigma) = params_matrices(3, 3);
        let f = vec![1.0; 20];
        let params = SsmParams {
            pi: &pi,
            sigma: &sigma,
            intercept: None,
            f: &f,
            scheme: triangular_weights(),
        };
        assert!(matches!(CompactStateSpace::new(&data, params), Err(Error::Config(_))));
    }
}
