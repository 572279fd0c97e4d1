//! Ensemble post-processing: diffraction-pattern models, weighted angular
//! histograms, chi-square fits, diffraction maps with fold and Lyapunov
//! diagnostics, and the central-node scaling metrics.

use crate::error::{Error, Result};
use crate::experiment::{Outcome, RunResult};
use crate::geometry::{ApparatusKind, ApparatusSpec};
use crate::units::LAMBDA_C;

/// Default floor for |dS/dy| inside the Lyapunov average (per natural length),
/// preventing -inf contributions at fold points. `ln(lambda_c * floor)`
/// evaluates to `ln(1e-9)`.
pub const LYAPUNOV_FLOOR: f64 = 1e-9 / LAMBDA_C;

/// Variance growth ratio across a 2x refinement above which the derivative
/// estimates are considered non-convergent (roughness proxy).
pub const ROUGHNESS_RATIO: f64 = 1.5;

// ---------------------------------------------------------------------------
// Tabulated densities
// ---------------------------------------------------------------------------

/// Probability density tabulated on a uniform grid (inclusive endpoints).
#[derive(Debug, Clone)]
pub struct TabulatedDensity {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

impl TabulatedDensity {
    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        assert!(n >= 2 && hi > lo);
        let h = (hi - lo) / (n - 1) as f64;
        let values = (0..n).map(|i| f(lo + i as f64 * h)).collect();
        TabulatedDensity { lo, hi, values }
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    /// Trapezoid integral over the full table.
    pub fn integral(&self) -> f64 {
        let h = self.spacing();
        let n = self.values.len();
        let inner: f64 = self.values[1..n - 1].iter().sum();
        h * (0.5 * (self.values[0] + self.values[n - 1]) + inner)
    }

    pub fn normalize(&mut self) {
        let z = self.integral();
        if z > 0.0 {
            for v in &mut self.values {
                *v /= z;
            }
        }
    }

    /// Linear interpolation; zero outside the table.
    pub fn value_at(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        let h = self.spacing();
        let t = (x - self.lo) / h;
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let f = t - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    /// Exact integral of the piecewise-linear interpolant over `[a, b]`
    /// (clipped to the table range).
    pub fn integrate_range(&self, a: f64, b: f64) -> f64 {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if b <= a {
            return 0.0;
        }
        let h = self.spacing();
        let ia = ((a - self.lo) / h).floor() as usize;
        let ib = (((b - self.lo) / h).ceil() as usize).min(self.values.len() - 1);
        let mut total = 0.0;
        for i in ia..ib {
            let x0 = self.lo + i as f64 * h;
            let x1 = x0 + h;
            let s0 = a.max(x0);
            let s1 = b.min(x1);
            if s1 <= s0 {
                continue;
            }
            let v = |x: f64| {
                let f = (x - x0) / h;
                self.values[i] * (1.0 - f) + self.values[i + 1] * f
            };
            total += 0.5 * (v(s0) + v(s1)) * (s1 - s0);
        }
        total
    }

    /// Mean and variance of the density restricted to `[a, b]`.
    pub fn moments_in(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let mass = self.integrate_range(a, b);
        if mass <= 0.0 {
            return None;
        }
        // Fine trapezoid over the restriction; the table is already dense.
        let h = self.spacing();
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        let n = self.values.len();
        for i in 0..n {
            let x = self.lo + i as f64 * h;
            if x < a || x > b {
                continue;
            }
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            m1 += w * x * self.values[i];
            m2 += w * x * x * self.values[i];
        }
        m1 *= h / mass;
        m2 *= h / mass;
        Some((m1, m2 - m1 * m1))
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, fm, tol, 40)
}

// ---------------------------------------------------------------------------
// Diffraction-pattern models
// ---------------------------------------------------------------------------

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Far-field slit diffraction density, normalized to unit integral over
/// `(-pi/2, pi/2)`. `d = 0` gives the single-slit pattern.
#[derive(Debug, Clone)]
pub struct FraunhoferModel {
    pub w: f64,
    pub d: f64,
    pub lam: f64,
    norm: f64,
}

impl FraunhoferModel {
    pub fn new(w: f64, d: f64, lam: f64) -> Result<Self> {
        if !(lam > 0.0) {
            return Err(Error::config("Fraunhofer wavelength must be positive"));
        }
        if !(w > 0.0) || d < 0.0 {
            return Err(Error::config("slit width must be positive and separation non-negative"));
        }
        let raw = move |theta: f64| {
            let s = theta.sin();
            let a = (std::f64::consts::PI * d * s / lam).cos().powi(2);
            let b = sinc(std::f64::consts::PI * w * s / lam).powi(2);
            a * b
        };
        let half = std::f64::consts::FRAC_PI_2;
        let norm = adaptive_simpson(&raw, -half, half, 1e-12);
        Ok(FraunhoferModel { w, d, lam, norm })
    }

    pub fn density(&self, theta: f64) -> f64 {
        let s = theta.sin();
        let a = (std::f64::consts::PI * self.d * s / self.lam).cos().powi(2);
        let b = sinc(std::f64::consts::PI * self.w * s / self.lam).powi(2);
        a * b / self.norm
    }

    pub fn tabulate(&self, n: usize) -> TabulatedDensity {
        let half = std::f64::consts::FRAC_PI_2;
        let mut t = TabulatedDensity::from_fn(-half, half, n, |th| self.density(th));
        t.normalize();
        t
    }
}

/// Normalized Fraunhofer density at a single angle.
pub fn fraunhofer_density(theta: f64, w: f64, d: f64, lam: f64) -> Result<f64> {
    Ok(FraunhoferModel::new(w, d, lam)?.density(theta))
}

/// Effective de Broglie wavelength `(b/68)^2 * (2 pi / p)` (natural units).
pub fn effective_wavelength(b: f64, p: f64) -> f64 {
    (b / 68.0).powi(2) * (std::f64::consts::TAU / p)
}

/// Smoothing width (radians) applied to the diffraction prediction:
/// `sigma = 0.02 * lambda_eff * w / lambda_c^2`.
pub fn smoothing_sigma(lam_eff: f64, w: f64) -> f64 {
    0.02 * lam_eff * w / (LAMBDA_C * LAMBDA_C)
}

/// Gaussian-convolve a tabulated density on its (circularly wrapped) grid and
/// renormalize to unit integral.
pub fn smooth_density(density: &TabulatedDensity, sigma: f64) -> TabulatedDensity {
    let mut out = density.clone();
    if sigma > 0.0 {
        let h = density.spacing();
        let n = density.values.len();
        let radius = ((5.0 * sigma / h).ceil() as usize).max(1);
        let mut taps = vec![0.0; radius + 1];
        for (k, t) in taps.iter_mut().enumerate() {
            let r = k as f64 * h;
            *t = (-r * r / (2.0 * sigma * sigma)).exp();
        }
        let sum = taps[0] + 2.0 * taps[1..].iter().sum::<f64>();
        for t in &mut taps {
            *t /= sum;
        }
        for i in 0..n {
            let mut acc = taps[0] * density.values[i];
            for k in 1..=radius {
                let lo = density.values[(i + n - (k % n)) % n];
                let hi = density.values[(i + k) % n];
                acc += taps[k] * (lo + hi);
            }
            out.values[i] = acc;
        }
    }
    out.normalize();
    out
}

// ---------------------------------------------------------------------------
// Histograms and fits
// ---------------------------------------------------------------------------

/// Weighted angular histogram with contiguous uniform bins.
#[derive(Debug, Clone)]
pub struct AngularHistogram {
    pub bin_edges: Vec<f64>,
    pub weights: Vec<f64>,
    pub n_bins: usize,
    pub total_weight: f64,
}

impl AngularHistogram {
    pub fn new(bin_edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if bin_edges.len() != weights.len() + 1 || weights.is_empty() {
            return Err(Error::InsufficientData("histogram edge/weight size mismatch".into()));
        }
        if bin_edges.windows(2).any(|e| e[1] <= e[0]) {
            return Err(Error::InsufficientData("histogram edges must be increasing".into()));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InsufficientData("histogram weights must be non-negative".into()));
        }
        let total_weight = weights.iter().sum();
        let n_bins = weights.len();
        Ok(AngularHistogram { bin_edges, weights, n_bins, total_weight })
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    /// Weighted mean and variance of the bin centers.
    pub fn mean_variance(&self) -> (f64, f64) {
        let centers = self.centers();
        let mean = centers
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| c * w)
            .sum::<f64>()
            / self.total_weight;
        let var = centers
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * (c - mean).powi(2))
            .sum::<f64>()
            / self.total_weight;
        (mean, var)
    }
}

/// Launch-weight of a run: Gaussian in the impact parameter about the nearest
/// slit center.
pub fn launch_weight(y: f64, slit_centers: &[f64], weight_sigma: f64) -> f64 {
    let d = slit_centers
        .iter()
        .map(|c| (y - c).abs())
        .fold(f64::INFINITY, f64::min);
    (-d * d / (2.0 * weight_sigma * weight_sigma)).exp()
}

/// Histogram of exit angles over the good runs, each weighted by a Gaussian
/// of the launch offset from the nearest slit center. Bin count defaults to
/// `round(sqrt(N_good))`; bins span the weighted quantile range and angles
/// beyond it are accumulated into the edge bins, so the total weight is the
/// full per-run sum.
pub fn weighted_histogram(
    results: &[RunResult],
    slit_centers: &[f64],
    weight_sigma: f64,
    n_bins: Option<usize>,
) -> Result<AngularHistogram> {
    if !(weight_sigma > 0.0) {
        return Err(Error::config("weight sigma must be positive"));
    }
    let good: Vec<(f64, f64)> = results
        .iter()
        .filter(|r| r.outcome == Outcome::ExitedDownstream)
        .filter_map(|r| r.theta.map(|t| (r.y, t)))
        .collect();
    if good.is_empty() {
        return Err(Error::InsufficientData("no good runs to histogram".into()));
    }
    let n_bins = n_bins
        .unwrap_or_else(|| (good.len() as f64).sqrt().round() as usize)
        .max(1);

    // Bin range from the weighted angle distribution (0.2%..99.8% weighted
    // quantiles). Runs launched far outside the slits carry weights many
    // orders of magnitude down and would otherwise stretch the range until
    // every meaningful run lands in one bin.
    let mut by_theta: Vec<(f64, f64)> = good
        .iter()
        .map(|&(y, t)| (t, launch_weight(y, slit_centers, weight_sigma)))
        .collect();
    by_theta.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = by_theta.iter().map(|s| s.1).sum();
    let quantile = |q: f64| -> f64 {
        let target = q * total;
        let mut acc = 0.0;
        for &(t, w) in &by_theta {
            acc += w;
            if acc >= target {
                return t;
            }
        }
        by_theta.last().unwrap().0
    };
    let mut lo = quantile(0.002);
    let mut hi = quantile(0.998);
    if hi - lo < 1e-12 {
        // Degenerate angle spread; widen symmetrically so bins are valid.
        lo -= 5e-4;
        hi += 5e-4;
    }
    let width = (hi - lo) / n_bins as f64;
    let bin_edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
    let mut weights = vec![0.0; n_bins];
    for &(y, t) in &good {
        let mut i = ((t - lo) / width) as usize;
        if i >= n_bins {
            i = n_bins - 1;
        }
        weights[i] += launch_weight(y, slit_centers, weight_sigma);
    }
    AngularHistogram::new(bin_edges, weights)
}

/// Model parameters echoed into fit reports.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ModelParams {
    pub lambda_eff: Option<f64>,
    pub sigma: Option<f64>,
    pub w: Option<f64>,
    pub d: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FitBin {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub observed: f64,
    pub expected: f64,
}

/// Pearson and Yates chi-square statistics against a tabulated model, with
/// the per-bin observed/expected table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FitReport {
    pub chi2_pearson: f64,
    pub chi2_yates: f64,
    pub dof: usize,
    pub bins: Vec<FitBin>,
    pub params: ModelParams,
}

impl FitReport {
    pub fn reduced_pearson(&self) -> f64 {
        self.chi2_pearson / self.dof as f64
    }

    pub fn reduced_yates(&self) -> f64 {
        self.chi2_yates / self.dof as f64
    }
}

/// Chi-square of a histogram against a normalized model density. Expected
/// counts are `E_i = total_weight * integral of the model over bin i`.
pub fn chi_square(
    hist: &AngularHistogram,
    model: &TabulatedDensity,
    n_constraints: usize,
) -> Result<FitReport> {
    if hist.n_bins <= n_constraints {
        return Err(Error::InsufficientData(format!(
            "{} bins leave no degrees of freedom after {} constraints",
            hist.n_bins, n_constraints
        )));
    }
    let mut bins = Vec::with_capacity(hist.n_bins);
    let mut chi2_pearson = 0.0;
    let mut chi2_yates = 0.0;
    for i in 0..hist.n_bins {
        let (lo, hi) = (hist.bin_edges[i], hist.bin_edges[i + 1]);
        let expected = hist.total_weight * model.integrate_range(lo, hi);
        if expected <= 0.0 {
            return Err(Error::InsufficientData(format!(
                "expected count is zero in bin {i} [{lo:.4}, {hi:.4}]; re-bin required"
            )));
        }
        let observed = hist.weights[i];
        let resid = observed - expected;
        chi2_pearson += resid * resid / expected;
        let yates = (resid.abs() - 0.5).max(0.0);
        chi2_yates += yates * yates / expected;
        bins.push(FitBin { theta_lo: lo, theta_hi: hi, observed, expected });
    }
    Ok(FitReport {
        chi2_pearson,
        chi2_yates,
        dof: hist.n_bins - n_constraints,
        bins,
        params: ModelParams::default(),
    })
}

/// Zero-mean Gaussian reference with the histogram's variance, tabulated and
/// normalized over the histogram range.
pub fn gaussian_reference(hist: &AngularHistogram) -> Result<TabulatedDensity> {
    let (_, var) = hist.mean_variance();
    if var <= 0.0 {
        return Err(Error::InsufficientData("histogram variance is zero".into()));
    }
    let lo = hist.bin_edges[0];
    let hi = *hist.bin_edges.last().unwrap();
    let mut t = TabulatedDensity::from_fn(lo, hi, 4097, |th| (-th * th / (2.0 * var)).exp());
    t.normalize();
    Ok(t)
}

// ---------------------------------------------------------------------------
// Diffraction map diagnostics
// ---------------------------------------------------------------------------

/// Sampled scattering map `y -> theta` over the good runs, with central
/// finite-difference derivative estimates where both neighbors exist.
#[derive(Debug, Clone)]
pub struct DiffractionMap {
    pub y: Vec<f64>,
    pub theta: Vec<f64>,
    pub dtheta_dy: Vec<Option<f64>>,
}

impl DiffractionMap {
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "diffraction map needs at least 3 good runs, got {}",
                pairs.len()
            )));
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let theta: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let n = y.len();
        let mut dtheta_dy = vec![None; n];
        for i in 1..n - 1 {
            let dy = y[i + 1] - y[i - 1];
            if dy > 0.0 {
                dtheta_dy[i] = Some((theta[i + 1] - theta[i - 1]) / dy);
            }
        }
        Ok(DiffractionMap { y, theta, dtheta_dy })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Assemble the diffraction map from ensemble results (good runs only).
pub fn diffraction_map(results: &[RunResult]) -> Result<DiffractionMap> {
    let pairs: Vec<(f64, f64)> = results
        .iter()
        .filter(|r| r.outcome == Outcome::ExitedDownstream)
        .filter_map(|r| r.theta.map(|t| (r.y, t)))
        .collect();
    DiffractionMap::from_pairs(pairs)
}

/// Locate the fold extrema of the map (sign changes of the first difference,
/// refined by a parabola through the three bracketing samples) and report the
/// mean spacing of consecutive peaks inside `keep` (a y-interval; peaks
/// outside it are excluded from the spacing statistic).
pub fn fold_peaks(map: &DiffractionMap, keep: Option<(f64, f64)>) -> Result<(Vec<f64>, f64)> {
    let n = map.len();
    if n < 5 {
        return Err(Error::InsufficientData("too few map points for peak finding".into()));
    }
    let span = map.y[n - 1] - map.y[0];
    if span <= 0.0 || (n as f64 - 1.0) / span < 5.0 / LAMBDA_C {
        return Err(Error::InsufficientData(
            "map resolution below 5 points per lambda_c".into(),
        ));
    }

    let mut peaks = Vec::new();
    let mut last_sign = 0i8;
    let mut last_idx = 0usize;
    for i in 0..n - 1 {
        let d = map.theta[i + 1] - map.theta[i];
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if sign == 0 {
            continue;
        }
        if last_sign != 0 && sign != last_sign {
            // Extremum bracketed around sample `i` (between the two slopes).
            let c = i.max(last_idx + 1).min(n - 2).max(1);
            let (x1, x2, x3) = (map.y[c - 1], map.y[c], map.y[c + 1]);
            let (y1, y2, y3) = (map.theta[c - 1], map.theta[c], map.theta[c + 1]);
            let denom = (x1 - x2) * (x1 - x3) * (x2 - x3);
            let a = (x3 * (y2 - y1) + x2 * (y1 - y3) + x1 * (y3 - y2)) / denom;
            let b = (x3 * x3 * (y1 - y2) + x2 * x2 * (y3 - y1) + x1 * x1 * (y2 - y3)) / denom;
            let vertex = if a.abs() > 0.0 { -b / (2.0 * a) } else { x2 };
            let vertex = vertex.clamp(x1, x3);
            peaks.push(vertex);
        }
        last_sign = sign;
        last_idx = i;
    }

    let kept: Vec<f64> = match keep {
        Some((a, b)) => peaks.iter().copied().filter(|&p| p >= a && p <= b).collect(),
        None => peaks,
    };
    if kept.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "fewer than 2 interior peaks ({} found)",
            kept.len()
        )));
    }
    let spacing =
        kept.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (kept.len() - 1) as f64;
    Ok((kept, spacing))
}

/// Local Lyapunov exponent of the map: windowed mean of `ln|lambda_c dS/dy|`,
/// with `|dS/dy|` floored to keep fold points finite.
pub fn lyapunov_local(map: &DiffractionMap, window: f64) -> Vec<(f64, f64)> {
    lyapunov_local_with_floor(map, window, LYAPUNOV_FLOOR)
}

pub fn lyapunov_local_with_floor(
    map: &DiffractionMap,
    window: f64,
    floor: f64,
) -> Vec<(f64, f64)> {
    let half = window / 2.0;
    let logs: Vec<Option<f64>> = map
        .dtheta_dy
        .iter()
        .map(|d| d.map(|v| (LAMBDA_C * v.abs().max(floor)).ln()))
        .collect();
    let mut out = Vec::new();
    for i in 0..map.len() {
        let yc = map.y[i];
        let mut acc = 0.0;
        let mut count = 0usize;
        for (j, l) in logs.iter().enumerate() {
            if (map.y[j] - yc).abs() <= half {
                if let Some(v) = l {
                    acc += v;
                    count += 1;
                }
            }
        }
        if count > 0 {
            out.push((yc, acc / count as f64));
        }
    }
    out
}

/// Weighted standard deviation of the histogram restricted to the central
/// diffraction node `|theta| <= asin(lambda_eff / w)`.
pub fn central_node_width(hist: &AngularHistogram, lam_eff: f64, w: f64) -> Result<f64> {
    let ratio = lam_eff / w;
    if !(ratio < 1.0) || !(ratio > 0.0) {
        return Err(Error::config(format!(
            "central-node cut needs 0 < lambda_eff/w < 1, got {ratio}"
        )));
    }
    let cut = ratio.asin();
    let centers = hist.centers();
    let mut wsum = 0.0;
    let mut m1 = 0.0;
    for (c, &wt) in centers.iter().zip(&hist.weights) {
        if c.abs() <= cut {
            wsum += wt;
            m1 += wt * c;
        }
    }
    if wsum <= 0.0 {
        return Err(Error::InsufficientData("no histogram bins inside the central node".into()));
    }
    let mean = m1 / wsum;
    let mut var = 0.0;
    for (c, &wt) in centers.iter().zip(&hist.weights) {
        if c.abs() <= cut {
            var += wt * (c - mean).powi(2);
        }
    }
    Ok((var / wsum).sqrt())
}

/// Same central-node metric evaluated on a model density (for predictions).
pub fn central_node_width_of_density(
    density: &TabulatedDensity,
    lam_eff: f64,
    w: f64,
) -> Result<f64> {
    let ratio = lam_eff / w;
    if !(ratio < 1.0) || !(ratio > 0.0) {
        return Err(Error::config(format!(
            "central-node cut needs 0 < lambda_eff/w < 1, got {ratio}"
        )));
    }
    let cut = ratio.asin();
    let (_, var) = density
        .moments_in(-cut, cut)
        .ok_or_else(|| Error::InsufficientData("no density mass inside the central node".into()))?;
    Ok(var.sqrt())
}

// ---------------------------------------------------------------------------
// Smoothness classification
// ---------------------------------------------------------------------------

/// Which smooth-pattern precondition the sampled map satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothnessClass {
    /// The derivative never changes sign (or vanishes) where the launch
    /// weight is non-negligible.
    NoWeightedTurningPoints,
    /// Derivative-estimate variance keeps growing under y-grid refinement:
    /// the map behaves as nondifferentiable at the sampled scales.
    RoughMap,
    /// Smooth map with interior extrema in weighted regions: sharp pattern
    /// peaks expected.
    SharpPeaksExpected,
    /// Not enough y resolution for the refinement test.
    Inconclusive,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SmoothnessReport {
    pub class: SmoothnessClass,
    /// Turning points (derivative sign changes) in weighted regions.
    pub weighted_turning_points: usize,
    /// Derivative-estimate variance ratios across successive 2x refinements,
    /// coarse to fine. Values near 1 mean converged (smooth).
    pub variance_ratios: Vec<f64>,
    /// Mean of the local Lyapunov profile (window `lambda_c`), as supporting
    /// evidence: positive indicates chaotic trajectory divergence.
    pub mean_lyapunov: Option<f64>,
}

fn derivative_variance(y: &[f64], theta: &[f64], stride: usize) -> Option<f64> {
    let idx: Vec<usize> = (0..y.len()).step_by(stride).collect();
    if idx.len() < 5 {
        return None;
    }
    let mut ds = Vec::new();
    for k in 1..idx.len() - 1 {
        let (a, b, c) = (idx[k - 1], idx[k], idx[k + 1]);
        let dy = y[c] - y[a];
        if dy > 0.0 {
            let _ = b;
            ds.push((theta[c] - theta[a]) / dy);
        }
    }
    if ds.len() < 4 {
        return None;
    }
    let n = ds.len() as f64;
    let mean = ds.iter().sum::<f64>() / n;
    Some(ds.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n)
}

/// Empirical check of the two smooth-pattern preconditions: either the map
/// has no derivative zeros where the launch density is supported, or the map
/// is rough (derivative estimates fail to converge under refinement).
pub fn smoothness_classifier(
    map: &DiffractionMap,
    rho_in: impl Fn(f64) -> f64,
) -> SmoothnessReport {
    let weights: Vec<f64> = map.y.iter().map(|&y| rho_in(y)).collect();
    let w_max = weights.iter().cloned().fold(0.0_f64, f64::max);
    let threshold = 1e-3 * w_max;

    // Criterion 1: derivative sign changes / zeros in weighted regions.
    let mut turning = 0usize;
    let mut prev: Option<(usize, f64)> = None;
    for i in 0..map.len() {
        if let Some(d) = map.dtheta_dy[i] {
            if let Some((pi, pd)) = prev {
                let weighted = weights[i] > threshold && weights[pi] > threshold;
                if weighted && (pd.signum() != d.signum() || d == 0.0) {
                    turning += 1;
                }
            }
            prev = Some((i, d));
        }
    }

    // Criterion 2: non-convergence of derivative variance under refinement.
    let strides = [4usize, 2, 1];
    let vars: Vec<Option<f64>> = strides
        .iter()
        .map(|&s| derivative_variance(&map.y, &map.theta, s))
        .collect();
    let mut ratios = Vec::new();
    for pair in vars.windows(2) {
        if let (Some(coarse), Some(fine)) = (pair[0], pair[1]) {
            if coarse > 0.0 {
                ratios.push(fine / coarse);
            }
        }
    }

    let mean_lyapunov = {
        let prof = lyapunov_local(map, LAMBDA_C);
        if prof.is_empty() {
            None
        } else {
            Some(prof.iter().map(|p| p.1).sum::<f64>() / prof.len() as f64)
        }
    };

    let class = if turning == 0 {
        SmoothnessClass::NoWeightedTurningPoints
    } else if ratios.len() < 2 {
        SmoothnessClass::Inconclusive
    } else if *ratios.last().unwrap() > ROUGHNESS_RATIO {
        SmoothnessClass::RoughMap
    } else {
        SmoothnessClass::SharpPeaksExpected
    };

    SmoothnessReport {
        class,
        weighted_turning_points: turning,
        variance_ratios: ratios,
        mean_lyapunov,
    }
}

// ---------------------------------------------------------------------------
// Analysis pipeline
// ---------------------------------------------------------------------------

/// Everything the `analyze` and `report` commands derive from one ensemble.
#[derive(Debug)]
pub struct EnsembleAnalysis {
    pub histogram: AngularHistogram,
    pub fraunhofer: TabulatedDensity,
    pub gaussian: TabulatedDensity,
    pub fit_fraunhofer: FitReport,
    pub fit_gaussian: FitReport,
    pub map: DiffractionMap,
    pub lyapunov: Vec<(f64, f64)>,
    pub peaks: Vec<f64>,
    pub fold_spacing: Option<f64>,
    pub smoothness: SmoothnessReport,
    pub lambda_eff: f64,
    pub sigma_smooth: f64,
    /// Mean steady momentum of the good runs (sets the de Broglie scale).
    pub p_steady: f64,
    pub u_steady_mean: f64,
    pub n_good: usize,
    pub central_width: Option<f64>,
    pub central_width_predicted: Option<f64>,
}

/// Gaussian launch-weight width used throughout the ensembles.
pub const WEIGHT_SIGMA: f64 = 0.41 * LAMBDA_C;

/// Interior band (in y) used for the fold-spacing statistic, excluding the
/// chaotic slit-edge regions.
pub const FOLD_KEEP_BAND: f64 = 1.2 * LAMBDA_C;

/// Run the full statistics pipeline over one ensemble.
///
/// The effective wavelength uses the measured mean steady momentum of the
/// good runs together with the ensemble coupling `b`.
pub fn analyze_ensemble(
    results: &[RunResult],
    spec: &ApparatusSpec,
    b: f64,
) -> Result<EnsembleAnalysis> {
    let good: Vec<&RunResult> = results
        .iter()
        .filter(|r| r.outcome == Outcome::ExitedDownstream)
        .collect();
    if good.is_empty() {
        return Err(Error::InsufficientData("no good runs in ensemble".into()));
    }
    let n_good = good.len();
    let speeds: Vec<f64> = good.iter().filter_map(|r| r.u_steady).collect();
    if speeds.is_empty() {
        return Err(Error::InsufficientData("no steady-state speeds recorded".into()));
    }
    let u_mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    let gamma = 1.0 / (1.0 - u_mean * u_mean).sqrt();
    let p_steady = gamma * u_mean;

    let lambda_eff = effective_wavelength(b, p_steady);
    let sigma = smoothing_sigma(lambda_eff, spec.slit_width);

    let d = match spec.kind {
        ApparatusKind::DoubleSlit => spec.slit_separation,
        _ => 0.0,
    };
    let slit_centers = spec.slit_centers();
    let histogram = weighted_histogram(results, &slit_centers, WEIGHT_SIGMA, None)?;

    let model = FraunhoferModel::new(spec.slit_width, d, lambda_eff)?;
    let fraunhofer = smooth_density(&model.tabulate(4097), sigma);
    let gaussian = gaussian_reference(&histogram)?;

    let params = ModelParams {
        lambda_eff: Some(lambda_eff),
        sigma: Some(sigma),
        w: Some(spec.slit_width),
        d: Some(d),
    };
    let mut fit_fraunhofer = chi_square(&histogram, &fraunhofer, 1)?;
    fit_fraunhofer.params = params.clone();
    let mut fit_gaussian = chi_square(&histogram, &gaussian, 1)?;
    fit_gaussian.params = ModelParams { lambda_eff: None, sigma: None, ..params };

    let map = diffraction_map(results)?;
    let lyapunov = lyapunov_local(&map, LAMBDA_C);
    let keep = (-FOLD_KEEP_BAND, FOLD_KEEP_BAND);
    let (peaks, fold_spacing) = match fold_peaks(&map, Some(keep)) {
        Ok((p, s)) => (p, Some(s)),
        Err(_) => (Vec::new(), None),
    };
    let smoothness = smoothness_classifier(&map, |y| {
        launch_weight(y, &slit_centers, WEIGHT_SIGMA)
    });

    let central_width = central_node_width(&histogram, lambda_eff, spec.slit_width).ok();
    let central_width_predicted =
        central_node_width_of_density(&fraunhofer, lambda_eff, spec.slit_width).ok();

    Ok(EnsembleAnalysis {
        histogram,
        fraunhofer,
        gaussian,
        fit_fraunhofer,
        fit_gaussian,
        map,
        lyapunov,
        peaks,
        fold_spacing,
        smoothness,
        lambda_eff,
        sigma_smooth: sigma,
        p_steady,
        u_steady_mean: u_mean,
        n_good,
        central_width,
        central_width_predicted,
    })
}
