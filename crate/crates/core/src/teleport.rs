//! Spectral teleportation: a single photon `ψ_c` is teleported onto the
//! idler of a source pair `f_s` by projecting `(a, c)` onto the measurement
//! JSA `f_m`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::{inner_product, make_grid, gaussian_mode, FrequencyGrid, SpectralAmplitude};
use crate::jsa::{cw_limit_jsa, gaussian_jsa, GaussianJsaParams, JointSpectralAmplitude};

/// Multiple of the largest finite bandwidth used for an infinite one in
/// numerical paths.
pub const INFINITE_BANDWIDTH_FACTOR: f64 = 50.0;

/// Discrepancy allowed between grid and closed-form fidelities.
pub const FINITE_TOLERANCE: f64 = 2e-3;
pub const SENTINEL_TOLERANCE: f64 = 1e-2;

pub const DEFAULT_POINTS: usize = 256;
/// Grid span of the numerical check in units of the largest finite bandwidth.
pub const DEFAULT_SPAN_FACTOR: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Finite(f64),
    Infinite,
}

impl Bandwidth {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bandwidth::Finite(g) => Some(g),
            Bandwidth::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Bandwidth::Infinite)
    }
}

/// Which closed form applies to a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `γ_m → ∞` with `|β| = 1`; `σ = γ_c/γ_s`.
    IdealMeasurement,
    /// `γ_s → ∞` with `|α| = 1`; `σ = γ_c/γ_m`.
    IdealState,
    /// `γ_s = γ_m`; `σ = γ_c/γ_s`.
    EqualBandwidths,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportScenario {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_s: Bandwidth,
    pub gamma_m: Bandwidth,
    pub gamma_c: f64,
}

fn check_correlation(name: &str, x: f64) -> Result<()> {
    if !(x.abs() <= 1.0) {
        return Err(invalid(format!("{name} must lie in [-1, 1], got {x}")));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(invalid(format!("{name} must be positive and finite, got {x}")));
    }
    Ok(())
}

impl TeleportScenario {
    pub fn new(alpha: f64, beta: f64, gamma_s: Bandwidth, gamma_m: Bandwidth, gamma_c: f64) -> Result<Self> {
        check_correlation("alpha", alpha)?;
        check_correlation("beta", beta)?;
        check_positive("gamma_c", gamma_c)?;
        for (name, b) in [("gamma_s", gamma_s), ("gamma_m", gamma_m)] {
            if let Bandwidth::Finite(g) = b {
                check_positive(name, g)?;
            }
        }
        Ok(TeleportScenario { alpha, beta, gamma_s, gamma_m, gamma_c })
    }

    pub fn regime(&self) -> Result<Regime> {
        match (self.gamma_s, self.gamma_m) {
            (Bandwidth::Infinite, Bandwidth::Infinite) => {
                Err(invalid("both source and measurement bandwidths are infinite; no closed form applies"))
            }
            (Bandwidth::Finite(_), Bandwidth::Infinite) => {
                if self.beta.abs() != 1.0 {
                    return Err(invalid(format!(
                        "an infinite measurement bandwidth needs |beta| = 1, got {}",
                        self.beta
                    )));
                }
                Ok(Regime::IdealMeasurement)
            }
            (Bandwidth::Infinite, Bandwidth::Finite(_)) => {
                if self.alpha.abs() != 1.0 {
                    return Err(invalid(format!(
                        "an infinite source bandwidth needs |alpha| = 1, got {}",
                        self.alpha
                    )));
                }
                Ok(Regime::IdealState)
            }
            (Bandwidth::Finite(s), Bandwidth::Finite(m)) => {
                if (s - m).abs() <= 1e-12 * s.max(m) {
                    Ok(Regime::EqualBandwidths)
                } else {
                    Err(invalid(format!(
                        "gamma_s = {s} and gamma_m = {m} differ and neither is infinite; no closed form applies"
                    )))
                }
            }
        }
    }

    /// `γ_c` over the finite bandwidth that sets the scale of the regime.
    pub fn sigma_ratio(&self) -> Result<f64> {
        let scale = match self.regime()? {
            Regime::IdealMeasurement | Regime::EqualBandwidths => self.gamma_s.finite(),
            Regime::IdealState => self.gamma_m.finite(),
        };
        Ok(self.gamma_c / scale.expect("regime implies a finite scale"))
    }

    pub fn closed_form(&self) -> Result<f64> {
        let sigma = self.sigma_ratio()?;
        match self.regime()? {
            Regime::IdealMeasurement => closed_form_fidelity_ideal_measurement(self.alpha, sigma),
            Regime::IdealState => closed_form_fidelity_ideal_state(self.beta, sigma),
            Regime::EqualBandwidths => closed_form_fidelity_equal_bandwidths(self.alpha, self.beta, sigma),
        }
    }

    /// Largest finite bandwidth among `γ_s`, `γ_m` and `γ_c`.
    pub fn largest_finite(&self) -> f64 {
        [self.gamma_s.finite(), self.gamma_m.finite(), Some(self.gamma_c)]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

/// Normalized heralded idler amplitude and the norm it had before
/// normalization.
#[derive(Debug, Clone)]
pub struct HeraldedState {
    pub amplitude: SpectralAmplitude,
    pub herald_weight: f64,
}

/// `ψ(ω_b) ∝ ∫∫ f_m*(ω_a, ω_c) f_s(ω_a, ω_b) ψ_c(ω_c)`.
///
/// `f_s` lives on `(a, b)`, `f_m` on `(a, c)` and `ψ_c` on `c`. A heralded
/// norm below `1e-12` of the input norms is reported as degenerate.
pub fn herald_state(
    f_s: &JointSpectralAmplitude,
    f_m: &JointSpectralAmplitude,
    psi_c: &SpectralAmplitude,
) -> Result<HeraldedState> {
    f_s.grid_s().ensure_matches(f_m.grid_s(), "heralding (shared mode a)")?;
    f_m.grid_i().ensure_matches(psi_c.grid(), "heralding (input mode c)")?;
    let (h_a, h_c) = (f_m.grid_s().step(), f_m.grid_i().step());

    let psi = DMatrix::from_column_slice(psi_c.values().len(), 1, psi_c.values());
    // v(a) = ∫ f_m*(a, c) ψ_c(c) dc
    let v = f_m.values().map(|z| z.conj()) * psi * Complex64::new(h_c, 0.0);
    let out = f_s.values().transpose() * v * Complex64::new(h_a, 0.0);

    let raw = SpectralAmplitude::new(f_s.grid_i().clone(), out.column(0).iter().copied().collect())?;
    let weight = raw.norm();
    let scale = f_s.norm_sqr().sqrt() * f_m.norm_sqr().sqrt() * psi_c.norm();
    if !(weight > 1e-12 * scale) || weight < 1e-300 {
        return Err(Error::Degenerate(format!(
            "heralded amplitude vanishes (norm {weight:.3e}); the measurement does not overlap the input"
        )));
    }
    Ok(HeraldedState { amplitude: raw.normalized()?, herald_weight: weight })
}

/// `F = |⟨ψ_c|ψ⟩|²`.
pub fn fidelity(psi_c: &SpectralAmplitude, heralded: &HeraldedState) -> Result<f64> {
    Ok(inner_product(psi_c, &heralded.amplitude)?.norm_sqr())
}

fn check_closed_form_args(x: f64, sigma: f64) -> Result<()> {
    check_correlation("correlation", x)?;
    check_positive("sigma", sigma)
}

/// Fidelity with an ideal measurement, as a function of the source
/// correlation and `σ = γ_c/γ_s`.
pub fn closed_form_fidelity_ideal_measurement(alpha: f64, sigma: f64) -> Result<f64> {
    check_closed_form_args(alpha, sigma)?;
    let s2 = sigma * sigma;
    let a2 = alpha * alpha;
    let num = 4.0 * s2 * (s2 + 1.0) * (s2 + 1.0 - a2);
    let den = ((s2 + 1.0).powi(2) - a2).powi(2);
    Ok((num / den).sqrt())
}

/// Fidelity with an ideal source; the same function of the measurement
/// correlation and `σ = γ_c/γ_m`.
pub fn closed_form_fidelity_ideal_state(beta: f64, sigma: f64) -> Result<f64> {
    closed_form_fidelity_ideal_measurement(beta, sigma)
}

/// Fidelity with `γ_s = γ_m = γ` and `σ = γ_c/γ`.
pub fn closed_form_fidelity_equal_bandwidths(alpha: f64, beta: f64, sigma: f64) -> Result<f64> {
    check_closed_form_args(alpha, sigma)?;
    check_correlation("beta", beta)?;
    let s2 = sigma * sigma;
    let (a2, b2) = (alpha * alpha, beta * beta);
    let p = 1.0 + s2;
    let num = 4.0 * s2 * (b2 - 2.0 * p) * (b2 - (2.0 - a2) * p);
    let den = p * p * (a2 + b2 - 2.0 * p).powi(2);
    Ok((num / den).sqrt())
}

/// Correlation on the unit-fidelity curve `α² = 1 − σ⁴` of the ideal-limit
/// forms, if it exists.
pub fn unit_fidelity_correlation(sigma: f64) -> Option<f64> {
    let a2 = 1.0 - sigma.powi(4);
    (sigma > 0.0 && a2 >= 0.0).then(|| a2.sqrt())
}

/// With `β = 1` and equal bandwidths, the `α` maximizing the fidelity.
pub fn optimal_alpha_for_unit_beta(sigma: f64) -> Option<f64> {
    let s2 = sigma * sigma;
    let a2 = (1.0 + s2 - 2.0 * s2 * s2) / (1.0 + s2);
    (sigma > 0.0 && (0.0..=1.0).contains(&a2)).then(|| a2.sqrt())
}

/// With `α = 1` and equal bandwidths, the `β` maximizing the fidelity.
pub fn optimal_beta_for_unit_alpha(sigma: f64) -> Option<f64> {
    let s2 = sigma * sigma;
    let b2 = (-1.0 + s2 + 2.0 * s2 * s2) / (-1.0 + s2);
    (sigma > 0.0 && (0.0..=1.0).contains(&b2)).then(|| b2.sqrt())
}

/// Slice of parameter space swept by [`fidelity_sweep`]. The first axis is
/// the free correlation, the second is `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepRegime {
    IdealMeasurement,
    IdealState,
    /// Sweep `α` at fixed `β`.
    EqualBandwidthsFixedBeta(f64),
    /// Sweep `β` at fixed `α`.
    EqualBandwidthsFixedAlpha(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelitySurface {
    pub correlation: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Rows follow `correlation`, columns follow `sigma`.
    pub values: DMatrix<f64>,
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    (0..n).map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64).collect()
}

pub fn fidelity_sweep(
    regime: SweepRegime,
    correlation: (f64, f64),
    sigma: (f64, f64),
    resolution: (usize, usize),
) -> Result<FidelitySurface> {
    if resolution.0 == 0 || resolution.1 == 0 {
        return Err(invalid("sweep resolution must be at least 1 on each axis"));
    }
    for x in [correlation.0, correlation.1] {
        check_correlation("swept correlation", x)?;
    }
    for s in [sigma.0, sigma.1] {
        check_positive("sigma", s)?;
    }
    let xs = linspace(correlation, resolution.0);
    let ss = linspace(sigma, resolution.1);
    let eval = |x: f64, s: f64| match regime {
        SweepRegime::IdealMeasurement => closed_form_fidelity_ideal_measurement(x, s),
        SweepRegime::IdealState => closed_form_fidelity_ideal_state(x, s),
        SweepRegime::EqualBandwidthsFixedBeta(b) => closed_form_fidelity_equal_bandwidths(x, b, s),
        SweepRegime::EqualBandwidthsFixedAlpha(a) => closed_form_fidelity_equal_bandwidths(a, x, s),
    };
    let mut values = DMatrix::zeros(xs.len(), ss.len());
    for (r, &x) in xs.iter().enumerate() {
        for (c, &s) in ss.iter().enumerate() {
            values[(r, c)] = eval(x, s)?;
        }
    }
    Ok(FidelitySurface { correlation: xs, sigma: ss, values })
}

/// Grid fidelity against closed form for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub regime: Regime,
    pub sigma: f64,
    pub numeric: f64,
    pub closed_form: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub herald_weight: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.discrepancy <= self.tolerance
    }
}

/// Correlated pair of bandwidth `gamma`: the cw ridge for `|corr| = 1`,
/// mirrored for negative sign, otherwise the Gaussian family.
pub fn correlated_pair(
    gamma: f64,
    corr: f64,
    grid_a: &FrequencyGrid,
    grid_b: &FrequencyGrid,
) -> Result<JointSpectralAmplitude> {
    if corr.abs() == 1.0 {
        let ridge = cw_limit_jsa(gamma, grid_a, grid_b)?;
        // The ridge is anticorrelated; positive correlation in the Gaussian
        // convention means anticorrelated frequencies.
        Ok(if corr > 0.0 { ridge } else { ridge.reflect_idler() })
    } else {
        gaussian_jsa(GaussianJsaParams::new(gamma, corr)?, grid_a, grid_b)
    }
}

/// Grid fidelity for `scenario` with all three modes on `grid`.
pub fn numeric_fidelity(scenario: &TeleportScenario, grid: &FrequencyGrid) -> Result<(f64, f64)> {
    let sentinel = sentinel_bandwidth(scenario);
    let resolve = |b: Bandwidth| b.finite().unwrap_or(sentinel);
    let f_s = correlated_pair(resolve(scenario.gamma_s), scenario.alpha, grid, grid)?;
    let f_m = correlated_pair(resolve(scenario.gamma_m), scenario.beta, grid, grid)?;
    let psi_c = gaussian_mode(grid.center(), scenario.gamma_c, grid)?.value;
    let heralded = herald_state(&f_s, &f_m, &psi_c)?;
    Ok((fidelity(&psi_c, &heralded)?, heralded.herald_weight))
}

/// Grid used by [`numeric_closed_form_check`].
pub fn numeric_grid(scenario: &TeleportScenario, n_points: Option<usize>) -> Result<FrequencyGrid> {
    make_grid(0.0, DEFAULT_SPAN_FACTOR * scenario.largest_finite(), n_points.unwrap_or(DEFAULT_POINTS))
}

/// Value standing in for an infinite bandwidth in numerical paths.
pub fn sentinel_bandwidth(scenario: &TeleportScenario) -> f64 {
    INFINITE_BANDWIDTH_FACTOR * scenario.largest_finite()
}

/// Runs the scenario on a grid of `n_points` (256 by default) spanning 16
/// times the largest finite bandwidth and compares with the closed form.
pub fn numeric_closed_form_check(scenario: &TeleportScenario, n_points: Option<usize>) -> Result<CheckReport> {
    let regime = scenario.regime()?;
    let sigma = scenario.sigma_ratio()?;
    let closed_form = scenario.closed_form()?;
    let grid = numeric_grid(scenario, n_points)?;
    let (numeric, herald_weight) = numeric_fidelity(scenario, &grid)?;
    let sentinel = scenario.gamma_s.is_infinite() || scenario.gamma_m.is_infinite();
    Ok(CheckReport {
        regime,
        sigma,
        numeric,
        closed_form,
        discrepancy: (numeric - closed_form).abs(),
        tolerance: if sentinel { SENTINEL_TOLERANCE } else { FINITE_TOLERANCE },
        herald_weight,
    })
}
