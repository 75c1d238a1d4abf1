//! Phasematching functions, pump spectra and joint spectral amplitudes.
//!
//! A JSA is stored as samples `f(ω_s^j, ω_i^k)` in an `n_s × n_i` matrix.
//! Row index runs over the signal (first) axis, column index over the idler.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Checked, Error, Result, Warning};
use crate::grid::{FrequencyGrid, SpectralAmplitude};

/// Relative tolerance on the discrete L² norm of a normalized JSA.
pub const NORM_TOL: f64 = 1e-9;

/// Edge-to-peak ratio above which a pump counts as truncated by its grid.
const PUMP_EDGE_TOL: f64 = 1e-3;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseMatchKind {
    Sinc,
    Gaussian,
    /// Arbitrary profile of the difference frequency `ν′ = ω_s − ω_i`.
    NuPrimeOnly(SpectralAmplitude),
}

/// Shape of the phasematching function Φ(ω_s, ω_i).
///
/// The sinc and Gaussian kinds are ridges: constant along the direction that
/// makes `angle` with the ω_s axis and varying across it on the scale
/// `bandwidth`. At 45° the ridge runs along the sum frequency and Φ depends
/// on `ν′` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatchSpec {
    pub kind: PhaseMatchKind,
    pub angle: f64,
    pub bandwidth: f64,
    /// Point where the sinc/Gaussian argument vanishes.
    pub origin: (f64, f64),
}

impl PhaseMatchSpec {
    pub fn sinc(angle: f64, bandwidth: f64) -> Result<Self> {
        Self::ridge(PhaseMatchKind::Sinc, angle, bandwidth)
    }

    pub fn gaussian(angle: f64, bandwidth: f64) -> Result<Self> {
        Self::ridge(PhaseMatchKind::Gaussian, angle, bandwidth)
    }

    fn ridge(kind: PhaseMatchKind, angle: f64, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(invalid(format!("phasematching bandwidth must be positive, got {bandwidth}")));
        }
        if !angle.is_finite() {
            return Err(invalid("phasematching angle must be finite"));
        }
        Ok(PhaseMatchSpec { kind, angle, bandwidth, origin: (0.0, 0.0) })
    }

    /// Φ(ω_s, ω_i) = Φ̃(ω_s − ω_i). The profile is rescaled to unit peak
    /// magnitude.
    pub fn nu_prime_only(profile: SpectralAmplitude) -> Result<Self> {
        let peak = profile.peak();
        if !(peak > 0.0) || !peak.is_finite() {
            return Err(invalid("phasematching profile must be nonzero"));
        }
        let mut profile = profile;
        profile.scale(Complex64::new(1.0 / peak, 0.0));
        let bandwidth = profile.grid().step();
        Ok(PhaseMatchSpec {
            kind: PhaseMatchKind::NuPrimeOnly(profile),
            angle: std::f64::consts::FRAC_PI_4,
            bandwidth,
            origin: (0.0, 0.0),
        })
    }

    pub fn with_origin(mut self, omega_s: f64, omega_i: f64) -> Self {
        self.origin = (omega_s, omega_i);
        self
    }

    /// Φ(ω_s, ω_i).
    pub fn eval(&self, omega_s: f64, omega_i: f64) -> Complex64 {
        match &self.kind {
            PhaseMatchKind::NuPrimeOnly(profile) => profile.at(omega_s - omega_i),
            kind => {
                let (s, c) = self.angle.sin_cos();
                let across = -s * (omega_s - self.origin.0) + c * (omega_i - self.origin.1);
                let x = across / self.bandwidth;
                let value = match kind {
                    PhaseMatchKind::Sinc => sinc(x),
                    _ => (-0.5 * x * x).exp(),
                };
                Complex64::new(value, 0.0)
            }
        }
    }

    /// Φ̃(ν, ν′) = Φ((ν+ν′)/2, (ν−ν′)/2).
    pub fn eval_sum_difference(&self, nu: f64, nu_prime: f64) -> Complex64 {
        match &self.kind {
            PhaseMatchKind::NuPrimeOnly(profile) => profile.at(nu_prime),
            _ => self.eval(0.5 * (nu + nu_prime), 0.5 * (nu - nu_prime)),
        }
    }
}

/// Matrix Φ_{jk} = Φ(ω_s^j, ω_i^k).
pub fn evaluate_phasematching(
    spec: &PhaseMatchSpec,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> DMatrix<Complex64> {
    DMatrix::from_fn(grid_s.len(), grid_i.len(), |j, k| spec.eval(grid_s.point(j), grid_i.point(k)))
}

/// Coupling constant χ of the three-wave-mixing interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingChi {
    magnitude: f64,
    phase: f64,
}

impl CouplingChi {
    pub const MAX_MAGNITUDE: f64 = 0.3;
    pub const PERTURBATIVE_MAGNITUDE: f64 = 0.1;

    pub fn new(magnitude: f64, phase: f64) -> Result<Checked<Self>> {
        if !(magnitude > 0.0) || magnitude > Self::MAX_MAGNITUDE {
            return Err(invalid(format!(
                "|chi| must lie in (0, {}], got {magnitude}",
                Self::MAX_MAGNITUDE
            )));
        }
        if !phase.is_finite() {
            return Err(invalid("chi phase must be finite"));
        }
        let mut warnings = Vec::new();
        if magnitude > Self::PERTURBATIVE_MAGNITUDE {
            warnings.push(Warning::Perturbative { chi: magnitude });
        }
        Ok(Checked::with_warnings(CouplingChi { magnitude, phase }, warnings))
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

impl Default for CouplingChi {
    fn default() -> Self {
        CouplingChi { magnitude: 0.1, phase: 0.0 }
    }
}

/// Complex two-photon amplitude on a pair of grids.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    grid_s: FrequencyGrid,
    grid_i: FrequencyGrid,
    values: DMatrix<Complex64>,
    normalized: bool,
}

impl JointSpectralAmplitude {
    /// Wrap raw samples; the normalized flag is set only if the discrete norm
    /// is 1 within [`NORM_TOL`].
    pub fn new(grid_s: FrequencyGrid, grid_i: FrequencyGrid, values: DMatrix<Complex64>) -> Result<Self> {
        if values.nrows() != grid_s.len() || values.ncols() != grid_i.len() {
            return Err(invalid(format!(
                "JSA matrix is {}x{} for grids of {} and {} points",
                values.nrows(),
                values.ncols(),
                grid_s.len(),
                grid_i.len()
            )));
        }
        let mut jsa = JointSpectralAmplitude { grid_s, grid_i, values, normalized: false };
        jsa.normalized = (jsa.norm_sqr() - 1.0).abs() <= NORM_TOL;
        Ok(jsa)
    }

    pub fn from_fn(
        grid_s: FrequencyGrid,
        grid_i: FrequencyGrid,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Self {
        let values = DMatrix::from_fn(grid_s.len(), grid_i.len(), |j, k| f(grid_s.point(j), grid_i.point(k)));
        let mut jsa = JointSpectralAmplitude { grid_s, grid_i, values, normalized: false };
        jsa.normalized = (jsa.norm_sqr() - 1.0).abs() <= NORM_TOL;
        jsa
    }

    pub fn grid_s(&self) -> &FrequencyGrid {
        &self.grid_s
    }

    pub fn grid_i(&self) -> &FrequencyGrid {
        &self.grid_i
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Area element `step_s · step_i`.
    pub fn cell(&self) -> f64 {
        self.grid_s.step() * self.grid_i.step()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::Degenerate(format!("cannot normalize JSA with norm {norm}")));
        }
        let values = self.values.map(|v| v / norm);
        Ok(JointSpectralAmplitude {
            grid_s: self.grid_s.clone(),
            grid_i: self.grid_i.clone(),
            values,
            normalized: true,
        })
    }

    pub(crate) fn ensure_same_grids(&self, other: &Self, what: &str) -> Result<()> {
        self.grid_s.ensure_matches(&other.grid_s, what)?;
        self.grid_i.ensure_matches(&other.grid_i, what)
    }

    /// `⟨a|b⟩ = Σ conj(a) b · step_s step_i`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        self.ensure_same_grids(other, "JSA inner product")?;
        let sum: Complex64 = self.values.iter().zip(other.values.iter()).map(|(a, b)| a.conj() * b).sum();
        Ok(sum * self.cell())
    }

    /// Samples scaled by `sqrt(step_s step_i)`: the coefficient matrix in an
    /// orthonormal discrete basis.
    pub fn scaled_matrix(&self) -> DMatrix<Complex64> {
        let s = self.cell().sqrt();
        self.values.map(|v| v * s)
    }

    /// Orthonormal-basis coefficient vector, flattened row-major
    /// (`index = j · n_i + k`).
    pub fn flatten(&self) -> DVector<Complex64> {
        let s = self.cell().sqrt();
        let (ns, ni) = self.values.shape();
        DVector::from_fn(ns * ni, |idx, _| self.values[(idx / ni, idx % ni)] * s)
    }

    /// Whether every sample has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Mirror the idler axis about its grid center, `ω_i − c ↦ c − ω_i`.
    pub fn reflect_idler(&self) -> Self {
        let n = self.grid_i.len();
        let values = DMatrix::from_fn(self.grid_s.len(), n, |j, k| self.values[(j, n - 1 - k)]);
        JointSpectralAmplitude { values, ..self.clone() }
    }

    /// Bilinearly resample onto sum/difference coordinates
    /// `ν = ω_s + ω_i`, `ν′ = ω_s − ω_i`, using grids with the same number of
    /// points and step as the signal grid. Zero outside the original grids.
    pub fn to_sum_difference(&self) -> Result<(FrequencyGrid, FrequencyGrid, DMatrix<Complex64>)> {
        let h = self.grid_s.step();
        let nu = FrequencyGrid::with_step(self.grid_s.center() + self.grid_i.center(), h, self.grid_s.len())?;
        let nu_p = FrequencyGrid::with_step(self.grid_s.center() - self.grid_i.center(), h, self.grid_i.len())?;
        let m = DMatrix::from_fn(nu.len(), nu_p.len(), |a, b| {
            let (x, y) = (nu.point(a), nu_p.point(b));
            self.bilinear(0.5 * (x + y), 0.5 * (x - y))
        });
        Ok((nu, nu_p, m))
    }

    /// Bilinear interpolation at an arbitrary point; zero outside.
    pub fn bilinear(&self, omega_s: f64, omega_i: f64) -> Complex64 {
        let locate = |g: &FrequencyGrid, x: f64| -> Option<(usize, f64)> {
            let pos = (x - g.first()) / g.step();
            let last = (g.len() - 1) as f64;
            if !(pos >= -1e-9 && pos <= last + 1e-9) {
                return None;
            }
            let pos = pos.clamp(0.0, last);
            let i = (pos.floor() as usize).min(g.len() - 2);
            Some((i, pos - i as f64))
        };
        let (Some((j, u)), Some((k, v))) = (locate(&self.grid_s, omega_s), locate(&self.grid_i, omega_i)) else {
            return Complex64::new(0.0, 0.0);
        };
        let f = &self.values;
        f[(j, k)] * ((1.0 - u) * (1.0 - v))
            + f[(j + 1, k)] * (u * (1.0 - v))
            + f[(j, k + 1)] * ((1.0 - u) * v)
            + f[(j + 1, k + 1)] * (u * v)
    }
}

/// First-order PDC (or time-reversed SFG) amplitude:
/// `f = χ φ(ω_s + ω_i) Φ(ω_s, ω_i) / sqrt(w)` with
/// `w = ∫∫ |χ φ Φ|²`. The mode is read at the sums by linear interpolation.
///
/// Returns the normalized JSA and `w`.
pub fn build_jsa(
    pump: &SpectralAmplitude,
    pm: &PhaseMatchSpec,
    chi: CouplingChi,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> Result<Checked<(JointSpectralAmplitude, f64)>> {
    let mut warnings = Vec::new();
    let edge = pump.edge_ratio();
    if edge > PUMP_EDGE_TOL {
        warnings.push(Warning::Truncation { what: "pump/detection mode".into(), captured: edge });
    }
    let chi_value = chi.value();
    let raw = DMatrix::from_fn(grid_s.len(), grid_i.len(), |j, k| {
        let (ws, wi) = (grid_s.point(j), grid_i.point(k));
        chi_value * pump.at(ws + wi) * pm.eval(ws, wi)
    });
    let w = raw.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid_s.step() * grid_i.step();
    if !(w >= 1e-300) || !w.is_finite() {
        return Err(Error::Degenerate(format!(
            "mode and phasematching do not overlap on the grid (w = {w:e})"
        )));
    }
    let inv = 1.0 / w.sqrt();
    let values = raw.map(|v| v * inv);
    let jsa = JointSpectralAmplitude {
        grid_s: grid_s.clone(),
        grid_i: grid_i.clone(),
        values,
        normalized: true,
    };
    Ok(Checked::with_warnings((jsa, w), warnings))
}

/// Correlated Gaussian parameters: bandwidth `gamma`, correlation `alpha`
/// (`alpha = 1` is maximal frequency anticorrelation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianJsaParams {
    pub gamma: f64,
    pub alpha: f64,
}

impl GaussianJsaParams {
    pub fn new(gamma: f64, alpha: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(invalid(format!("gamma must be positive, got {gamma}")));
        }
        if !(alpha.abs() <= 1.0) {
            return Err(invalid(format!("correlation must lie in [-1, 1], got {alpha}")));
        }
        Ok(GaussianJsaParams { gamma, alpha })
    }
}

/// Normalized `exp[−(x²/2 + y²/2 + α x y)/(γ²(1−α²))]`, with `x`, `y`
/// measured from the grid centers.
pub fn gaussian_jsa(
    params: GaussianJsaParams,
    grid_a: &FrequencyGrid,
    grid_b: &FrequencyGrid,
) -> Result<JointSpectralAmplitude> {
    let GaussianJsaParams { gamma, alpha } = params;
    if !(alpha.abs() < 1.0) {
        return Err(invalid(format!(
            "|alpha| = {} has a singular closed form; use cw_limit_jsa for maximal correlation",
            alpha.abs()
        )));
    }
    let (ca, cb) = (grid_a.center(), grid_b.center());
    let denom = gamma * gamma * (1.0 - alpha * alpha);
    JointSpectralAmplitude::from_fn(grid_a.clone(), grid_b.clone(), |a, b| {
        let (x, y) = (a - ca, b - cb);
        Complex64::new((-(0.5 * x * x + 0.5 * y * y + alpha * x * y) / denom).exp(), 0.0)
    })
    .normalized()
}

/// Maximal-anticorrelation ridge on `ω_a + ω_b = c_a + c_b`: a Gaussian one
/// grid step wide in the sum and `exp(−ν′²/8γ²)` in the difference, which is
/// the `α → 1` limit of [`gaussian_jsa`] with resolution-limited sum width.
pub fn cw_limit_jsa(
    gamma_diff: f64,
    grid_a: &FrequencyGrid,
    grid_b: &FrequencyGrid,
) -> Result<JointSpectralAmplitude> {
    if !(gamma_diff > 0.0) || !gamma_diff.is_finite() {
        return Err(invalid(format!("difference bandwidth must be positive, got {gamma_diff}")));
    }
    let h = grid_a.step().max(grid_b.step());
    let (ca, cb) = (grid_a.center(), grid_b.center());
    JointSpectralAmplitude::from_fn(grid_a.clone(), grid_b.clone(), |a, b| {
        let (x, y) = (a - ca, b - cb);
        let (nu, nu_p) = (x + y, x - y);
        let value = (-nu * nu / (2.0 * h * h) - nu_p * nu_p / (8.0 * gamma_diff * gamma_diff)).exp();
        Complex64::new(value, 0.0)
    })
    .normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::schmidt_number;
    use crate::grid::{gaussian_mode, hermite_gauss, make_grid};
    use std::f64::consts::FRAC_PI_4;

    fn default_grid() -> FrequencyGrid {
        make_grid(0.0, 16.0, 256).unwrap()
    }

    fn odd_grid() -> FrequencyGrid {
        make_grid(0.0, 16.0, 255).unwrap()
    }

    fn chi() -> CouplingChi {
        CouplingChi::new(0.1, 0.3).unwrap().value
    }

    fn gaussian_profile(width: f64) -> PhaseMatchSpec {
        let g = make_grid(0.0, 64.0, 1024).unwrap();
        PhaseMatchSpec::nu_prime_only(gaussian_mode(0.0, width, &g).unwrap().value).unwrap()
    }

    #[test]
    fn sinc_peaks_at_origin() {
        let g = odd_grid();
        let pm = PhaseMatchSpec::sinc(0.3, 0.7).unwrap();
        let phi = evaluate_phasematching(&pm, &g, &g);
        let c = g.len() / 2;
        assert_eq!(g.point(c), 0.0);
        assert_eq!(phi[(c, c)], Complex64::new(1.0, 0.0));
        assert!(phi.iter().all(|v| v.norm() <= 1.0 + 1e-15));
    }

    #[test]
    fn nu_prime_only_is_constant_on_diagonal() {
        let g = default_grid();
        let pm = gaussian_profile(1.3);
        let phi = evaluate_phasematching(&pm, &g, &g);
        let expected = pm.eval_sum_difference(0.0, 0.0);
        for j in 0..g.len() {
            assert_eq!(phi[(j, j)], expected);
        }
    }

    #[test]
    fn sinc_at_45_degrees_ignores_sum_frequency() {
        let g = default_grid();
        let pm = PhaseMatchSpec::sinc(FRAC_PI_4, 0.8).unwrap();
        let phi = evaluate_phasematching(&pm, &g, &g);
        // Moving along the sum direction (j+1, k+1) keeps ν′ fixed.
        for j in 0..g.len() - 1 {
            for k in (0..g.len() - 1).step_by(7) {
                assert!((phi[(j, k)] - phi[(j + 1, k + 1)]).norm() < 1e-12);
            }
        }
        // while the difference direction does change Φ.
        assert!((phi[(128, 128)] - phi[(129, 127)]).norm() > 1e-3);
    }

    #[test]
    fn chi_validation() {
        assert!(CouplingChi::new(0.0, 0.0).is_err());
        assert!(CouplingChi::new(0.31, 0.0).is_err());
        assert!(CouplingChi::new(0.1, 0.0).unwrap().warnings.is_empty());
        assert_eq!(CouplingChi::new(0.2, 0.0).unwrap().warnings.len(), 1);
    }

    #[test]
    fn build_jsa_is_normalized_and_w_scales_with_chi() {
        let g = default_grid();
        let pump = hermite_gauss(0, 0.0, 1.0, &g).unwrap().value;
        let pm = PhaseMatchSpec::sinc(0.4, 1.5).unwrap();
        let small = CouplingChi::new(0.05, 0.2).unwrap().value;
        let big = CouplingChi::new(0.1, 0.2).unwrap().value;
        let (f1, w1) = build_jsa(&pump, &pm, small, &g, &g).unwrap().value;
        let (f2, w2) = build_jsa(&pump, &pm, big, &g, &g).unwrap().value;
        assert!(f1.is_normalized());
        assert!((f1.norm_sqr() - 1.0).abs() < 1e-9);
        assert_eq!(w2, 4.0 * w1);
        let diff = (f1.values() - f2.values()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn chi_phase_is_a_global_phase() {
        let g = make_grid(0.0, 12.0, 96).unwrap();
        let pump = hermite_gauss(1, 0.0, 1.0, &g).unwrap().value;
        let pm = PhaseMatchSpec::gaussian(0.2, 1.0).unwrap();
        let (a, wa) = build_jsa(&pump, &pm, CouplingChi::new(0.1, 0.0).unwrap().value, &g, &g).unwrap().value;
        let (b, wb) = build_jsa(&pump, &pm, CouplingChi::new(0.1, 1.1).unwrap().value, &g, &g).unwrap().value;
        assert!((wa - wb).abs() < 1e-15 * wa);
        assert!((a.inner_product(&b).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_overlap_is_an_error() {
        let g = make_grid(0.0, 8.0, 64).unwrap();
        // Pump grid far from every reachable sum frequency.
        let far = make_grid(100.0, 8.0, 64).unwrap();
        let pump = hermite_gauss(0, 100.0, 1.0, &far).unwrap().value;
        let pm = PhaseMatchSpec::sinc(0.0, 1.0).unwrap();
        assert!(matches!(build_jsa(&pump, &pm, chi(), &g, &g), Err(Error::Degenerate(_))));
    }

    #[test]
    fn truncated_pump_warns() {
        let g = make_grid(0.0, 16.0, 128).unwrap();
        let narrow = make_grid(0.0, 2.0, 32).unwrap();
        let pump = hermite_gauss(0, 0.0, 1.0, &narrow).unwrap().value;
        let pm = PhaseMatchSpec::sinc(0.0, 1.0).unwrap();
        let built = build_jsa(&pump, &pm, chi(), &g, &g).unwrap();
        assert!(built.warnings.iter().any(|w| matches!(w, Warning::Truncation { .. })));
    }

    #[test]
    fn hermite_pump_at_45_degrees_is_separable_in_rotated_frame() {
        let g = default_grid();
        let pm = gaussian_profile(2.0);
        let pump = hermite_gauss(0, 0.0, 1.0, &g.sum_grid(&g).unwrap()).unwrap().value;
        let (f, _) = build_jsa(&pump, &pm, chi(), &g, &g).unwrap().value;
        let (_, _, rotated) = f.to_sum_difference().unwrap();
        let sv = rotated.singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(sv[1] < 1e-3 * sv[0], "s1/s0 = {}", sv[1] / sv[0]);
        let rotated_jsa = JointSpectralAmplitude::new(g.clone(), g.clone(), rotated).unwrap().normalized().unwrap();
        assert!((schmidt_number(&rotated_jsa).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn first_order_pump_puts_node_on_antidiagonal() {
        let g = default_grid();
        let pm = gaussian_profile(2.0);
        let pump = hermite_gauss(1, 0.0, 1.0, &g.sum_grid(&g).unwrap()).unwrap().value;
        let (f, _) = build_jsa(&pump, &pm, chi(), &g, &g).unwrap().value;
        let v = f.values();
        let n = g.len();
        // Points mirrored across ω_s + ω_i = 0 carry opposite amplitudes.
        for j in (0..n).step_by(5) {
            for k in (0..n).step_by(3) {
                let a = v[(j, k)];
                let b = v[(n - 1 - k, n - 1 - j)];
                assert!((a + b).norm() <= 1e-12 * (1.0 + a.norm()));
            }
        }
        assert!(v[(130, 130)].re * v[(125, 125)].re < 0.0);
    }

    #[test]
    fn gaussian_jsa_schmidt_numbers() {
        let g = default_grid();
        let sep = gaussian_jsa(GaussianJsaParams::new(1.0, 0.0).unwrap(), &g, &g).unwrap();
        assert!((schmidt_number(&sep).unwrap() - 1.0).abs() < 1e-6);
        let pos = gaussian_jsa(GaussianJsaParams::new(1.0, 0.6).unwrap(), &g, &g).unwrap();
        let neg = gaussian_jsa(GaussianJsaParams::new(1.0, -0.6).unwrap(), &g, &g).unwrap();
        let kp = schmidt_number(&pos).unwrap();
        let kn = schmidt_number(&neg).unwrap();
        assert!((kp - 1.25).abs() < 0.0125);
        assert!((kp - kn).abs() < 1e-9);
    }

    #[test]
    fn gaussian_jsa_rejects_maximal_correlation() {
        let g = default_grid();
        let err = gaussian_jsa(GaussianJsaParams::new(1.0, 1.0).unwrap(), &g, &g).unwrap_err();
        assert!(err.to_string().contains("cw_limit_jsa"));
        assert!(GaussianJsaParams::new(1.0, 1.2).is_err());
    }

    #[test]
    fn reflection_flips_correlation_sign() {
        let g = default_grid();
        let pos = gaussian_jsa(GaussianJsaParams::new(1.0, 0.6).unwrap(), &g, &g).unwrap();
        let neg = gaussian_jsa(GaussianJsaParams::new(1.0, -0.6).unwrap(), &g, &g).unwrap();
        let diff = (pos.reflect_idler().values() - neg.values()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn cw_ridge_properties() {
        let g = default_grid();
        let ridge = cw_limit_jsa(1.0, &g, &g).unwrap();
        assert!(ridge.is_normalized());
        let near = gaussian_jsa(GaussianJsaParams::new(1.0, 0.99).unwrap(), &g, &g).unwrap();
        let far = gaussian_jsa(GaussianJsaParams::new(1.0, 0.5).unwrap(), &g, &g).unwrap();
        assert!(ridge.inner_product(&near).unwrap().norm() > ridge.inner_product(&far).unwrap().norm());

        let coarse = make_grid(0.0, 16.0, 128).unwrap();
        let k_coarse = schmidt_number(&cw_limit_jsa(1.0, &coarse, &coarse).unwrap()).unwrap();
        let k_fine = schmidt_number(&ridge).unwrap();
        assert!(k_fine > k_coarse);
    }

    /// The sum-frequency marginal of the ridge, computed directly from the
    /// samples grouped by lattice sum index.
    #[test]
    fn cw_ridge_sum_marginal_is_narrow() {
        let g = default_grid();
        let ridge = cw_limit_jsa(1.0, &g, &g).unwrap();
        let n = g.len();
        let sum_grid = g.sum_grid(&g).unwrap();
        let mut marginal = vec![0.0; 2 * n - 1];
        for j in 0..n {
            for k in 0..n {
                marginal[j + k] += ridge.values()[(j, k)].norm_sqr();
            }
        }
        let total: f64 = marginal.iter().sum();
        let mean: f64 = marginal.iter().enumerate().map(|(m, p)| p * sum_grid.point(m)).sum::<f64>() / total;
        let var: f64 =
            marginal.iter().enumerate().map(|(m, p)| p * (sum_grid.point(m) - mean).powi(2)).sum::<f64>() / total;
        assert!(var.sqrt() <= 1.5 * g.step());
    }

    #[test]
    fn new_checks_shape() {
        let g = make_grid(0.0, 4.0, 8).unwrap();
        assert!(JointSpectralAmplitude::new(g.clone(), g.clone(), DMatrix::zeros(8, 7)).is_err());
        let zero = JointSpectralAmplitude::new(g.clone(), g, DMatrix::zeros(8, 8)).unwrap();
        assert!(!zero.is_normalized());
        assert!(matches!(zero.normalized(), Err(Error::Degenerate(_))));
    }
}
