//! Frequency-axis discretization, quadrature and temporal-mode families.
//!
//! Amplitudes store samples of the continuum function; the quadrature step is
//! applied inside inner products, so a normalized amplitude satisfies
//! `Σ |a_k|² · step = 1`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{invalid, Checked, Error, Result, Warning};

/// Relative tolerance used when deciding whether two grids are the same.
const GRID_MATCH_TOL: f64 = 1e-12;

/// Uniform discretization of one angular-frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    center: f64,
    span: f64,
    n_points: usize,
}

impl FrequencyGrid {
    pub fn new(center: f64, span: f64, n_points: usize) -> Result<Self> {
        if !(span > 0.0) || !span.is_finite() {
            return Err(invalid(format!("grid span must be positive and finite, got {span}")));
        }
        if !center.is_finite() {
            return Err(invalid("grid center must be finite"));
        }
        if n_points < 2 {
            return Err(invalid(format!("grid needs at least 2 points, got {n_points}")));
        }
        Ok(FrequencyGrid { center, span, n_points })
    }

    /// Grid with the given number of points and spacing, centered on `center`.
    pub fn with_step(center: f64, step: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(invalid(format!("grid needs at least 2 points, got {n_points}")));
        }
        Self::new(center, step * (n_points - 1) as f64, n_points)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.span / (self.n_points - 1) as f64
    }

    /// The k-th grid point. Points are placed symmetrically about the center
    /// so a grid centered on zero holds exact ± pairs.
    pub fn point(&self, k: usize) -> f64 {
        self.center + (k as f64 - 0.5 * (self.n_points - 1) as f64) * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.point(k)).collect()
    }

    pub fn first(&self) -> f64 {
        self.point(0)
    }

    pub fn last(&self) -> f64 {
        self.point(self.n_points - 1)
    }

    /// Whether `other` describes the same set of points.
    pub fn matches(&self, other: &FrequencyGrid) -> bool {
        let scale = self.span.abs().max(1.0);
        self.n_points == other.n_points
            && (self.center - other.center).abs() <= GRID_MATCH_TOL * scale
            && (self.span - other.span).abs() <= GRID_MATCH_TOL * scale
    }

    pub(crate) fn ensure_matches(&self, other: &FrequencyGrid, what: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::IncompatibleGrid(format!(
                "{what}: ({}, {}, {}) vs ({}, {}, {})",
                self.center, self.span, self.n_points, other.center, other.span, other.n_points
            )))
        }
    }

    pub(crate) fn same_step(&self, other: &FrequencyGrid) -> bool {
        (self.step() - other.step()).abs() <= GRID_MATCH_TOL * self.step().max(other.step())
    }

    /// Lattice of all sums `ω_a + ω_b`; the sum of points `j` and `k` is
    /// point `j + k`. Requires equal steps.
    pub fn sum_grid(&self, other: &FrequencyGrid) -> Result<FrequencyGrid> {
        if !self.same_step(other) {
            return Err(Error::IncompatibleGrid(format!(
                "sum lattice needs equal steps, got {} and {}",
                self.step(),
                other.step()
            )));
        }
        FrequencyGrid::with_step(
            self.center + other.center,
            self.step(),
            self.n_points + other.n_points - 1,
        )
    }

    /// Lattice of all differences `ω_a − ω_b`; the difference of points `j`
    /// and `k` is point `j − k + other.len() − 1`. Requires equal steps.
    pub fn difference_grid(&self, other: &FrequencyGrid) -> Result<FrequencyGrid> {
        if !self.same_step(other) {
            return Err(Error::IncompatibleGrid(format!(
                "difference lattice needs equal steps, got {} and {}",
                self.step(),
                other.step()
            )));
        }
        FrequencyGrid::with_step(
            self.center - other.center,
            self.step(),
            self.n_points + other.n_points - 1,
        )
    }

    /// Copy of this grid translated by `offset`.
    pub fn shifted(&self, offset: f64) -> FrequencyGrid {
        FrequencyGrid { center: self.center + offset, ..self.clone() }
    }

    /// Linear interpolation of samples `values` at `x`; zero outside the grid.
    pub fn interpolate(&self, values: &[Complex64], x: f64) -> Complex64 {
        debug_assert_eq!(values.len(), self.n_points);
        let pos = (x - self.first()) / self.step();
        let last = (self.n_points - 1) as f64;
        if !(pos >= -1e-9 && pos <= last + 1e-9) {
            return Complex64::new(0.0, 0.0);
        }
        let pos = pos.clamp(0.0, last);
        let i = (pos.floor() as usize).min(self.n_points - 2);
        let t = pos - i as f64;
        values[i] * (1.0 - t) + values[i + 1] * t
    }
}

/// Build a uniform grid; see [`FrequencyGrid::new`].
pub fn make_grid(center: f64, span: f64, n_points: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::new(center, span, n_points)
}

/// Complex single-photon spectral amplitude sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
}

impl SpectralAmplitude {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "amplitude has {} samples for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        Ok(SpectralAmplitude { grid, values })
    }

    /// Sample a function on the grid.
    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        SpectralAmplitude { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.step()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&mut self, factor: Complex64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Rescaled copy with unit norm. Fails on a zero amplitude.
    pub fn normalized(&self) -> Result<SpectralAmplitude> {
        let norm = self.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Degenerate(format!("cannot normalize amplitude with norm {norm}")));
        }
        let mut out = self.clone();
        out.scale(Complex64::new(1.0 / norm, 0.0));
        Ok(out)
    }

    /// Value at an arbitrary frequency by linear interpolation.
    pub fn at(&self, x: f64) -> Complex64 {
        self.grid.interpolate(&self.values, x)
    }

    /// Resample onto another grid by linear interpolation.
    pub fn resample(&self, grid: &FrequencyGrid) -> SpectralAmplitude {
        SpectralAmplitude::from_fn(grid.clone(), |x| self.at(x))
    }

    /// Largest sample magnitude.
    pub fn peak(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Ratio of the larger edge sample to the peak magnitude.
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.peak();
        if peak == 0.0 {
            return 0.0;
        }
        let edge = self.values[0].norm().max(self.values[self.values.len() - 1].norm());
        edge / peak
    }
}

/// `⟨a|b⟩ = Σ conj(a_k) b_k · step`.
pub fn inner_product(a: &SpectralAmplitude, b: &SpectralAmplitude) -> Result<Complex64> {
    a.grid.ensure_matches(&b.grid, "inner product")?;
    let sum: Complex64 = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum();
    Ok(sum * a.grid.step())
}

/// Normalized Hermite-Gauss functions of orders `0..=max_order` at `t`,
/// via the three-term recurrence on the already-normalized functions.
pub fn hermite_functions(max_order: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_order + 1);
    let psi0 = PI.powf(-0.25) * (-0.5 * t * t).exp();
    out.push(psi0);
    if max_order == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * t * psi0);
    for k in 2..=max_order {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * t * out[k - 1] - ((kf - 1.0) / kf).sqrt() * out[k - 2];
        out.push(next);
    }
    out
}

/// Relative norm deviation beyond which a mode counts as truncated.
const TRUNCATION_TOL: f64 = 0.01;

/// Order-`order` Hermite-Gauss mode `H_n(x) exp(−x²/2)` with
/// `x = (ω − center)/width`, normalized on the grid.
pub fn hermite_gauss(
    order: usize,
    center: f64,
    width: f64,
    grid: &FrequencyGrid,
) -> Result<Checked<SpectralAmplitude>> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(invalid(format!("mode width must be positive, got {width}")));
    }
    let scale = width.sqrt().recip();
    let raw = SpectralAmplitude::from_fn(grid.clone(), |w| {
        let t = (w - center) / width;
        Complex64::new(scale * hermite_functions(order, t)[order], 0.0)
    });
    // The continuum function has unit norm; the grid captures `captured` of it.
    let captured = raw.norm_sqr();
    let mut warnings = Vec::new();
    if (captured - 1.0).abs() > TRUNCATION_TOL {
        warnings.push(Warning::Truncation { what: format!("Hermite-Gauss mode {order}"), captured });
    }
    Ok(Checked::with_warnings(raw.normalized()?, warnings))
}

/// Unit-norm Gaussian `exp(−(ω−center)²/2γ²) / sqrt(γ√π)` on the grid.
pub fn gaussian_mode(center: f64, width: f64, grid: &FrequencyGrid) -> Result<Checked<SpectralAmplitude>> {
    hermite_gauss(0, center, width, grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    HermiteGauss,
    /// Adjacent frequency bins of width `width`, modelling spectrally
    /// resolved detection.
    MonochromaticBins,
}

/// A family of orthonormal temporal modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFamily {
    pub kind: ModeKind,
    pub center: f64,
    pub width: f64,
    /// Number of members; orders `0..n_modes`.
    pub n_modes: usize,
}

impl ModeFamily {
    pub fn hermite_gauss(center: f64, width: f64, n_modes: usize) -> Self {
        ModeFamily { kind: ModeKind::HermiteGauss, center, width, n_modes }
    }

    pub fn bins(center: f64, width: f64, n_modes: usize) -> Self {
        ModeFamily { kind: ModeKind::MonochromaticBins, center, width, n_modes }
    }

    /// Same family truncated to its first `n_modes` members.
    pub fn truncated(&self, n_modes: usize) -> Self {
        ModeFamily { n_modes, ..self.clone() }
    }

    /// Whether the grid is wide enough for the members to be orthonormal.
    pub fn has_adequate_support(&self, grid: &FrequencyGrid) -> bool {
        match self.kind {
            ModeKind::HermiteGauss => grid.span() >= 8.0 * self.width * (self.n_modes as f64).sqrt(),
            ModeKind::MonochromaticBins => {
                let half = 0.5 * self.width * self.n_modes as f64;
                self.center - half >= grid.first() - 0.5 * grid.step()
                    && self.center + half <= grid.last() + 0.5 * grid.step()
            }
        }
    }

    /// Sample every member on the grid.
    pub fn members(&self, grid: &FrequencyGrid) -> Result<Checked<Vec<SpectralAmplitude>>> {
        if self.n_modes == 0 {
            return Err(invalid("mode family needs at least one member"));
        }
        if !(self.width > 0.0) {
            return Err(invalid(format!("mode width must be positive, got {}", self.width)));
        }
        match self.kind {
            ModeKind::HermiteGauss => self.hermite_members(grid),
            ModeKind::MonochromaticBins => self.bin_members(grid).map(Checked::new),
        }
    }

    fn hermite_members(&self, grid: &FrequencyGrid) -> Result<Checked<Vec<SpectralAmplitude>>> {
        let max_order = self.n_modes - 1;
        let scale = self.width.sqrt().recip();
        let table: Vec<Vec<f64>> = grid
            .points()
            .into_iter()
            .map(|w| hermite_functions(max_order, (w - self.center) / self.width))
            .collect();
        let mut warnings = Vec::new();
        let mut members = Vec::with_capacity(self.n_modes);
        for n in 0..self.n_modes {
            let values = table.iter().map(|row| Complex64::new(scale * row[n], 0.0)).collect();
            let raw = SpectralAmplitude::new(grid.clone(), values)?;
            let captured = raw.norm_sqr();
            if (captured - 1.0).abs() > TRUNCATION_TOL {
                warnings.push(Warning::Truncation { what: format!("Hermite-Gauss mode {n}"), captured });
            }
            members.push(raw.normalized()?);
        }
        Ok(Checked::with_warnings(members, warnings))
    }

    fn bin_members(&self, grid: &FrequencyGrid) -> Result<Vec<SpectralAmplitude>> {
        let offset = 0.5 * (self.n_modes - 1) as f64;
        (0..self.n_modes)
            .map(|n| {
                let bin_center = self.center + (n as f64 - offset) * self.width;
                let inside: Vec<bool> = grid
                    .points()
                    .into_iter()
                    .map(|w| {
                        let u = (w - bin_center) / self.width;
                        (-0.5 - 1e-9..0.5 - 1e-9).contains(&u)
                    })
                    .collect();
                let count = inside.iter().filter(|&&b| b).count();
                if count == 0 {
                    return Err(invalid(format!("frequency bin {n} contains no grid points")));
                }
                let height = 1.0 / (count as f64 * grid.step()).sqrt();
                let values = inside
                    .into_iter()
                    .map(|b| Complex64::new(if b { height } else { 0.0 }, 0.0))
                    .collect();
                SpectralAmplitude::new(grid.clone(), values)
            })
            .collect()
    }
}
