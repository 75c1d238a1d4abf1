//! Two-photon POVM realized by sum-frequency generation followed by
//! mode-selective detection of the upconverted photon.
//!
//! Detecting the upconverted photon in mode `φ_n` acts on the input pair as
//! `Π_n = w_n |Ψ_n⟩⟨Ψ_n|`, where `Ψ_n` is the normalized pair that PDC pumped
//! in `φ_n` would emit. Elements are kept in rank-decomposed form; dense
//! `(n_s n_i)²` operators are only formed for retrodicted states on grids of
//! at most [`MAX_DENSE_AXIS`] points per axis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::entanglement::hermitian_eigenvalues;
use crate::error::{invalid, Checked, Error, Result};
use crate::grid::{inner_product, FrequencyGrid, ModeFamily, SpectralAmplitude};
use crate::jsa::{build_jsa, evaluate_phasematching, CouplingChi, JointSpectralAmplitude, PhaseMatchSpec, NORM_TOL};

/// Largest per-axis grid size for dense two-photon operators.
pub const MAX_DENSE_AXIS: usize = 64;

/// Density operator on the discretized two-photon space, in the orthonormal
/// basis of quadrature-scaled grid points flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonDensity {
    grid_s: FrequencyGrid,
    grid_i: FrequencyGrid,
    matrix: DMatrix<Complex64>,
}

fn ensure_dense_axes(grid_s: &FrequencyGrid, grid_i: &FrequencyGrid) -> Result<()> {
    if grid_s.len() > MAX_DENSE_AXIS || grid_i.len() > MAX_DENSE_AXIS {
        return Err(Error::ResourceLimit(format!(
            "dense two-photon operator on a {}x{} grid; reduce the resolution to at most \
             {MAX_DENSE_AXIS}x{MAX_DENSE_AXIS} points",
            grid_s.len(),
            grid_i.len()
        )));
    }
    Ok(())
}

impl TwoPhotonDensity {
    pub fn new(grid_s: FrequencyGrid, grid_i: FrequencyGrid, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = grid_s.len() * grid_i.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(invalid(format!(
                "density matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(TwoPhotonDensity { grid_s, grid_i, matrix })
    }

    /// `|f⟩⟨f|` for a pure pair.
    pub fn from_pure(jsa: &JointSpectralAmplitude) -> Result<Self> {
        Self::from_mixture(&[1.0], &[jsa])
    }

    /// `Σ p_j |f_j⟩⟨f_j| / Σ p_j`.
    pub fn from_mixture(weights: &[f64], components: &[&JointSpectralAmplitude]) -> Result<Self> {
        if weights.len() != components.len() || components.is_empty() {
            return Err(invalid("mixture needs one weight per component"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("mixture weights must be non-negative"));
        }
        let first = components[0];
        ensure_dense_axes(first.grid_s(), first.grid_i())?;
        for c in &components[1..] {
            first.ensure_same_grids(c, "mixture components")?;
        }
        let total: f64 = weights.iter().zip(components).map(|(w, c)| w * c.norm_sqr()).sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("mixture has zero trace".into()));
        }
        let dim = first.grid_s().len() * first.grid_i().len();
        let mut stacked = DMatrix::<Complex64>::zeros(dim, components.len());
        for (col, (w, c)) in weights.iter().zip(components).enumerate() {
            let scale = (w / total).sqrt();
            stacked.set_column(col, &(c.flatten() * Complex64::new(scale, 0.0)));
        }
        let matrix = &stacked * stacked.adjoint();
        Ok(TwoPhotonDensity { grid_s: first.grid_s().clone(), grid_i: first.grid_i().clone(), matrix })
    }

    pub fn grid_s(&self) -> &FrequencyGrid {
        &self.grid_s
    }

    pub fn grid_i(&self) -> &FrequencyGrid {
        &self.grid_i
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|v| v.re).sum()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for r in 0..m.nrows() {
            for c in r..m.ncols() {
                worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues, ascending order not guaranteed.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `⟨f|ρ|f⟩` for a two-photon amplitude on the same grids.
    pub fn expectation(&self, jsa: &JointSpectralAmplitude) -> Result<f64> {
        self.grid_s.ensure_matches(jsa.grid_s(), "density expectation")?;
        self.grid_i.ensure_matches(jsa.grid_i(), "density expectation")?;
        let v = jsa.flatten();
        Ok((v.adjoint() * &self.matrix * &v)[(0, 0)].re)
    }
}

/// `Tr ρ²`, evaluated as `Σ |ρ_ab|²` for a Hermitian matrix.
pub fn purity(rho: &TwoPhotonDensity) -> f64 {
    rho.matrix.iter().map(|v| v.norm_sqr()).sum()
}

/// POVM element `Σ_j weight_j |Ψ_j⟩⟨Ψ_j|` with normalized components.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    weights: Vec<f64>,
    components: Vec<JointSpectralAmplitude>,
    label: String,
}

impl PovmElement {
    pub fn new(label: impl Into<String>, weights: Vec<f64>, components: Vec<JointSpectralAmplitude>) -> Result<Self> {
        if weights.len() != components.len() || components.is_empty() {
            return Err(invalid("POVM element needs one weight per component"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("POVM weights must be finite and non-negative"));
        }
        for c in &components {
            let n = c.norm_sqr();
            if (n - 1.0).abs() > NORM_TOL {
                return Err(invalid(format!("POVM component has norm² {n}, expected 1")));
            }
            components[0].ensure_same_grids(c, "POVM components")?;
        }
        Ok(PovmElement { weights, components, label: label.into() })
    }

    /// Rank-one element `w |Ψ⟩⟨Ψ|`.
    pub fn projective(label: impl Into<String>, component: JointSpectralAmplitude, weight: f64) -> Result<Self> {
        Self::new(label, vec![weight], vec![component])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[JointSpectralAmplitude] {
        &self.components
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid_s(&self) -> &FrequencyGrid {
        self.components[0].grid_s()
    }

    pub fn grid_i(&self) -> &FrequencyGrid {
        self.components[0].grid_i()
    }

    pub fn is_projective(&self) -> bool {
        self.components.len() == 1
    }

    pub fn trace(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Π |x⟩ = Σ w_j |Ψ_j⟩⟨Ψ_j|x⟩`.
    pub fn apply(&self, x: &JointSpectralAmplitude) -> Result<JointSpectralAmplitude> {
        let mut out = DMatrix::<Complex64>::zeros(x.values().nrows(), x.values().ncols());
        for (w, c) in self.weights.iter().zip(&self.components) {
            let overlap = c.inner_product(x)? * *w;
            out += c.values() * overlap;
        }
        JointSpectralAmplitude::new(x.grid_s().clone(), x.grid_i().clone(), out)
    }

    /// Purity of the retrodicted state via the component Gram matrix,
    /// `Σ_jk w_j w_k |⟨Ψ_j|Ψ_k⟩|² / (Σ w)²`, without forming the operator.
    pub fn retrodicted_purity(&self) -> Result<f64> {
        let trace = self.trace();
        if !(trace > 0.0) {
            return Err(Error::Degenerate(format!("element '{}' has zero trace", self.label)));
        }
        let refs: Vec<&JointSpectralAmplitude> = self.components.iter().collect();
        let gram = component_gram(&refs)?;
        let mut acc = 0.0;
        for (j, wj) in self.weights.iter().enumerate() {
            for (k, wk) in self.weights.iter().enumerate() {
                acc += wj * wk * gram[(j, k)].norm_sqr();
            }
        }
        Ok(acc / (trace * trace))
    }
}

/// Measurement JSA `f_n = χ φ_n(ω + ω′) Φ(ω, ω′)/sqrt(w_n)` and weight
/// `w_n`: the same construction as [`build_jsa`] with the detection mode in
/// place of the pump.
pub fn measurement_jsa(
    detect_mode: &SpectralAmplitude,
    pm: &PhaseMatchSpec,
    chi: CouplingChi,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> Result<Checked<(JointSpectralAmplitude, f64)>> {
    build_jsa(detect_mode, pm, chi, grid_s, grid_i)
}

/// Projective element `Π_n = w_n |Ψ_n⟩⟨Ψ_n|` for detection in `detect_mode`.
pub fn povm_element(
    label: impl Into<String>,
    detect_mode: &SpectralAmplitude,
    pm: &PhaseMatchSpec,
    chi: CouplingChi,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> Result<Checked<PovmElement>> {
    let Checked { value: (jsa, w), warnings } = measurement_jsa(detect_mode, pm, chi, grid_s, grid_i)?;
    Ok(Checked::with_warnings(PovmElement::projective(label, jsa, w)?, warnings))
}

/// Upconverted single-photon amplitude `σ(ν)` together with the coupling
/// needed to turn it into detection amplitudes.
#[derive(Debug, Clone)]
pub struct Upconversion {
    sigma: SpectralAmplitude,
    chi: CouplingChi,
}

impl Upconversion {
    /// `σ(ν)`, unnormalized, on the sum-frequency lattice.
    pub fn sigma(&self) -> &SpectralAmplitude {
        &self.sigma
    }

    pub fn chi(&self) -> CouplingChi {
        self.chi
    }

    /// Amplitude `−i χ* ⟨φ|σ⟩` of the first-order output in mode `φ`.
    /// The mode is resampled onto the ν lattice unless it already lives there.
    pub fn detection_amplitude(&self, mode: &SpectralAmplitude) -> Result<Complex64> {
        let overlap = if mode.grid().matches(self.sigma.grid()) {
            inner_product(mode, &self.sigma)?
        } else {
            inner_product(&mode.resample(self.sigma.grid()), &self.sigma)?
        };
        Ok(Complex64::new(0.0, -1.0) * self.chi.value().conj() * overlap)
    }

    /// `p = |χ* ⟨φ|σ⟩|²`.
    pub fn detection_probability(&self, mode: &SpectralAmplitude) -> Result<f64> {
        Ok(self.detection_amplitude(mode)?.norm_sqr())
    }
}

/// `σ(ν) = −½ ∫ dν′ Φ̃*(ν, ν′) g̃(ν, ν′)`.
///
/// The signal and idler grids must share a step `h`; the pair `(j, k)` then
/// sits at `ν = ν_{j+k}` on the sum lattice and, for fixed `ν`, the
/// difference frequencies form a sub-lattice of spacing `2h`.
pub fn sfg_amplitude(g: &JointSpectralAmplitude, pm: &PhaseMatchSpec, chi: CouplingChi) -> Result<Upconversion> {
    let (gs, gi) = (g.grid_s(), g.grid_i());
    let nu_grid = gs.sum_grid(gi)?;
    let diff_grid = gs.difference_grid(gi)?;
    let (ns, ni) = (gs.len(), gi.len());
    let d_nu_prime = 2.0 * gs.step();
    let values = g.values();
    let sigma: Vec<Complex64> = (0..nu_grid.len())
        .map(|m| {
            let nu = nu_grid.point(m);
            let lo = m.saturating_sub(ni - 1);
            let hi = m.min(ns - 1);
            let integral: Complex64 = (lo..=hi)
                .map(|j| {
                    let k = m - j;
                    let nu_prime = diff_grid.point(j + ni - 1 - k);
                    pm.eval_sum_difference(nu, nu_prime).conj() * values[(j, k)]
                })
                .sum();
            integral * (-0.5 * d_nu_prime)
        })
        .collect();
    Ok(Upconversion { sigma: SpectralAmplitude::new(nu_grid, sigma)?, chi })
}

/// Input to the Born rule.
#[derive(Debug, Clone, Copy)]
pub enum TwoPhotonInput<'a> {
    Pure(&'a JointSpectralAmplitude),
    Mixed(&'a TwoPhotonDensity),
}

impl<'a> From<&'a JointSpectralAmplitude> for TwoPhotonInput<'a> {
    fn from(g: &'a JointSpectralAmplitude) -> Self {
        TwoPhotonInput::Pure(g)
    }
}

impl<'a> From<&'a TwoPhotonDensity> for TwoPhotonInput<'a> {
    fn from(rho: &'a TwoPhotonDensity) -> Self {
        TwoPhotonInput::Mixed(rho)
    }
}

/// `p = Tr(ρ Π)`; for a pure input `Σ_j w_j |⟨Ψ_j|g⟩|²`. A zero input
/// gives zero.
pub fn born_probability<'a>(input: impl Into<TwoPhotonInput<'a>>, element: &PovmElement) -> Result<f64> {
    match input.into() {
        TwoPhotonInput::Pure(g) => {
            let mut p = 0.0;
            for (w, c) in element.weights.iter().zip(&element.components) {
                p += w * c.inner_product(g)?.norm_sqr();
            }
            Ok(p)
        }
        TwoPhotonInput::Mixed(rho) => {
            let mut p = 0.0;
            for (w, c) in element.weights.iter().zip(&element.components) {
                p += w * rho.expectation(c)?;
            }
            Ok(p)
        }
    }
}

/// `Π_q = Σ_n q_n Π_n` over projective elements.
pub fn mix_elements(qs: &[f64], elements: &[PovmElement]) -> Result<PovmElement> {
    if qs.len() != elements.len() || elements.is_empty() {
        return Err(invalid("need one mixing weight per element"));
    }
    if let Some(q) = qs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(invalid(format!("mixing weight {q} outside [0, 1]")));
    }
    if let Some(e) = elements.iter().find(|e| !e.is_projective()) {
        return Err(invalid(format!("element '{}' is not projective", e.label)));
    }
    let weights = qs.iter().zip(elements).map(|(q, e)| q * e.weights[0]).collect();
    let components = elements.iter().map(|e| e.components[0].clone()).collect();
    let label = elements.iter().map(|e| e.label.as_str()).collect::<Vec<_>>().join("+");
    PovmElement::new(format!("mix({label})"), weights, components)
}

/// `ρ = Π / Tr Π` as a dense operator.
pub fn retrodicted_state(element: &PovmElement) -> Result<TwoPhotonDensity> {
    if !(element.trace() > 0.0) {
        return Err(Error::Degenerate(format!("element '{}' has zero trace", element.label)));
    }
    let refs: Vec<&JointSpectralAmplitude> = element.components.iter().collect();
    TwoPhotonDensity::from_mixture(&element.weights, &refs)
}

/// `G_{nm} = ⟨Ψ_n|Ψ_m⟩` for a list of amplitudes on common grids.
pub fn component_gram(components: &[&JointSpectralAmplitude]) -> Result<DMatrix<Complex64>> {
    let n = components.len();
    let mut g = DMatrix::<Complex64>::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = components[a].inner_product(components[b])?;
            g[(a, b)] = v;
            g[(b, a)] = v.conj();
        }
    }
    Ok(g)
}

/// Gram matrix of the states behind a list of projective elements.
pub fn gram_matrix(elements: &[PovmElement]) -> Result<DMatrix<Complex64>> {
    if let Some(e) = elements.iter().find(|e| !e.is_projective()) {
        return Err(invalid(format!("element '{}' is not projective", e.label)));
    }
    let refs: Vec<&JointSpectralAmplitude> = elements.iter().map(|e| &e.components[0]).collect();
    component_gram(&refs)
}

/// Diagonal of the no-detection element, `1 − |χ|² |Φ(ω, ω′)|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullElement {
    pub grid_s: FrequencyGrid,
    pub grid_i: FrequencyGrid,
    pub diagonal: DMatrix<f64>,
}

/// Null element plus the convergence of the detection elements' partial sum.
#[derive(Debug, Clone)]
pub struct NullElementReport {
    pub null: NullElement,
    /// `max |D_N − |χ|²|Φ|²|` over the central half of both axes.
    pub completeness_defect: f64,
    /// The same defect divided by `|χ|²`.
    pub relative_defect: f64,
    /// `max (D_N − |χ|²|Φ|²)` over the whole grid; positive values mean the
    /// sampled modes overshoot the completeness bound.
    pub max_excess: f64,
    pub warnings: Vec<crate::error::Warning>,
}

/// Partial sums of the detection elements' diagonal density.
///
/// With `K_N(ν) = h Σ_{n<N} |φ_n(ν)|²` the discrete completeness kernel on
/// the sum lattice, the diagonal density of `Σ_{n<N} Π_n` is
/// `D_N(ω, ω′) = |χ|² |Φ(ω, ω′)|² K_N(ω + ω′)`, which tends to
/// `|χ|²|Φ|²` as the modes become complete.
pub struct CompletenessScan {
    grid_s: FrequencyGrid,
    grid_i: FrequencyGrid,
    target: DMatrix<f64>,
    members: Vec<SpectralAmplitude>,
    chi: CouplingChi,
    phi: DMatrix<Complex64>,
    pub warnings: Vec<crate::error::Warning>,
}

impl CompletenessScan {
    pub fn new(
        family: &ModeFamily,
        pm: &PhaseMatchSpec,
        chi: CouplingChi,
        grid_s: &FrequencyGrid,
        grid_i: &FrequencyGrid,
    ) -> Result<Self> {
        let nu_grid = grid_s.sum_grid(grid_i)?;
        let phi = evaluate_phasematching(pm, grid_s, grid_i);
        let peak = phi.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if chi.magnitude() * peak > 1.0 {
            return Err(invalid(format!(
                "|chi| max|Phi| = {} exceeds 1; the null element would not be positive",
                chi.magnitude() * peak
            )));
        }
        let Checked { value: members, warnings } = family.members(&nu_grid)?;
        let c2 = chi.magnitude().powi(2);
        let target = phi.map(|v| c2 * v.norm_sqr());
        Ok(CompletenessScan { grid_s: grid_s.clone(), grid_i: grid_i.clone(), target, members, chi, phi, warnings })
    }

    /// `|χ|²|Φ|²` on the joint grid.
    pub fn target(&self) -> &DMatrix<f64> {
        &self.target
    }

    /// `D_N` for the first `n_modes` members.
    pub fn partial_diagonal(&self, n_modes: usize) -> DMatrix<f64> {
        let kernel = self.kernel(n_modes);
        DMatrix::from_fn(self.grid_s.len(), self.grid_i.len(), |j, k| self.target[(j, k)] * kernel[j + k])
    }

    fn kernel(&self, n_modes: usize) -> Vec<f64> {
        let len = self.members[0].values().len();
        let h = self.members[0].grid().step();
        let mut k = vec![0.0; len];
        for m in self.members.iter().take(n_modes) {
            for (acc, v) in k.iter_mut().zip(m.values()) {
                *acc += v.norm_sqr() * h;
            }
        }
        k
    }

    fn in_central_region(&self, j: usize, k: usize) -> bool {
        let ds = (self.grid_s.point(j) - self.grid_s.center()).abs();
        let di = (self.grid_i.point(k) - self.grid_i.center()).abs();
        ds <= 0.25 * self.grid_s.span() && di <= 0.25 * self.grid_i.span()
    }

    /// Central-region defect and whole-grid excess for `n_modes` members.
    pub fn defect(&self, n_modes: usize) -> (f64, f64) {
        let d = self.partial_diagonal(n_modes);
        let mut defect: f64 = 0.0;
        let mut excess = f64::NEG_INFINITY;
        for j in 0..self.grid_s.len() {
            for k in 0..self.grid_i.len() {
                let diff = d[(j, k)] - self.target[(j, k)];
                excess = excess.max(diff);
                if self.in_central_region(j, k) {
                    defect = defect.max(diff.abs());
                }
            }
        }
        (defect, excess)
    }

    /// Central-region defects for several truncations.
    pub fn defects(&self, counts: &[usize]) -> Result<Vec<f64>> {
        counts
            .iter()
            .map(|&n| {
                if n == 0 || n > self.members.len() {
                    Err(invalid(format!("truncation {n} outside 1..={}", self.members.len())))
                } else {
                    Ok(self.defect(n).0)
                }
            })
            .collect()
    }

    /// Off-diagonal density of `Σ_{n<N} Π_n` between grid pairs `(j, k)` and
    /// `(j′, k′)`: `χ Φ_{jk} (χ Φ_{j′k′})* h Σ_n φ_n(ν) φ_n*(ν′)`.
    pub fn off_diagonal(&self, n_modes: usize, a: (usize, usize), b: (usize, usize)) -> Complex64 {
        let h = self.members[0].grid().step();
        let (ma, mb) = (a.0 + a.1, b.0 + b.1);
        let kernel: Complex64 =
            self.members.iter().take(n_modes).map(|m| m.values()[ma] * m.values()[mb].conj()).sum::<Complex64>() * h;
        let chi = self.chi.value();
        chi * self.phi[a] * (chi * self.phi[b]).conj() * kernel
    }
}

/// No-detection element `1 − |χ|²|Φ|²` and the completeness defect of the
/// family's detection elements.
pub fn null_element(
    family: &ModeFamily,
    pm: &PhaseMatchSpec,
    chi: CouplingChi,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> Result<NullElementReport> {
    let scan = CompletenessScan::new(family, pm, chi, grid_s, grid_i)?;
    let (defect, excess) = scan.defect(family.n_modes);
    let diagonal = scan.target().map(|t| 1.0 - t);
    Ok(NullElementReport {
        null: NullElement { grid_s: grid_s.clone(), grid_i: grid_i.clone(), diagonal },
        completeness_defect: defect,
        relative_defect: defect / chi.magnitude().powi(2),
        max_excess: excess,
        warnings: scan.warnings,
    })
}

/// Flattened coefficient vector of a JSA; see [`JointSpectralAmplitude::flatten`].
pub fn as_vector(jsa: &JointSpectralAmplitude) -> DVector<Complex64> {
    jsa.flatten()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_mode, hermite_gauss, make_grid};
    use crate::jsa::{gaussian_jsa, GaussianJsaParams};
    use std::f64::consts::FRAC_PI_4;

    // Off the symmetry point of the centered inputs, so odd orders still see
    // a non-vanishing overlap.
    const MODE_CENTER: f64 = 0.25;

    fn chi() -> CouplingChi {
        CouplingChi::new(0.1, 0.4).unwrap().value
    }

    fn nu_prime_pm(width: f64) -> PhaseMatchSpec {
        let g = make_grid(0.0, 64.0, 1024).unwrap();
        PhaseMatchSpec::nu_prime_only(gaussian_mode(0.0, width, &g).unwrap().value).unwrap()
    }

    fn grid(n: usize) -> FrequencyGrid {
        make_grid(0.0, 16.0, n).unwrap()
    }

    fn hg_element(order: usize, pm: &PhaseMatchSpec, g: &FrequencyGrid) -> PovmElement {
        let nu = g.sum_grid(g).unwrap();
        let mode = hermite_gauss(order, MODE_CENTER, 1.0, &nu).unwrap().value;
        povm_element(format!("HG{order}"), &mode, pm, chi(), g, g).unwrap().value
    }

    #[test]
    fn measurement_jsa_equals_pdc_jsa() {
        let g = grid(96);
        let mode = hermite_gauss(2, 0.0, 1.0, &g.sum_grid(&g).unwrap()).unwrap().value;
        let pm = PhaseMatchSpec::sinc(0.3, 1.2).unwrap();
        let (a, wa) = measurement_jsa(&mode, &pm, chi(), &g, &g).unwrap().value;
        let (b, wb) = build_jsa(&mode, &pm, chi(), &g, &g).unwrap().value;
        assert_eq!(a, b);
        assert_eq!(wa, wb);
    }

    /// `w_n = ∫∫ |χ φ_n Φ|²` evaluated directly from the analytic Hermite
    /// functions and sinc, independent of the JSA builder.
    #[test]
    fn detection_weights_depend_on_mode_for_sum_dependent_sinc() {
        let g = grid(128);
        let pm = PhaseMatchSpec::sinc(0.0, 1.0).unwrap();
        let nu = g.sum_grid(&g).unwrap();
        let c2 = chi().magnitude().powi(2);
        let oracle = |order: usize| {
            let h = g.step();
            let mut acc = 0.0;
            for j in 0..g.len() {
                for k in 0..g.len() {
                    let x = g.point(k);
                    let s = if x == 0.0 { 1.0 } else { x.sin() / x };
                    let hf = crate::grid::hermite_functions(order, g.point(j) + g.point(k))[order];
                    acc += c2 * (hf * s).powi(2) * h * h;
                }
            }
            acc
        };
        let w = |order: usize| {
            let mode = hermite_gauss(order, 0.0, 1.0, &nu).unwrap().value;
            measurement_jsa(&mode, &pm, chi(), &g, &g).unwrap().value.1
        };
        let (w0, w1) = (w(0), w(1));
        assert!((w0 - oracle(0)).abs() < 1e-6 * w0);
        assert!((w1 - oracle(1)).abs() < 1e-6 * w1);
        assert!((w0 - w1).abs() > 1e-3 * w0);
    }

    #[test]
    fn equal_weights_for_45_degree_pump_and_detection() {
        let g = grid(128);
        let pm = PhaseMatchSpec::sinc(FRAC_PI_4, 1.0).unwrap();
        let mode = hermite_gauss(0, 0.0, 1.0, &g.sum_grid(&g).unwrap()).unwrap().value;
        let (_, w_pdc) = build_jsa(&mode, &pm, chi(), &g, &g).unwrap().value;
        let (_, w_n) = measurement_jsa(&mode, &pm, chi(), &g, &g).unwrap().value;
        assert_eq!(w_pdc, w_n);
    }

    #[test]
    fn born_probability_of_own_component_is_weight() {
        let g = grid(96);
        let pm = PhaseMatchSpec::sinc(0.5, 1.0).unwrap();
        let e = hg_element(1, &pm, &g);
        let p = born_probability(&e.components()[0], &e).unwrap();
        assert!((p - e.weights()[0]).abs() < 1e-10 * e.weights()[0].max(1e-300) + 1e-16);
        let zero = JointSpectralAmplitude::new(g.clone(), g.clone(), DMatrix::zeros(96, 96)).unwrap();
        assert_eq!(born_probability(&zero, &e).unwrap(), 0.0);
    }

    #[test]
    fn born_probability_of_orthogonal_input_vanishes() {
        let g = grid(128);
        let pm = nu_prime_pm(1.0);
        let e0 = hg_element(0, &pm, &g);
        let e1 = hg_element(1, &pm, &g);
        let p = born_probability(&e1.components()[0], &e0).unwrap();
        assert!(p < 1e-12 * e0.weights()[0]);
    }

    #[test]
    fn sfg_path_agrees_with_born_rule() {
        let g = grid(96);
        let pm = PhaseMatchSpec::sinc(0.35, 1.3).unwrap();
        let input = gaussian_jsa(GaussianJsaParams::new(1.1, 0.4).unwrap(), &g, &g).unwrap();
        let up = sfg_amplitude(&input, &pm, chi()).unwrap();
        for order in 0..4 {
            let e = hg_element(order, &pm, &g);
            let mode = hermite_gauss(order, MODE_CENTER, 1.0, up.sigma().grid()).unwrap().value;
            let p_sfg = up.detection_probability(&mode).unwrap();
            let p_born = born_probability(&input, &e).unwrap();
            assert!((p_sfg - p_born).abs() <= 1e-10 * p_born, "order {order}: {p_sfg} vs {p_born}");
        }
    }

    #[test]
    fn upconversion_recovers_pump_shape() {
        let g = grid(256);
        let pm = nu_prime_pm(1.5);
        for order in 0..3 {
            let nu = g.sum_grid(&g).unwrap();
            let phi = hermite_gauss(order, 0.0, 1.0, &nu).unwrap().value;
            // g̃(ν, ν′) = φ(ν) Φ̃(ν′)
            let input = JointSpectralAmplitude::from_fn(g.clone(), g.clone(), |a, b| {
                phi.at(a + b) * pm.eval_sum_difference(a + b, a - b)
            })
            .normalized()
            .unwrap();
            let up = sfg_amplitude(&input, &pm, chi()).unwrap();
            let sigma = up.sigma().normalized().unwrap();
            let overlap = inner_product(&phi, &sigma).unwrap().norm_sqr();
            assert!(overlap >= 0.999, "order {order}: {overlap}");
        }
    }

    #[test]
    fn parity_mismatch_gives_zero_detection_amplitude() {
        let g = grid(128);
        let pm = nu_prime_pm(1.0);
        let nu = g.sum_grid(&g).unwrap();
        let odd = hermite_gauss(1, 0.0, 1.0, &nu).unwrap().value;
        let input = JointSpectralAmplitude::from_fn(g.clone(), g.clone(), |a, b| {
            odd.at(a + b) * Complex64::new((-(a - b).powi(2) / 3.0).exp(), 0.0)
        })
        .normalized()
        .unwrap();
        let up = sfg_amplitude(&input, &pm, chi()).unwrap();
        let even = hermite_gauss(0, 0.0, 1.0, &nu).unwrap().value;
        assert!(inner_product(&even, up.sigma()).unwrap().norm() < 1e-10);
    }

    #[test]
    fn sfg_requires_equal_steps() {
        let a = make_grid(0.0, 8.0, 32).unwrap();
        let b = make_grid(0.0, 8.0, 40).unwrap();
        let input = gaussian_jsa(GaussianJsaParams::new(1.0, 0.2).unwrap(), &a, &b).unwrap();
        let pm = PhaseMatchSpec::sinc(0.0, 1.0).unwrap();
        assert!(matches!(sfg_amplitude(&input, &pm, chi()), Err(Error::IncompatibleGrid(_))));
    }

    #[test]
    fn mixing_rules() {
        let g = grid(64);
        let pm = nu_prime_pm(1.0);
        let e0 = hg_element(0, &pm, &g);
        let e1 = hg_element(1, &pm, &g);
        let single = mix_elements(&[1.0], std::slice::from_ref(&e0)).unwrap();
        assert_eq!(single.weights(), e0.weights());
        assert_eq!(single.components(), e0.components());
        assert!(mix_elements(&[1.2], std::slice::from_ref(&e0)).is_err());
        assert!(mix_elements(&[-0.1], std::slice::from_ref(&e0)).is_err());
        let both = mix_elements(&[1.0, 1.0], &[e0.clone(), e1.clone()]).unwrap();
        assert!(mix_elements(&[1.0], std::slice::from_ref(&both)).is_err());

        let input = gaussian_jsa(GaussianJsaParams::new(0.8, 0.3).unwrap(), &g, &g).unwrap();
        let p = born_probability(&input, &both).unwrap();
        let p0 = born_probability(&input, &e0).unwrap();
        let p1 = born_probability(&input, &e1).unwrap();
        assert!((p - (p0 + p1)).abs() < 1e-15);
    }

    #[test]
    fn retrodicted_purities() {
        let g = make_grid(0.0, 16.0, 32).unwrap();
        let pm = nu_prime_pm(1.5);
        let e0 = hg_element(0, &pm, &g);
        let e1 = hg_element(1, &pm, &g);
        let rho = retrodicted_state(&e0).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-9);
        assert!((purity(&rho) - 1.0).abs() < 1e-9);
        assert!((e0.retrodicted_purity().unwrap() - 1.0).abs() < 1e-9);

        // Orthogonality needs equal detection weights for the ½ and 0.68 cases.
        let w = e0.weights()[0];
        let e1 = PovmElement::projective("HG1", e1.components()[0].clone(), w).unwrap();
        let half = mix_elements(&[0.5, 0.5], &[e0.clone(), e1.clone()]).unwrap();
        let rho = retrodicted_state(&half).unwrap();
        assert!((purity(&rho) - 0.5).abs() < 1e-9);
        assert!((half.retrodicted_purity().unwrap() - 0.5).abs() < 1e-9);

        let skew = mix_elements(&[0.8, 0.2], &[e0, e1]).unwrap();
        let rho = retrodicted_state(&skew).unwrap();
        // Eigenvalue oracle: the two nonzero eigenvalues are the normalized weights.
        let mut eig = rho.eigenvalues();
        eig.sort_by(|a, b| b.total_cmp(a));
        assert!((eig[0] - 0.8).abs() < 1e-9 && (eig[1] - 0.2).abs() < 1e-9);
        let oracle: f64 = eig.iter().map(|e| e * e).sum();
        assert!((oracle - 0.68).abs() < 1e-9);
        assert!((purity(&rho) - 0.68).abs() < 1e-9);
        assert!((skew.retrodicted_purity().unwrap() - 0.68).abs() < 1e-9);
        assert!(rho.min_eigenvalue() >= -1e-10);
        assert!(rho.hermiticity_error() < 1e-10);
    }

    #[test]
    fn born_rule_on_density_matches_pure_path() {
        let g = make_grid(0.0, 12.0, 24).unwrap();
        let pm = PhaseMatchSpec::sinc(0.2, 1.0).unwrap();
        let e = hg_element(1, &pm, &g);
        let input = gaussian_jsa(GaussianJsaParams::new(1.0, -0.3).unwrap(), &g, &g).unwrap();
        let rho = TwoPhotonDensity::from_pure(&input).unwrap();
        let a = born_probability(&input, &e).unwrap();
        let b = born_probability(&rho, &e).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn zero_trace_retrodiction_fails() {
        let g = make_grid(0.0, 12.0, 16).unwrap();
        let pm = nu_prime_pm(1.0);
        let e = hg_element(0, &pm, &g);
        let none = mix_elements(&[0.0], &[e]).unwrap();
        assert!(matches!(retrodicted_state(&none), Err(Error::Degenerate(_))));
        assert!(matches!(none.retrodicted_purity(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn gram_identity_for_nu_prime_only_phasematching() {
        let g = grid(256);
        let pm = nu_prime_pm(1.0);
        let elements: Vec<PovmElement> = (0..4).map(|n| hg_element(n, &pm, &g)).collect();
        let gram = gram_matrix(&elements).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((gram[(a, b)] - e).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn gram_off_diagonal_for_sum_dependent_sinc() {
        let g = grid(256);
        let pm = PhaseMatchSpec::sinc(0.0, 1.0).unwrap();
        let elements: Vec<PovmElement> = [0, 2].iter().map(|&n| hg_element(n, &pm, &g)).collect();
        let gram = gram_matrix(&elements).unwrap();
        assert!(gram[(0, 1)].norm() > 1e-3);
        assert!(gram.iter().zip(gram.adjoint().iter()).all(|(a, b)| (a - b).norm() < 1e-12));
        assert!((gram[(0, 0)] - 1.0).norm() < 1e-9 && (gram[(1, 1)] - 1.0).norm() < 1e-9);
    }

    #[test]
    fn orthogonal_elements_multiply_as_projectors() {
        let g = grid(128);
        let pm = nu_prime_pm(1.0);
        let e0 = hg_element(0, &pm, &g);
        let e2 = hg_element(2, &pm, &g);
        let x = gaussian_jsa(GaussianJsaParams::new(0.9, 0.5).unwrap(), &g, &g).unwrap();
        let cross = e0.apply(&e2.apply(&x).unwrap()).unwrap();
        let same = e0.apply(&e0.apply(&x).unwrap()).unwrap();
        let expected = e0.apply(&x).unwrap();
        let w = e0.weights()[0];
        let scale = expected.values().iter().map(|v| v.norm()).fold(0.0, f64::max) * w;
        assert!(cross.values().iter().all(|v| v.norm() < 1e-6 * scale));
        let diff = same.values() - expected.values() * Complex64::new(w, 0.0);
        assert!(diff.iter().all(|v| v.norm() < 1e-6 * scale));
    }

    #[test]
    fn null_element_diagonal_bounds() {
        let g = grid(128);
        let pm = PhaseMatchSpec::sinc(0.6, 1.0).unwrap();
        let fam = ModeFamily::hermite_gauss(0.0, 1.0, 8);
        let report = null_element(&fam, &pm, chi(), &g, &g).unwrap();
        assert!(report.null.diagonal.iter().all(|d| (0.99..=1.0).contains(d)));
        assert!(report.max_excess <= 1e-9);
    }

    #[test]
    fn completeness_defect_is_monotone() {
        let g = grid(256);
        let pm = PhaseMatchSpec::sinc(0.3, 1.0).unwrap();
        let fam = ModeFamily::hermite_gauss(0.0, 1.0, 64);
        let scan = CompletenessScan::new(&fam, &pm, chi(), &g, &g).unwrap();
        let d = scan.defects(&[8, 16, 32, 64]).unwrap();
        for w in d.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(d[3] <= 0.01);
        let full = scan.partial_diagonal(64);
        assert!(full.iter().zip(scan.target().iter()).all(|(d, t)| *d <= t + 1e-9));
    }

    #[test]
    fn frequency_bins_resolve_the_identity() {
        // Spectrally resolved detection: bins of one lattice step tile the
        // sum lattice, so the partial sum reaches |χ|²|Φ|² and different sums
        // decouple exactly.
        let g = make_grid(0.0, 8.0, 33).unwrap();
        let nu = g.sum_grid(&g).unwrap();
        let pm = PhaseMatchSpec::gaussian(0.4, 1.5).unwrap();
        let fam = ModeFamily::bins(0.0, nu.step(), nu.len());
        let scan = CompletenessScan::new(&fam, &pm, chi(), &g, &g).unwrap();
        let (defect, excess) = scan.defect(nu.len());
        assert!(defect < 1e-15);
        assert!(excess < 1e-15);
        assert_eq!(scan.off_diagonal(nu.len(), (3, 5), (4, 5)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn completeness_kernel_reconstructs_smooth_functions() {
        // Σ_n φ_n(ν)φ_n*(ν′) → δ(ν − ν′): applying the truncated kernel to a
        // smooth test function converges to the function itself.
        let g = grid(256);
        let pm = PhaseMatchSpec::sinc(0.0, 1.0).unwrap();
        let fam = ModeFamily::hermite_gauss(0.0, 1.0, 64);
        let scan = CompletenessScan::new(&fam, &pm, chi(), &g, &g).unwrap();
        let nu = g.sum_grid(&g).unwrap();
        let test = gaussian_mode(0.7, 1.3, &nu).unwrap().value;
        let err = |n: usize| {
            let members = &scan.members[..n];
            let mut recon = vec![Complex64::new(0.0, 0.0); nu.len()];
            for m in members {
                let c = inner_product(m, &test).unwrap();
                for (r, v) in recon.iter_mut().zip(m.values()) {
                    *r += c * v;
                }
            }
            recon.iter().zip(test.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        };
        let errs: Vec<f64> = [8, 16, 32, 64].iter().map(|&n| err(n)).collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(errs[3] < 1e-6);
    }
}
