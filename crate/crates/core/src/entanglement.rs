//! Schmidt analysis of joint spectral amplitudes and negativity of
//! two-photon density operators.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::linalg::checked_svd;
use crate::error::{invalid, Error, Result};
use crate::grid::SpectralAmplitude;
use crate::jsa::{JointSpectralAmplitude, NORM_TOL};
use crate::povm::{TwoPhotonDensity, MAX_DENSE_AXIS};

/// Default cumulative weight discarded from the Schmidt tail.
pub const DEFAULT_CUTOFF: f64 = 1e-10;

/// Schmidt decomposition `f(ω_s, ω_i) = Σ sqrt(λ_j) u_j(ω_s) v_j(ω_i)`.
#[derive(Debug, Clone)]
pub struct SchmidtData {
    /// Descending, summing to one up to the discarded tail.
    pub coefficients: Vec<f64>,
    pub left_modes: Vec<SpectralAmplitude>,
    pub right_modes: Vec<SpectralAmplitude>,
    pub schmidt_number: f64,
    /// `atanh sqrt(λ₁/λ₀)`; for the correlated Gaussian family this is the
    /// squeezing-like parameter with `α = tanh 2ζ`.
    pub zeta: Option<f64>,
}

impl SchmidtData {
    /// `Σ sqrt(λ_j) u_j(ω_s) v_j(ω_i)` as a JSA on the original grids.
    pub fn reconstruct(&self) -> Result<JointSpectralAmplitude> {
        let (Some(u0), Some(v0)) = (self.left_modes.first(), self.right_modes.first()) else {
            return Err(invalid("empty Schmidt decomposition"));
        };
        let (gs, gi) = (u0.grid().clone(), v0.grid().clone());
        let mut m = DMatrix::<Complex64>::zeros(gs.len(), gi.len());
        for ((lam, u), v) in self.coefficients.iter().zip(&self.left_modes).zip(&self.right_modes) {
            let s = lam.sqrt();
            for (j, uj) in u.values().iter().enumerate() {
                for (k, vk) in v.values().iter().enumerate() {
                    m[(j, k)] += uj * vk * s;
                }
            }
        }
        JointSpectralAmplitude::new(gs, gi, m)
    }
}

fn ensure_normalized(jsa: &JointSpectralAmplitude) -> Result<()> {
    let n = jsa.norm_sqr();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(invalid(format!("Schmidt analysis needs a normalized JSA, norm² = {n}")));
    }
    Ok(())
}

fn sorted_desc(values: impl IntoIterator<Item = f64>) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = values.into_iter().enumerate().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1));
    v
}

fn schmidt_number_of(lambdas: &[f64]) -> f64 {
    1.0 / lambdas.iter().map(|l| l * l).sum::<f64>()
}

/// Number of leading coefficients whose cumulative weight reaches `1 − cutoff`.
fn kept_count(lambdas: &[f64], cutoff: f64) -> usize {
    let total: f64 = lambdas.iter().sum();
    let mut acc = 0.0;
    for (i, l) in lambdas.iter().enumerate() {
        acc += l;
        if acc >= total * (1.0 - cutoff) {
            return i + 1;
        }
    }
    lambdas.len()
}

/// SVD of the quadrature-scaled amplitude matrix, truncated at cumulative
/// tail weight `cutoff`.
pub fn schmidt_decompose(jsa: &JointSpectralAmplitude, cutoff: f64) -> Result<SchmidtData> {
    ensure_normalized(jsa)?;
    if !(0.0..1.0).contains(&cutoff) {
        return Err(invalid(format!("cutoff must lie in [0, 1), got {cutoff}")));
    }
    let (hs, hi) = (jsa.grid_s().step(), jsa.grid_i().step());
    let (us, ui) = (hs.sqrt().recip(), hi.sqrt().recip());
    let scaled = jsa.scaled_matrix();

    // Columns of U and rows of Vᴴ as complex vectors, plus singular values.
    let (singular, u_cols, vt_rows): (Vec<f64>, DMatrix<Complex64>, DMatrix<Complex64>) = if jsa.is_real() {
        let svd = checked_svd(&scaled.map(|v| v.re), true);
        let u = svd.u.expect("requested U").map(|x| Complex64::new(x, 0.0));
        let vt = svd.v_t.expect("requested Vᵀ").map(|x| Complex64::new(x, 0.0));
        (svd.singular, u, vt)
    } else {
        let svd = checked_svd(&scaled, true);
        (svd.singular, svd.u.expect("requested U"), svd.v_t.expect("requested Vᴴ"))
    };

    let order = sorted_desc(singular.iter().map(|s| s * s));
    let all: Vec<f64> = order.iter().map(|(_, l)| *l).collect();
    let keep = kept_count(&all, cutoff);
    let mut coefficients = Vec::with_capacity(keep);
    let mut left_modes = Vec::with_capacity(keep);
    let mut right_modes = Vec::with_capacity(keep);
    for &(idx, lambda) in order.iter().take(keep) {
        coefficients.push(lambda);
        let u: Vec<Complex64> = u_cols.column(idx).iter().map(|x| x * us).collect();
        let v: Vec<Complex64> = vt_rows.row(idx).iter().map(|x| x * ui).collect();
        left_modes.push(SpectralAmplitude::new(jsa.grid_s().clone(), u)?);
        right_modes.push(SpectralAmplitude::new(jsa.grid_i().clone(), v)?);
    }
    let zeta = (coefficients.len() >= 2).then(|| (coefficients[1] / coefficients[0]).sqrt().atanh());
    Ok(SchmidtData { schmidt_number: schmidt_number_of(&coefficients), coefficients, left_modes, right_modes, zeta })
}

/// Schmidt coefficients only (no modes), descending.
pub fn schmidt_coefficients(jsa: &JointSpectralAmplitude) -> Result<Vec<f64>> {
    ensure_normalized(jsa)?;
    let scaled = jsa.scaled_matrix();
    let sv: Vec<f64> = if jsa.is_real() {
        checked_svd(&scaled.map(|v| v.re), false).singular
    } else {
        checked_svd(&scaled, false).singular
    };
    Ok(sorted_desc(sv.into_iter().map(|s| s * s)).into_iter().map(|(_, l)| l).collect())
}

/// `K = 1/Σ λ_j²` from the singular values of the JSA.
pub fn schmidt_number(jsa: &JointSpectralAmplitude) -> Result<f64> {
    Ok(schmidt_number_of(&schmidt_coefficients(jsa)?))
}

fn check_correlation(alpha: f64) -> Result<()> {
    if alpha.is_nan() {
        return Err(invalid("correlation is NaN"));
    }
    if alpha.abs() >= 1.0 {
        return Err(Error::Degenerate(format!(
            "Schmidt number diverges for maximal correlation |alpha| = {}",
            alpha.abs()
        )));
    }
    Ok(())
}

/// `ζ` with `α = tanh 2ζ`.
pub fn gaussian_zeta(alpha: f64) -> Result<f64> {
    check_correlation(alpha)?;
    Ok(0.5 * alpha.atanh())
}

/// `K = 1/sqrt(1 − α²)` for the correlated Gaussian JSA.
pub fn gaussian_schmidt_number(alpha: f64) -> Result<f64> {
    check_correlation(alpha)?;
    Ok(1.0 / (1.0 - alpha * alpha).sqrt())
}

/// `λ_j = sech²ζ tanh^{2j}ζ` for `j = 0..=j_max`.
pub fn gaussian_schmidt_coefficients(alpha: f64, j_max: usize) -> Result<Vec<f64>> {
    let zeta = gaussian_zeta(alpha)?;
    let ratio = zeta.tanh().powi(2);
    let first = 1.0 / zeta.cosh().powi(2);
    Ok(std::iter::successors(Some(first), |l| Some(l * ratio)).take(j_max + 1).collect())
}

/// `((Σ sqrt λ_j)² − 1)/2`, the negativity of a pure state with the given
/// Schmidt coefficients.
pub fn pure_state_negativity(coefficients: &[f64]) -> f64 {
    let s: f64 = coefficients.iter().map(|l| l.max(0.0).sqrt()).sum();
    0.5 * (s * s - 1.0)
}

fn ensure_dense_size(rho: &TwoPhotonDensity) -> Result<()> {
    let (ns, ni) = (rho.grid_s().len(), rho.grid_i().len());
    if ns > MAX_DENSE_AXIS || ni > MAX_DENSE_AXIS {
        return Err(Error::ResourceLimit(format!(
            "dense two-photon operator on a {ns}x{ni} grid; reduce the resolution to at most \
             {MAX_DENSE_AXIS}x{MAX_DENSE_AXIS} points"
        )));
    }
    Ok(())
}

/// Transpose on the idler (second) subsystem:
/// `ρ^{T_B}[(j,k),(j′,k′)] = ρ[(j,k′),(j′,k)]`.
pub fn partial_transpose(rho: &TwoPhotonDensity) -> DMatrix<Complex64> {
    let ni = rho.grid_i().len();
    let m = rho.matrix();
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        let (j, k) = (r / ni, r % ni);
        let (jp, kp) = (c / ni, c % ni);
        m[(j * ni + kp, jp * ni + k)]
    })
}

/// Eigenvalues of a Hermitian matrix, using the real solver when possible.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.iter().all(|v| v.im == 0.0) {
        SymmetricEigen::new(m.map(|v| v.re)).eigenvalues.iter().copied().collect()
    } else {
        SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect()
    }
}

/// Sum of the magnitudes of the negative eigenvalues of `ρ^{T_B}`.
pub fn negativity(rho: &TwoPhotonDensity) -> Result<f64> {
    ensure_dense_size(rho)?;
    let eig = hermitian_eigenvalues(&partial_transpose(rho));
    Ok(eig.iter().filter(|&&e| e < 0.0).map(|e| -e).sum())
}

/// `(‖ρ^{T_B}‖₁ − Tr ρ)/2`, with the trace norm taken from singular values.
pub fn negativity_trace_norm(rho: &TwoPhotonDensity) -> Result<f64> {
    ensure_dense_size(rho)?;
    let pt = partial_transpose(rho);
    let trace_norm: f64 = if pt.iter().all(|v| v.im == 0.0) {
        checked_svd(&pt.map(|v| v.re), false).singular.iter().sum()
    } else {
        checked_svd(&pt, false).singular.iter().sum()
    };
    Ok(0.5 * (trace_norm - rho.trace()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{hermite_gauss, make_grid, FrequencyGrid};
    use crate::jsa::{gaussian_jsa, GaussianJsaParams};

    fn grid() -> FrequencyGrid {
        make_grid(0.0, 16.0, 256).unwrap()
    }

    fn gaussian(alpha: f64, g: &FrequencyGrid) -> JointSpectralAmplitude {
        gaussian_jsa(GaussianJsaParams::new(1.0, alpha).unwrap(), g, g).unwrap()
    }

    #[test]
    fn separable_state_has_single_coefficient() {
        let s = schmidt_decompose(&gaussian(0.0, &grid()), DEFAULT_CUTOFF).unwrap();
        assert_eq!(s.coefficients.len(), 1);
        assert!((s.schmidt_number - 1.0).abs() < 1e-6);
    }

    #[test]
    fn svd_matches_closed_form_schmidt_number() {
        let s = schmidt_decompose(&gaussian(0.8, &grid()), DEFAULT_CUTOFF).unwrap();
        let k = gaussian_schmidt_number(0.8).unwrap();
        assert!((k - 5.0 / 3.0).abs() < 1e-12);
        assert!((s.schmidt_number - k).abs() < 0.01 * k);
    }

    #[test]
    fn geometric_ratio_of_coefficients() {
        let s = schmidt_decompose(&gaussian(0.6, &grid()), DEFAULT_CUTOFF).unwrap();
        let expected = (0.5 * 0.6_f64.atanh()).tanh().powi(2);
        for j in 0..=5 {
            let r = s.coefficients[j + 1] / s.coefficients[j];
            assert!((r - expected).abs() < 0.01 * expected, "j={j}: {r} vs {expected}");
        }
        let lam0 = gaussian_schmidt_coefficients(0.6, 0).unwrap()[0];
        assert!((s.coefficients[0] - lam0).abs() < 1e-6);
        assert!((s.zeta.unwrap() - gaussian_zeta(0.6).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn modes_orthonormal_and_reconstruction_within_cutoff() {
        let g = make_grid(0.0, 16.0, 128).unwrap();
        let f = gaussian(0.7, &g);
        let cutoff = 1e-6;
        let s = schmidt_decompose(&f, cutoff).unwrap();
        let sum: f64 = s.coefficients.iter().sum();
        assert!((sum - 1.0).abs() <= cutoff + 1e-9);
        for (a, ua) in s.left_modes.iter().enumerate() {
            for (b, ub) in s.left_modes.iter().enumerate() {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((crate::grid::inner_product(ua, ub).unwrap() - e).norm() < 1e-6);
                let (va, vb) = (&s.right_modes[a], &s.right_modes[b]);
                assert!((crate::grid::inner_product(va, vb).unwrap() - e).norm() < 1e-6);
            }
        }
        let r = s.reconstruct().unwrap();
        let diff = JointSpectralAmplitude::new(g.clone(), g.clone(), f.values() - r.values()).unwrap();
        assert!(diff.norm_sqr().sqrt() <= cutoff.sqrt());
    }

    #[test]
    fn complex_jsa_takes_complex_path() {
        let g = make_grid(0.0, 12.0, 64).unwrap();
        let f = gaussian(0.5, &g);
        let chirped = JointSpectralAmplitude::from_fn(g.clone(), g.clone(), |a, b| {
            let j = ((a - g.first()) / g.step()).round() as usize;
            let k = ((b - g.first()) / g.step()).round() as usize;
            f.values()[(j, k)] * Complex64::from_polar(1.0, 0.3 * a * a - 0.2 * b)
        });
        // Local phases on each axis leave the Schmidt spectrum unchanged.
        let a = schmidt_coefficients(&f).unwrap();
        let b = schmidt_coefficients(&chirped).unwrap();
        for (x, y) in a.iter().zip(&b).take(6) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let g = make_grid(0.0, 8.0, 32).unwrap();
        let f = JointSpectralAmplitude::from_fn(g.clone(), g, |_, _| Complex64::new(1.0, 0.0));
        assert!(matches!(schmidt_decompose(&f, DEFAULT_CUTOFF), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn closed_form_schmidt_values() {
        assert_eq!(gaussian_schmidt_number(0.0).unwrap(), 1.0);
        assert!((gaussian_schmidt_number(0.6).unwrap() - 1.25).abs() < 1e-15);
        assert!(matches!(gaussian_schmidt_number(1.0), Err(Error::Degenerate(_))));
        assert!(gaussian_schmidt_coefficients(-1.0, 3).is_err());

        let l = gaussian_schmidt_coefficients(0.0, 4).unwrap();
        assert_eq!(l, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let l = gaussian_schmidt_coefficients(0.9, 200).unwrap();
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // K = 1/Σλ² = cosh 2ζ
        let l = gaussian_schmidt_coefficients(0.6, 400).unwrap();
        let k = 1.0 / l.iter().map(|x| x * x).sum::<f64>();
        assert!((k - (2.0 * gaussian_zeta(0.6).unwrap()).cosh()).abs() < 1e-12);
        assert!((k - 1.25).abs() < 1e-12);
    }

    #[test]
    fn tail_bound_of_truncated_geometric_sum() {
        for &alpha in &[0.3, 0.6, 0.95] {
            for j_max in [0usize, 3, 10] {
                let l = gaussian_schmidt_coefficients(alpha, j_max).unwrap();
                let t = gaussian_zeta(alpha).unwrap().tanh();
                assert!(l.iter().sum::<f64>() >= 1.0 - t.powi(2 * (j_max as i32 + 1)) - 1e-15);
            }
        }
    }

    fn small_grid() -> FrequencyGrid {
        make_grid(0.0, 12.0, 32).unwrap()
    }

    #[test]
    fn product_state_has_zero_negativity() {
        let g = small_grid();
        let rho = TwoPhotonDensity::from_pure(&gaussian(0.0, &g)).unwrap();
        assert!(negativity(&rho).unwrap() <= 1e-10);
    }

    #[test]
    fn pure_state_negativity_identity() {
        let g = small_grid();
        let f = gaussian(0.6, &g);
        let rho = TwoPhotonDensity::from_pure(&f).unwrap();
        let lam = schmidt_coefficients(&f).unwrap();
        let n = negativity(&rho).unwrap();
        assert!((n - pure_state_negativity(&lam)).abs() < 1e-6);
        assert!((n - negativity_trace_norm(&rho).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn mixed_state_negativity_two_ways() {
        // Equal mixture of two orthogonal entangled states built from
        // Hermite-Gauss products.
        let g = small_grid();
        let hg: Vec<SpectralAmplitude> = (0..3).map(|n| hermite_gauss(n, 0.0, 1.0, &g).unwrap().value).collect();
        let bell = |a: usize, b: usize, c: usize, d: usize, sign: f64| {
            let m = DMatrix::from_fn(g.len(), g.len(), |j, k| {
                (hg[a].values()[j] * hg[b].values()[k] + hg[c].values()[j] * hg[d].values()[k] * sign)
                    / 2f64.sqrt()
            });
            JointSpectralAmplitude::new(g.clone(), g.clone(), m).unwrap()
        };
        let psi = bell(0, 0, 1, 1, 1.0);
        let phi = bell(0, 1, 1, 0, -1.0);
        assert!(psi.inner_product(&phi).unwrap().norm() < 1e-9);
        let rho = TwoPhotonDensity::from_mixture(&[0.5, 0.5], &[&psi, &phi]).unwrap();
        let a = negativity(&rho).unwrap();
        let b = negativity_trace_norm(&rho).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!(a >= -1e-12);
    }

    #[test]
    fn oversized_density_is_a_resource_error() {
        let g = make_grid(0.0, 12.0, 65).unwrap();
        let h = make_grid(0.0, 1.0, 2).unwrap();
        let rho = TwoPhotonDensity::new(g.clone(), h.clone(), DMatrix::<Complex64>::identity(130, 130).map(|v| v / 130.0)).unwrap();
        assert!(matches!(negativity(&rho), Err(Error::ResourceLimit(_))));
        assert!(matches!(negativity_trace_norm(&rho), Err(Error::ResourceLimit(_))));
        let f = gaussian_jsa(GaussianJsaParams::new(1.0, 0.0).unwrap(), &g, &h).unwrap();
        assert!(matches!(TwoPhotonDensity::from_pure(&f), Err(Error::ResourceLimit(_))));
    }
}
