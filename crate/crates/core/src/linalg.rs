use nalgebra::{ComplexField, DMatrix};

const MAX_SWEEPS: usize = 10_000;

/// Singular values and, on request, `U` and `Vᴴ` of a dense matrix.
pub(crate) struct Svd<T: ComplexField> {
    pub singular: Vec<f64>,
    pub u: Option<DMatrix<T>>,
    pub v_t: Option<DMatrix<T>>,
}

/// SVD iterated to machine precision and checked against the Frobenius
/// norm. nalgebra's default threshold can stop early on nearly rank-one
/// inputs and return inflated singular values; if the check fails the
/// Gram matrix `MᴴM` is diagonalized instead.
pub(crate) fn checked_svd<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, vectors: bool) -> Svd<T> {
    let frob = m.norm_squared();
    if let Some(svd) = m.clone().try_svd(vectors, vectors, f64::EPSILON, MAX_SWEEPS) {
        let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
        if (total - frob).abs() <= 1e-12 * frob.max(f64::MIN_POSITIVE) {
            return Svd { singular: svd.singular_values.iter().copied().collect(), u: svd.u, v_t: svd.v_t };
        }
    }
    gram_svd(m, vectors)
}

fn gram_svd<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, vectors: bool) -> Svd<T> {
    let gram = m.adjoint() * m;
    let eig = gram.symmetric_eigen();
    let singular: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    if !vectors {
        return Svd { singular, u: None, v_t: None };
    }
    let v = eig.eigenvectors;
    let mut u = m * &v;
    for (c, s) in singular.iter().enumerate() {
        let scale = if *s > 0.0 { 1.0 / s } else { 0.0 };
        u.column_mut(c).scale_mut(scale);
    }
    Svd { singular, u: Some(u), v_t: Some(v.adjoint()) }
}
