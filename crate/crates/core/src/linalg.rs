//! Small dense complex linear algebra helpers shared by the precoding code.

use crate::C64;
use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff used for all pseudoinverses.
pub const PINV_REL_CUTOFF: f64 = 1e-12;

/// Moore-Penrose pseudoinverse with a relative singular-value cutoff.
///
/// Singular values below `cutoff * sigma_max` are treated as zero, so masked
/// (structurally singular) matrices are handled without blowup.
pub fn pinv(a: &DMatrix<C64>, cutoff: f64) -> DMatrix<C64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = cutoff * smax;
    let sigma_inv = DVector::from_iterator(
        svd.singular_values.len(),
        svd.singular_values
            .iter()
            .map(|&s| if s > tol { 1.0 / s } else { 0.0 }),
    );
    // pinv = V * Sigma^+ * U^H
    let mut ut = u.adjoint();
    for (i, row) in sigma_inv.iter().enumerate() {
        ut.row_mut(i).scale_mut(*row);
    }
    vt.adjoint() * ut
}

/// `pinv(a) * b` without forming the full pseudoinverse.
pub fn pinv_mul(a: &DMatrix<C64>, b: &DVector<C64>, cutoff: f64) -> DVector<C64> {
    pinv(a, cutoff) * b
}

/// Projection matrix onto the orthogonal complement of `span(columns)`.
///
/// An empty column set gives the identity.
pub fn null_space_projector(columns: &[DVector<C64>], dim: usize) -> DMatrix<C64> {
    if columns.is_empty() {
        return DMatrix::identity(dim, dim);
    }
    let b = DMatrix::from_columns(columns);
    let id = DMatrix::<C64>::identity(dim, dim);
    &id - &b * pinv(&b, PINV_REL_CUTOFF)
}

/// Outer product `v * v^H` scaled by a real factor.
pub fn scaled_outer(v: &DVector<C64>, scale: f64) -> DMatrix<C64> {
    let mut m = v * v.adjoint();
    m.scale_mut(scale);
    m
}

/// Hermitian quadratic form `v^H A v`, returned as a real number.
///
/// Only valid for Hermitian `A`; the imaginary part is discarded.
pub fn quad_form(a: &DMatrix<C64>, v: &DVector<C64>) -> f64 {
    (v.adjoint() * a * v)[(0, 0)].re
}

/// Eigenvalue range (min, max) of a Hermitian matrix.
pub fn hermitian_eig_range(a: &DMatrix<C64>) -> (f64, f64) {
    let eig = a.clone().symmetric_eigen();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &e in eig.eigenvalues.iter() {
        min = min.min(e);
        max = max.max(e);
    }
    (min, max)
}
