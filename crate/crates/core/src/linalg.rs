//! Small dense complex linear-algebra helpers shared by the model and GSVD code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// `log2 det(M)` for a Hermitian positive definite `M`.
///
/// Uses a Cholesky factorization; if that fails (near-singular input) the
/// eigenvalues of the Hermitian part are summed instead, with non-positive
/// eigenvalues clamped to the smallest positive normal number.
pub fn log2_det_hpd(m: &CMatrix) -> f64 {
    debug_assert!(m.is_square());
    if m.nrows() == 0 {
        return 0.0;
    }
    if let Some(chol) = m.clone().cholesky() {
        let l = chol.l_dirty();
        let ln_det: f64 = (0..m.nrows()).map(|i| l[(i, i)].re.ln()).sum();
        return 2.0 * ln_det * LOG2_E;
    }
    let herm = hermitian_part(m);
    let eig = SymmetricEigen::new(herm);
    eig.eigenvalues
        .iter()
        .map(|&v| v.max(f64::MIN_POSITIVE).log2())
        .sum()
}

/// `log2 det(I + scale * A B A^*)` with `B` Hermitian PSD.
pub(crate) fn log2_det_identity_plus(a: &CMatrix, b: &CMatrix, scale: f64) -> f64 {
    let mut m = a * b * a.adjoint();
    m *= Complex64::new(scale, 0.0);
    for i in 0..m.nrows() {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    log2_det_hpd(&hermitian_part(&m))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm of `M^* M - I`.
pub fn unitarity_error(m: &CMatrix) -> f64 {
    let g = m.adjoint() * m;
    frobenius(&(g - CMatrix::identity(m.ncols(), m.ncols())))
}

/// Relative Frobenius error `||a - b|| / max(||a||, tiny)`.
pub fn relative_error(a: &CMatrix, b: &CMatrix) -> f64 {
    let denom = frobenius(a).max(f64::MIN_POSITIVE);
    frobenius(&(a - b)) / denom
}

pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

/// Thin SVD with singular values sorted in descending order.
///
/// Returns `(U, s, V)` with `M = U diag(s) V^*`; `U` is `m x p`, `V` is
/// `n x p` where `p = min(m, n)`.
pub(crate) fn sorted_svd(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    // faer: nalgebra's complex SVD can return wrong factors for clustered spectra.
    let (rows, cols) = (m.nrows(), m.ncols());
    let p = rows.min(cols);
    if p == 0 {
        return (CMatrix::zeros(rows, 0), Vec::new(), CMatrix::zeros(cols, 0));
    }
    let fm = faer::Mat::<Complex64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = fm.thin_svd().expect("SVD converges for finite input");
    let u = CMatrix::from_fn(rows, p, |i, j| svd.U()[(i, j)]);
    let v = CMatrix::from_fn(cols, p, |i, j| svd.V()[(i, j)]);
    let s: Vec<f64> = (0..p).map(|i| svd.S()[i].re).collect();

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));

    let u_sorted = CMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v_sorted = CMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]);
    let s_sorted = order.iter().map(|&i| s[i]).collect();
    (u_sorted, s_sorted, v_sorted)
}

/// Builds an `n x n` unitary whose columns flagged in `known` are taken from
/// `cols` (assumed orthonormal) and whose remaining columns complete the basis.
pub(crate) fn complete_unitary(n: usize, cols: &[Option<DVector<Complex64>>]) -> CMatrix {
    let mut basis: Vec<DVector<Complex64>> = cols.iter().flatten().cloned().collect();
    let mut out = CMatrix::zeros(n, n);
    let mut filled = vec![false; n];
    for (j, c) in cols.iter().enumerate().take(n) {
        if let Some(v) = c {
            out.set_column(j, v);
            filled[j] = true;
        }
    }

    // Candidate directions: canonical basis vectors, Gram-Schmidt twice.
    let mut candidates = (0..n).map(|e| {
        let mut v = DVector::<Complex64>::zeros(n);
        v[e] = Complex64::new(1.0, 0.0);
        v
    });
    for (j, _) in filled.iter().enumerate().filter(|(_, &f)| !f) {
        loop {
            let mut v = candidates
                .next()
                .expect("canonical basis always spans the remaining space");
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&v);
                    v -= b * proj;
                }
            }
            let norm = v.norm();
            if norm > 1e-6 {
                v /= Complex64::new(norm, 0.0);
                out.set_column(j, &v);
                basis.push(v);
                break;
            }
        }
    }
    out
}
