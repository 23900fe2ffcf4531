//! Generalized SVD of the pair `(H, Z)` and the covariance substitution chain.
//!
//! The factorization has the form
//!
//! ```text
//! H = U Λ_H [Φ^* T, 0] W^*,    Z = V Λ_Z [Φ^* T, 0] W^*,    Λ_H^T Λ_H + Λ_Z^T Λ_Z = I_k
//! ```
//!
//! It is built from a rank-revealing SVD of the stacked matrix `[H; Z]`
//! followed by a CS decomposition of the orthonormal factor. Restricting the
//! transmit covariance to `Q = W [M Q4 M^*, 0; 0, 0] W^*` with
//! `M = (Φ^* T)^{-1}` and diagonal `Q4` turns both log-determinants into sums
//! over scalar subchannels.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    complete_unitary, hermitian_part, relative_error, sorted_svd, unitarity_error, CMatrix,
};
use crate::model::CovarianceMatrix;

/// Default relative rank tolerance.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative margin applied to the `λ^H_i > λ^Z_i` test.
const STRICT_MARGIN: f64 = 1e-12;

/// Columns below this norm are replaced by an orthonormal completion.
const NULL_COLUMN: f64 = 1e-13;

/// Full GSVD of an `(H, Z)` pair.
#[derive(Debug, Clone)]
pub struct GsvdFactors {
    pub u: CMatrix,
    pub v: CMatrix,
    pub phi: CMatrix,
    pub t: CMatrix,
    pub w: CMatrix,
    /// Diagonal of `Λ_H` (length `min(N_D, k)`), descending.
    pub lambda_h: Vec<f64>,
    /// Diagonal of `Λ_Z` (length `k`), ascending.
    pub lambda_z: Vec<f64>,
    /// Rank of `[H; Z]`.
    pub k: usize,
    /// Number of `λ^H_i` above the rank tolerance.
    pub r: usize,
    /// `(Φ^* T)^{-1}`, formed without an explicit inversion.
    pub phit_inv: CMatrix,
}

impl GsvdFactors {
    /// `Λ_H` as an `N_D x k` matrix.
    pub fn lambda_h_matrix(&self) -> CMatrix {
        diag_matrix(self.u.nrows(), self.k, &self.lambda_h)
    }

    /// `Λ_Z` as an `N_Z x k` matrix.
    pub fn lambda_z_matrix(&self) -> CMatrix {
        diag_matrix(self.v.nrows(), self.k, &self.lambda_z)
    }

    /// `Φ^* T`.
    pub fn phit(&self) -> CMatrix {
        self.phi.adjoint() * &self.t
    }

    /// `[Φ^* T, 0] W^*`, the shared right factor.
    pub fn right_factor(&self) -> CMatrix {
        let n_s = self.w.nrows();
        let mut padded = CMatrix::zeros(self.k, n_s);
        padded
            .view_mut((0, 0), (self.k, self.k))
            .copy_from(&self.phit());
        padded * self.w.adjoint()
    }

    /// `λ^H_i`, zero past the destination dimension.
    pub fn lambda_h_at(&self, i: usize) -> f64 {
        self.lambda_h.get(i).copied().unwrap_or(0.0)
    }

    /// Residuals of every structural identity, for diagnostics and tests.
    pub fn residuals(&self, h: &CMatrix, z: &CMatrix) -> GsvdResiduals {
        let right = self.right_factor();
        let h_rec = &self.u * self.lambda_h_matrix() * &right;
        let z_rec = &self.v * self.lambda_z_matrix() * &right;
        let normalization = (0..self.k)
            .map(|i| (self.lambda_h_at(i).powi(2) + self.lambda_z[i].powi(2) - 1.0).abs())
            .fold(0.0, f64::max);
        let lower = (0..self.k)
            .flat_map(|c| (c + 1..self.k).map(move |r| (r, c)))
            .map(|(r, c)| self.t[(r, c)].norm())
            .fold(0.0, f64::max);
        GsvdResiduals {
            h_reconstruction: relative_error(h, &h_rec),
            z_reconstruction: relative_error(z, &z_rec),
            normalization,
            unitary_u: unitarity_error(&self.u),
            unitary_v: unitarity_error(&self.v),
            unitary_phi: unitarity_error(&self.phi),
            unitary_w: unitarity_error(&self.w),
            t_lower_triangle: lower,
            k: self.k,
            r: self.r,
        }
    }
}

fn diag_matrix(rows: usize, cols: usize, d: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for (i, &x) in d.iter().enumerate().take(rows.min(cols)) {
        m[(i, i)] = Complex64::new(x, 0.0);
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsvdResiduals {
    pub h_reconstruction: f64,
    pub z_reconstruction: f64,
    pub normalization: f64,
    pub unitary_u: f64,
    pub unitary_v: f64,
    pub unitary_phi: f64,
    pub unitary_w: f64,
    pub t_lower_triangle: f64,
    pub k: usize,
    pub r: usize,
}

impl GsvdResiduals {
    pub fn max(&self) -> f64 {
        [
            self.h_reconstruction,
            self.z_reconstruction,
            self.normalization,
            self.unitary_u,
            self.unitary_v,
            self.unitary_phi,
            self.unitary_w,
            self.t_lower_triangle,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Computes the GSVD of `(H, Z)`.
///
/// `rank_tol` is relative: `k` counts singular values of `[H; Z]` above
/// `rank_tol * σ_max`, and `r` counts `λ^H_i > rank_tol`.
pub fn gsvd_decompose(h: &CMatrix, z: &CMatrix, rank_tol: f64) -> Result<GsvdFactors> {
    let n_s = h.ncols();
    if z.ncols() != n_s {
        return Err(Error::input(format!(
            "H has {} columns but Z has {}",
            n_s,
            z.ncols()
        )));
    }
    if n_s == 0 {
        return Err(Error::input("matrices must have at least one column"));
    }
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::input("rank_tol must lie in (0, 1)"));
    }
    let (n_d, n_z) = (h.nrows(), z.nrows());
    if [h, z]
        .iter()
        .any(|m| m.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()))
    {
        return Err(Error::input("non-finite matrix entries"));
    }

    // Stacked SVD; zero rows are appended so the right factor is a full N_S x N_S unitary.
    let rows = (n_d + n_z).max(n_s);
    let mut stacked = CMatrix::zeros(rows, n_s);
    stacked.view_mut((0, 0), (n_d, n_s)).copy_from(h);
    stacked.view_mut((n_d, 0), (n_z, n_s)).copy_from(z);
    let (p, sigma, w) = sorted_svd(&stacked);

    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    if !(sigma_max > 0.0) {
        return Err(Error::Degenerate(
            "both H and Z are numerically zero".into(),
        ));
    }
    let k = sigma.iter().filter(|&&s| s > rank_tol * sigma_max).count();
    if k == 0 {
        return Err(Error::Degenerate(
            "stacked matrix has numerical rank 0".into(),
        ));
    }
    if n_z < k {
        return Err(Error::input(format!(
            "Z has {n_z} rows but rank([H; Z]) = {k}; a diagonal Λ_Z needs at least k rows"
        )));
    }

    let p1 = p.view((0, 0), (n_d, k)).into_owned();
    let p2 = p.view((n_d, 0), (n_z, k)).into_owned();

    // CS decomposition P1 = U C Y^*, P2 = V S Y^*. Singular vectors of a block
    // are accurate where its singular values are small, so directions with
    // c >= 1/sqrt(2) take Y from the SVD of P2 and the rest from P1.
    let (_, _, y1) = sorted_svd(&pad_rows(&p1, k));
    let (_, s2, y2) = sorted_svd(&pad_rows(&p2, k));
    let split = std::f64::consts::FRAC_1_SQRT_2;
    let m = s2.iter().filter(|&&s| s <= split).count();
    let small_c = k - m;

    // Large-c group in descending c (ascending s), then the small-c group.
    let mut y = CMatrix::zeros(k, k);
    for j in 0..m {
        y.set_column(j, &y2.column(k - 1 - j));
    }
    for j in 0..small_c {
        y.set_column(m + j, &y1.column(k - small_c + j));
    }
    // Re-orthonormalize across the two groups.
    let y = y.qr().q();

    let mut c = vec![0.0; k];
    let mut s_vals = vec![0.0; k];
    let mut u_cols: Vec<Option<DVector<Complex64>>> = vec![None; n_d];
    let mut v_cols: Vec<Option<DVector<Complex64>>> = vec![None; n_z];
    for i in 0..k {
        let yi = y.column(i);
        let a = &p1 * yi;
        let b = &p2 * yi;
        let (ca, sb) = (a.norm(), b.norm());
        c[i] = ca.min(1.0);
        s_vals[i] = sb.min(1.0);
        if i < n_d && ca > NULL_COLUMN {
            u_cols[i] = Some(a / Complex64::new(ca, 0.0));
        }
        if sb > NULL_COLUMN {
            v_cols[i] = Some(b / Complex64::new(sb, 0.0));
        }
    }
    let u = complete_unitary(n_d, &orthonormalize(u_cols));
    let v = complete_unitary(n_z, &orthonormalize(v_cols));
    let lambda_h: Vec<f64> = c.iter().take(n_d.min(k)).copied().collect();
    let lambda_z = s_vals;

    // Φ^*T = Y^* Σ_k; a QR split gives Φ^* = Q and T = R.
    let sigma_k = DVector::from_iterator(k, sigma.iter().take(k).map(|&s| Complex64::new(s, 0.0)));
    let phit = y.adjoint() * CMatrix::from_diagonal(&sigma_k);
    let qr = phit.clone().qr();
    let phi = qr.q().adjoint();
    let t = qr.r();
    let t_scale = (0..k).map(|i| t[(i, i)].norm()).fold(0.0, f64::max);
    if (0..k).any(|i| !(t[(i, i)].norm() > f64::EPSILON * t_scale)) {
        return Err(Error::Decomposition(
            "triangular factor T is singular".into(),
        ));
    }
    let inv_sigma = DVector::from_iterator(
        k,
        sigma.iter().take(k).map(|&s| Complex64::new(1.0 / s, 0.0)),
    );
    let phit_inv = CMatrix::from_diagonal(&inv_sigma) * &y;

    let r = lambda_h.iter().filter(|&&c| c > rank_tol).count();

    Ok(GsvdFactors {
        u,
        v,
        phi,
        t,
        w,
        lambda_h,
        lambda_z,
        k,
        r,
        phit_inv,
    })
}

fn pad_rows(m: &CMatrix, rows: usize) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows().max(rows), m.ncols());
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out
}

/// Gram-Schmidt (twice) over the present columns, in index order.
fn orthonormalize(cols: Vec<Option<DVector<Complex64>>>) -> Vec<Option<DVector<Complex64>>> {
    let mut done: Vec<DVector<Complex64>> = Vec::new();
    cols.into_iter()
        .map(|c| {
            c.map(|mut v| {
                for _ in 0..2 {
                    for q in &done {
                        let proj = q.dotc(&v);
                        v -= q * proj;
                    }
                }
                let n = v.norm();
                v /= Complex64::new(n, 0.0);
                done.push(v.clone());
                v
            })
        })
        .collect()
}

/// One scalar wiretap channel carrying positive secrecy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subchannel {
    /// Position in the k-dimensional GSVD coordinate system.
    pub index: usize,
    pub lambda_h: f64,
    pub lambda_z: f64,
    /// `(λ^H)^2 / N0`.
    pub a: f64,
    /// `(λ^Z)^2 / N0`.
    pub b: f64,
    /// Power cost: `trace(Q)` contribution per unit `q`.
    pub c: f64,
}

impl Subchannel {
    /// `a / b`, infinite when the eavesdropper gain vanishes.
    pub fn ratio(&self) -> f64 {
        if self.b > 0.0 {
            self.a / self.b
        } else {
            f64::INFINITY
        }
    }
}

/// The `l` retained subchannels plus what is needed to rebuild `Q`.
#[derive(Debug, Clone)]
pub struct SubchannelSet {
    pub channels: Vec<Subchannel>,
    pub k: usize,
    pub r: usize,
    pub w: CMatrix,
    pub phit_inv: CMatrix,
}

impl SubchannelSet {
    /// Decoupled subchannels with the given gains and costs (`N0 = 1`, identity directions).
    pub fn from_gains(a: &[f64], b: &[f64], c: &[f64]) -> Result<Self> {
        let l = a.len();
        if b.len() != l || c.len() != l {
            return Err(Error::input("a, b and c must have equal length"));
        }
        for i in 0..l {
            if !(a[i].is_finite()
                && b[i].is_finite()
                && c[i].is_finite()
                && b[i] >= 0.0
                && c[i] > 0.0)
            {
                return Err(Error::input(format!(
                    "subchannel {i}: need finite b >= 0 and c > 0"
                )));
            }
        }
        let channels = (0..l)
            .map(|i| Subchannel {
                index: i,
                lambda_h: a[i].max(0.0).sqrt(),
                lambda_z: b[i].sqrt(),
                a: a[i],
                b: b[i],
                c: c[i],
            })
            .collect();
        let k = l.max(1);
        let mut phit_inv = CMatrix::zeros(k, k);
        for i in 0..l {
            phit_inv[(i, i)] = Complex64::new(c[i].sqrt(), 0.0);
        }
        Ok(SubchannelSet {
            channels,
            k,
            r: l,
            w: CMatrix::identity(k, k),
            phit_inv,
        })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn n_s(&self) -> usize {
        self.w.nrows()
    }

    pub fn a(&self) -> Vec<f64> {
        self.channels.iter().map(|s| s.a).collect()
    }

    pub fn b(&self) -> Vec<f64> {
        self.channels.iter().map(|s| s.b).collect()
    }

    pub fn c(&self) -> Vec<f64> {
        self.channels.iter().map(|s| s.c).collect()
    }

    /// `Σ c_i q_i`.
    pub fn power(&self, q: &[f64]) -> f64 {
        self.channels.iter().zip(q).map(|(s, &qi)| s.c * qi).sum()
    }
}

/// Keeps the GSVD directions with `λ^H_i > λ^Z_i`, sorted by descending `a/b`.
pub fn extract_subchannels(f: &GsvdFactors, n0: f64) -> Result<SubchannelSet> {
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::input("N0 must be positive"));
    }
    let tdiag = (0..f.k).map(|i| f.t[(i, i)].norm());
    if tdiag.clone().any(|d| !(d > 0.0)) {
        return Err(Error::Decomposition(
            "triangular factor T is singular".into(),
        ));
    }
    let mut channels: Vec<Subchannel> = (0..f.r)
        .filter_map(|i| {
            let (lh, lz) = (f.lambda_h_at(i), f.lambda_z[i]);
            (lh > lz * (1.0 + STRICT_MARGIN)).then(|| Subchannel {
                index: i,
                lambda_h: lh,
                lambda_z: lz,
                a: lh * lh / n0,
                b: lz * lz / n0,
                c: f.phit_inv.column(i).norm_squared(),
            })
        })
        .collect();
    channels.sort_by(|x, y| y.ratio().total_cmp(&x.ratio()).then(x.index.cmp(&y.index)));
    Ok(SubchannelSet {
        channels,
        k: f.k,
        r: f.r,
        w: f.w.clone(),
        phit_inv: f.phit_inv.clone(),
    })
}

/// Rebuilds `Q = W [M Q4 M^*, 0; 0, 0] W^*` from per-subchannel powers.
pub fn reassemble_covariance(s: &SubchannelSet, q: &[f64]) -> Result<CovarianceMatrix> {
    if q.len() != s.len() {
        return Err(Error::input(format!(
            "power vector has length {} but there are {} subchannels",
            q.len(),
            s.len()
        )));
    }
    if let Some(bad) = q.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::input(format!(
            "subchannel powers must be finite and nonnegative, got {bad}"
        )));
    }
    let n_s = s.n_s();
    let mut q3 = DVector::<Complex64>::zeros(s.k);
    for (ch, &qi) in s.channels.iter().zip(q) {
        q3[ch.index] = Complex64::new(qi, 0.0);
    }
    let m = &s.phit_inv;
    let q2 = m * CMatrix::from_diagonal(&q3) * m.adjoint();
    let mut q1 = CMatrix::zeros(n_s, n_s);
    q1.view_mut((0, 0), (s.k, s.k)).copy_from(&q2);
    let full = &s.w * q1 * s.w.adjoint();
    CovarianceMatrix::new(hermitian_part(&full))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag(d: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| c(x))))
    }

    #[test]
    fn identical_pair_has_equal_generalized_values() {
        for n in 1..5 {
            let eye = CMatrix::identity(n, n);
            let f = gsvd_decompose(&eye, &eye, DEFAULT_RANK_TOL).unwrap();
            assert_eq!(f.k, n);
            for i in 0..n {
                assert!((f.lambda_h[i] - 0.5f64.sqrt()).abs() < 1e-12);
                assert!((f.lambda_z[i] - 0.5f64.sqrt()).abs() < 1e-12);
            }
            assert!(f.residuals(&eye, &eye).max() < 1e-12);
            let s = extract_subchannels(&f, 1.0).unwrap();
            assert!(s.is_empty());
        }
    }

    #[test]
    fn scalar_pair_by_hand() {
        let f = gsvd_decompose(&diag(&[2.0]), &diag(&[1.0]), DEFAULT_RANK_TOL).unwrap();
        assert!((f.lambda_h[0] - 2.0 / 5f64.sqrt()).abs() < 1e-14);
        assert!((f.lambda_z[0] - 1.0 / 5f64.sqrt()).abs() < 1e-14);
        assert!((f.phit()[(0, 0)].norm() - 5f64.sqrt()).abs() < 1e-14);
        let s = extract_subchannels(&f, 1.0).unwrap();
        assert_eq!(s.len(), 1);
        let ch = s.channels[0];
        assert!((ch.a - 0.8).abs() < 1e-14);
        assert!((ch.b - 0.2).abs() < 1e-14);
        assert!((ch.c - 0.2).abs() < 1e-14);

        let q = reassemble_covariance(&s, &[5.0]).unwrap();
        assert!((q.matrix()[(0, 0)] - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn rank_deficient_destination() {
        let h = diag(&[2.0, 0.0]);
        let z = CMatrix::identity(2, 2);
        let f = gsvd_decompose(&h, &z, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.k, 2);
        assert_eq!(f.r, 1);
        // CS oracle for a diagonal pair: λ^H = h / sqrt(h^2 + z^2).
        assert!((f.lambda_h[0] - 2.0 / 5f64.sqrt()).abs() < 1e-14);
        assert!(f.lambda_h[1].abs() < 1e-14);
        assert!((f.lambda_z[1] - 1.0).abs() < 1e-14);
        assert!(f.residuals(&h, &z).max() < 1e-12);
    }

    #[test]
    fn degenerate_pair_rejected() {
        let zero = CMatrix::zeros(2, 2);
        assert!(matches!(
            gsvd_decompose(&zero, &zero, DEFAULT_RANK_TOL),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn column_mismatch_rejected() {
        assert!(matches!(
            gsvd_decompose(
                &CMatrix::identity(2, 2),
                &CMatrix::identity(3, 3),
                DEFAULT_RANK_TOL
            ),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn wide_destination_channel() {
        // N_D = 1 < N_S = 3.
        let h = CMatrix::from_row_slice(1, 3, &[c(1.0), Complex64::new(0.0, 2.0), c(-0.5)]);
        let z = CMatrix::identity(3, 3) * c(0.4);
        let f = gsvd_decompose(&h, &z, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.k, 3);
        assert_eq!(f.r, 1);
        assert!(
            f.residuals(&h, &z).max() < 1e-12,
            "{:?}",
            f.residuals(&h, &z)
        );
        let s = extract_subchannels(&f, 1.0).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn zero_eavesdropper_gives_unit_destination_values() {
        let h = diag(&[3.0, 1.0]);
        let z = CMatrix::zeros(2, 2);
        let f = gsvd_decompose(&h, &z, DEFAULT_RANK_TOL).unwrap();
        assert!(f.residuals(&h, &z).max() < 1e-12);
        let s = extract_subchannels(&f, 2.0).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s
            .channels
            .iter()
            .all(|ch| ch.b == 0.0 && (ch.a - 0.5).abs() < 1e-14));
    }

    #[test]
    fn negative_power_rejected() {
        let f = gsvd_decompose(&diag(&[2.0]), &diag(&[1.0]), DEFAULT_RANK_TOL).unwrap();
        let s = extract_subchannels(&f, 1.0).unwrap();
        assert!(reassemble_covariance(&s, &[-1.0]).is_err());
        assert!(reassemble_covariance(&s, &[1.0, 2.0]).is_err());
        let q = reassemble_covariance(&s, &[0.0]).unwrap();
        assert_eq!(q.trace(), 0.0);
    }
}
