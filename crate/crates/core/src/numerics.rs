//! Dense complex-matrix kernel.
//!
//! Everything downstream (algebras, modules, dilations) is concrete matrix
//! arithmetic, so this module carries the few spectral routines the rest of
//! the crate leans on: Hermitian eigendecomposition, positivity tests, the
//! partial isometry of a polar decomposition and the quotient of a formal
//! span by the null space of its Gram matrix.
//!
//! Inner products are conjugate-linear in the first argument. Norms are
//! spectral norms unless a function says otherwise.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative/absolute tolerance pair used by every numerical verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel: 1e-9, abs: 1e-12 }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Result<Self> {
        if !(rel >= 0.0 && abs >= 0.0) || !rel.is_finite() || !abs.is_finite() {
            return Err(Error::ParamOutOfRange(format!("tolerance rel={rel} abs={abs}")));
        }
        Ok(Tolerance { rel, abs })
    }

    /// Threshold for a quantity whose natural size is `scale`.
    pub fn bound(&self, scale: f64) -> f64 {
        self.rel * scale.max(1.0) + self.abs
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// The matrix unit `e_{ij}` in `M_{rows x cols}`.
pub fn matrix_unit(rows: usize, cols: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(rows, cols);
    m[(i, j)] = ONE;
    m
}

pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| real(x)))
}

pub fn diag(entries: &[f64]) -> CMatrix {
    let mut m = zeros(entries.len(), entries.len());
    for (i, &x) in entries.iter().enumerate() {
        m[(i, i)] = real(x);
    }
    m
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Block-diagonal direct sum.
pub fn direct_sum(blocks: &[&CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        m.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    m
}

/// Place `block` at offset `(r, c)` of a zero matrix of the given shape.
pub fn embed(rows: usize, cols: usize, r: usize, c: usize, block: &CMatrix) -> CMatrix {
    let mut m = zeros(rows, cols);
    m.view_mut((r, c), (block.nrows(), block.ncols())).copy_from(block);
    m
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Hilbert-Schmidt inner product `tr(a* b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.dotc(b)
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let frob = m.norm();
    if frob == 0.0 {
        return 0.0;
    }
    // A row or column is its own singular vector.
    if m.nrows() == 1 || m.ncols() == 1 {
        return frob;
    }
    match to_faer(m).singular_values() {
        Ok(s) => s.first().copied().unwrap_or(0.0),
        Err(_) => hermitian_eig(&hermitian_part(&(m.adjoint() * m)))
            .map(|(values, _)| values[0].max(0.0).sqrt())
            .unwrap_or(frob),
    }
}

fn to_faer(m: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `m = u diag(s) v*` with `s` descending.
struct Svd {
    u: CMatrix,
    s: Vec<f64>,
    v: CMatrix,
}

fn thin_svd(m: &CMatrix) -> Result<Svd> {
    let svd = to_faer(m)
        .thin_svd()
        .map_err(|_| Error::NumericalDegeneracy("singular value decomposition did not converge".into()))?;
    let s = svd.S().column_vector().iter().map(|x| x.re).collect();
    Ok(Svd { u: from_faer(svd.U()), s, v: from_faer(svd.V()) })
}

/// [`thin_svd`], falling back to the eigendecomposition of `m* m` if the
/// iteration fails to converge.
fn svd(m: &CMatrix) -> Svd {
    if let Ok(svd) = thin_svd(m) {
        return svd;
    }
    let gram = hermitian_part(&(m.adjoint() * m));
    let (values, v) = hermitian_eig(&gram).expect("Hermitian eigendecomposition of a Gram matrix");
    let k = m.nrows().min(m.ncols());
    let s: Vec<f64> = values.iter().take(k).map(|x| x.max(0.0).sqrt()).collect();
    let mut u = zeros(m.nrows(), k);
    for (j, &sj) in s.iter().enumerate() {
        if sj > 0.0 {
            u.set_column(j, &(m * v.column(j) * real(1.0 / sj)));
        }
    }
    Svd { u, s, v: v.columns(0, k).into_owned() }
}

/// `‖a − b‖ / max(1, ‖b‖)`.
pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    spectral_norm(&(a - b)) / spectral_norm(b).max(1.0)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * real(0.5)
}

fn check_hermitian(m: &CMatrix, tol: &Tolerance) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m)?;
    let norm = spectral_norm(m);
    let residual = spectral_norm(&(m - m.adjoint()));
    if residual > tol.rel * norm + tol.abs {
        return Err(Error::NonHermitian { residual });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in descending
/// order and the eigenvectors as the columns of a unitary.
pub fn hermitian_eig(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    hermitian_eig_with(m, &Tolerance::default())
}

pub fn hermitian_eig_with(m: &CMatrix, tol: &Tolerance) -> Result<(Vec<f64>, CMatrix)> {
    check_hermitian(m, tol)?;
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    let eig = to_faer(&hermitian_part(m))
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::NumericalDegeneracy("eigendecomposition did not converge".into()))?;
    // faer returns ascending eigenvalues
    let values = eig.S().column_vector().iter().rev().map(|x| x.re).collect();
    let vectors = from_faer(eig.U());
    let mut u = zeros(n, n);
    for col in 0..n {
        u.set_column(col, &vectors.column(n - 1 - col));
    }
    Ok((values, u))
}

/// Outcome of a positivity test, with the smallest eigenvalue as witness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdVerdict {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

pub fn is_psd(m: &CMatrix, tol: &Tolerance) -> Result<PsdVerdict> {
    let (values, _) = hermitian_eig_with(m, tol)?;
    let min_eigenvalue = values.last().copied().unwrap_or(0.0);
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(PsdVerdict {
        psd: min_eigenvalue >= -tol.bound(scale),
        min_eigenvalue,
    })
}

/// Partial isometry `w` of the polar decomposition `m = w (m* m)^{1/2}`.
pub fn polar_partial_isometry(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if m.is_empty() || m.norm() == 0.0 {
        return Ok(zeros(rows, cols));
    }
    let svd = thin_svd(m)?;
    let cutoff = tol.rel * svd.s[0] + tol.abs;
    let mut w = zeros(rows, cols);
    for (k, &s) in svd.s.iter().enumerate() {
        if s > cutoff {
            w += svd.u.column(k) * svd.v.column(k).adjoint();
        }
    }
    Ok(w)
}

/// Numerical rank of an arbitrary matrix: singular values above
/// `rel * max_singular_value + abs`.
pub fn rank(m: &CMatrix, tol: &Tolerance) -> usize {
    if m.is_empty() || m.norm() == 0.0 {
        return 0;
    }
    let s = svd(m).s;
    let cutoff = tol.rel * s[0] + tol.abs;
    s.iter().filter(|&&x| x > cutoff).count()
}

/// Moore-Penrose pseudo-inverse with the same singular value cutoff as [`rank`].
pub fn pinv(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let (rows, cols) = m.shape();
    if m.is_empty() || m.norm() == 0.0 {
        return zeros(cols, rows);
    }
    let svd = svd(m);
    let cutoff = tol.rel * svd.s[0] + tol.abs;
    let mut out = zeros(cols, rows);
    for (k, &s) in svd.s.iter().enumerate() {
        if s > cutoff {
            out += svd.v.column(k) * svd.u.column(k).adjoint() * real(1.0 / s);
        }
    }
    out
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_fn(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let (values, u) = hermitian_eig(m)?;
    let d = DVector::from_iterator(values.len(), values.iter().map(|&x| real(f(x))));
    Ok(&u * CMatrix::from_diagonal(&d) * u.adjoint())
}

/// Orthonormal basis of a column span, one column per basis vector.
pub fn range_basis(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let r = rank(m, tol);
    if r == 0 {
        return zeros(m.nrows(), 0);
    }
    svd(m).u.columns(0, r).into_owned()
}

/// Quotient of a formal span by the null space of its Gram matrix.
///
/// `project` has one row per orthonormal quotient basis vector: the formal
/// vector `project.row(r).adjoint()` has unit norm and the rows are mutually
/// orthogonal, i.e. `project · G · project* = I`. `coords = project · G`
/// sends formal coordinates to quotient coordinates; its column `j` is the
/// class of the `j`-th formal generator.
///
/// The quotient basis is obtained by Gram-Schmidt over the generators in
/// index order, so it does not depend on how the eigensolver picks vectors
/// inside a degenerate eigenspace.
#[derive(Debug, Clone)]
pub struct GramQuotient {
    pub input_dim: usize,
    pub quotient_dim: usize,
    pub project: CMatrix,
    pub coords: CMatrix,
}

impl GramQuotient {
    /// Quotient coordinates of formal vectors given as columns.
    pub fn coordinates(&self, formal: &CMatrix) -> CMatrix {
        &self.coords * formal
    }

    /// Formal coordinates of the orthonormal quotient basis, as columns.
    pub fn basis_formal(&self) -> CMatrix {
        self.project.adjoint()
    }
}

pub fn gram_quotient(g: &CMatrix, tol: &Tolerance) -> Result<GramQuotient> {
    let n = g.nrows();
    let (values, u) = hermitian_eig_with(g, tol)?;
    let lmax = values.first().copied().unwrap_or(0.0).max(0.0);
    let min_eigenvalue = values.last().copied().unwrap_or(0.0);
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if min_eigenvalue < -tol.bound(scale) {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    let cutoff = (tol.rel * lmax).max(tol.abs);
    let r = values.iter().filter(|&&x| x > cutoff).count();

    // Eigen-coordinates of each generator: gamma = Λ^{1/2} U_r*.
    let mut gamma = zeros(r, n);
    for k in 0..r {
        let s = values[k].sqrt();
        for j in 0..n {
            gamma[(k, j)] = u[(j, k)].conj() * s;
        }
    }
    let q = ordered_orthonormal_frame(&gamma);

    // project = Q* Λ^{-1/2} U_r*, coords = Q* gamma.
    let mut eig_project = zeros(r, n);
    for k in 0..r {
        let s = 1.0 / values[k].sqrt();
        for j in 0..n {
            eig_project[(k, j)] = u[(j, k)].conj() * s;
        }
    }
    let qa = q.adjoint();
    Ok(GramQuotient {
        input_dim: n,
        quotient_dim: r,
        project: &qa * eig_project,
        coords: &qa * gamma,
    })
}

/// Unitary whose columns come from Gram-Schmidt on the columns of `gamma`
/// taken in order, skipping columns that are (nearly) dependent on earlier
/// ones. `gamma` must have full row rank.
fn ordered_orthonormal_frame(gamma: &CMatrix) -> CMatrix {
    let (r, n) = gamma.shape();
    let mut frame: Vec<DVector<C64>> = Vec::with_capacity(r);
    let max_norm = (0..n).map(|j| gamma.column(j).norm()).fold(0.0, f64::max);
    for &threshold in &[1e-3, 1e-8] {
        for j in 0..n {
            if frame.len() == r {
                break;
            }
            let col: DVector<C64> = gamma.column(j).into_owned();
            let norm = col.norm();
            if norm <= threshold * max_norm {
                continue;
            }
            let mut v = col;
            for _ in 0..2 {
                for f in &frame {
                    let p = f.dotc(&v);
                    v -= f * p;
                }
            }
            let resid = v.norm();
            if resid > threshold * norm {
                frame.push(v / real(resid));
            }
        }
    }
    // Complete from the standard basis if the generators were pathological.
    for k in 0..r {
        if frame.len() == r {
            break;
        }
        let mut v = DVector::from_element(r, ZERO);
        v[k] = ONE;
        for _ in 0..2 {
            for f in &frame {
                let p = f.dotc(&v);
                v -= f * p;
            }
        }
        let resid = v.norm();
        if resid > 1e-6 {
            frame.push(v / real(resid));
        }
    }
    let mut q = zeros(r, r);
    for (k, f) in frame.iter().enumerate() {
        q.set_column(k, f);
    }
    q
}

/// Vectorize an `m x n` matrix column-major (nalgebra's storage order).
pub fn vectorize(m: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

/// An orthonormal (Hilbert-Schmidt) basis of a subspace of `rows x cols`
/// matrices, grown by Gram-Schmidt in insertion order.
#[derive(Debug, Clone)]
pub struct MatrixSpan {
    rows: usize,
    cols: usize,
    basis: Vec<CMatrix>,
}

impl MatrixSpan {
    pub fn new(rows: usize, cols: usize) -> Self {
        MatrixSpan { rows, cols, basis: Vec::new() }
    }

    pub fn spanned_by<'a>(rows: usize, cols: usize, items: impl IntoIterator<Item = &'a CMatrix>) -> Self {
        let mut span = MatrixSpan::new(rows, cols);
        for m in items {
            span.push(m, SPAN_REL_TOL);
        }
        span
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn into_basis(self) -> Vec<CMatrix> {
        self.basis
    }

    pub fn coords(&self, x: &CMatrix) -> DVector<C64> {
        DVector::from_iterator(self.basis.len(), self.basis.iter().map(|b| hs_inner(b, x)))
    }

    /// Component of `x` orthogonal to the span.
    pub fn residual_vector(&self, x: &CMatrix) -> CMatrix {
        let mut v = x.clone();
        for _ in 0..2 {
            for b in &self.basis {
                let p = hs_inner(b, &v);
                v -= b * p;
            }
        }
        v
    }

    /// Relative distance of `x` from the span (Hilbert-Schmidt).
    pub fn residual(&self, x: &CMatrix) -> f64 {
        let n = x.norm();
        if n <= SPAN_ZERO_FLOOR {
            return 0.0;
        }
        self.residual_vector(x).norm() / n
    }

    /// Add `x` if it is not already in the span up to relative tolerance
    /// `rel`. Returns whether the span grew.
    pub fn push(&mut self, x: &CMatrix, rel: f64) -> bool {
        assert_eq!(x.shape(), (self.rows, self.cols), "matrix span shape mismatch");
        let n = x.norm();
        if n <= SPAN_ZERO_FLOOR {
            return false;
        }
        let v = self.residual_vector(x);
        let r = v.norm();
        if r <= rel * n {
            return false;
        }
        self.basis.push(v / real(r));
        true
    }

    pub fn contains(&self, x: &CMatrix, rel: f64) -> bool {
        self.residual(x) <= rel
    }

    /// Whether `other` lies in this span, basis element by basis element.
    pub fn contains_span(&self, other: &MatrixSpan, rel: f64) -> bool {
        other.basis.iter().all(|b| self.contains(b, rel))
    }

    pub fn same_span(&self, other: &MatrixSpan, rel: f64) -> bool {
        self.dim() == other.dim() && self.contains_span(other, rel)
    }
}

/// Relative residual below which a matrix counts as lying in a span.
pub const SPAN_REL_TOL: f64 = 1e-8;

/// Inputs with Hilbert-Schmidt norm at or below this are treated as zero
/// when growing a span (products that vanish exactly carry rounding noise).
pub const SPAN_ZERO_FLOOR: f64 = 1e-10;

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> CMatrix {
        from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let (v, u) = hermitian_eig(&identity(2)).unwrap();
        assert_eq!(v, vec![1.0, 1.0]);
        assert!(rel_diff(&(u.adjoint() * &u), &identity(2)) < 1e-12);

        let (v, _) = hermitian_eig(&diag(&[3.0, -1.0])).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-12 && (v[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_pauli_x() {
        let (v, u) = hermitian_eig(&pauli_x()).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] + 1.0).abs() < 1e-12);
        let d = diag(&v);
        assert!(rel_diff(&(&u * d * u.adjoint()), &pauli_x()) < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian_and_nan() {
        let m = from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NonHermitian { .. })));
        let mut n = identity(2);
        n[(0, 1)] = c(f64::NAN, 0.0);
        assert_eq!(hermitian_eig(&n), Err(Error::NonFinite));
    }

    #[test]
    fn psd_examples() {
        let t = Tolerance::default();
        let v = is_psd(&zeros(3, 3), &t).unwrap();
        assert!(v.psd);
        assert_eq!(v.min_eigenvalue, 0.0);
        let v = is_psd(&diag(&[1.0, -0.5]), &t).unwrap();
        assert!(!v.psd);
        assert!((v.min_eigenvalue + 0.5).abs() < 1e-12);
    }

    #[test]
    fn psd_transpose_choi() {
        // Choi matrix of the transpose map on M_2 is the swap operator.
        let mut choi = zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let block = matrix_unit(2, 2, j, i);
                choi.view_mut((2 * i, 2 * j), (2, 2)).copy_from(&block);
            }
        }
        let v = is_psd(&choi, &Tolerance::default()).unwrap();
        assert!(!v.psd);
        assert!((v.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn polar_examples() {
        let t = Tolerance::default();
        let h = from_real(2, 2, &[1.0, 1.0, 1.0, -1.0]) * real(std::f64::consts::FRAC_1_SQRT_2);
        assert!(rel_diff(&polar_partial_isometry(&h, &t).unwrap(), &h) < 1e-12);

        let w = polar_partial_isometry(&diag(&[2.0, 0.0]), &t).unwrap();
        assert!(rel_diff(&w, &diag(&[1.0, 0.0])) < 1e-12);

        let w = polar_partial_isometry(&from_real(2, 1, &[3.0, 4.0]), &t).unwrap();
        assert!(rel_diff(&w, &from_real(2, 1, &[0.6, 0.8])) < 1e-12);
    }

    #[test]
    fn gram_quotient_examples() {
        let t = Tolerance::default();
        assert_eq!(gram_quotient(&identity(3), &t).unwrap().quotient_dim, 3);
        let ones = from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(gram_quotient(&ones, &t).unwrap().quotient_dim, 1);
        // {1, e_11} in M_2 under tr(x* y)
        let g = from_real(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let q = gram_quotient(&g, &t).unwrap();
        assert_eq!(q.quotient_dim, 2);
        let pgp = &q.project * &g * q.project.adjoint();
        assert!(rel_diff(&pgp, &identity(2)) < 1e-12);
    }

    #[test]
    fn gram_quotient_rejects_negative() {
        let g = diag(&[1.0, -0.1]);
        assert!(matches!(
            gram_quotient(&g, &Tolerance::default()),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn gram_quotient_basis_follows_generator_order() {
        // generators e1, e1, e2: first basis vector is the class of generator 0
        let g = from_real(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let q = gram_quotient(&g, &Tolerance::default()).unwrap();
        assert_eq!(q.quotient_dim, 2);
        let c0 = q.coords.column(0);
        assert!((c0[0].re - 1.0).abs() < 1e-12 && c0[1].norm() < 1e-12);
    }

    #[test]
    fn matrix_span_membership() {
        let mut s = MatrixSpan::new(2, 2);
        assert!(s.push(&matrix_unit(2, 2, 0, 0), SPAN_REL_TOL));
        assert!(!s.push(&(matrix_unit(2, 2, 0, 0) * real(3.0)), SPAN_REL_TOL));
        assert!(s.push(&identity(2), SPAN_REL_TOL));
        assert!(s.contains(&matrix_unit(2, 2, 1, 1), SPAN_REL_TOL));
        assert!(!s.contains(&matrix_unit(2, 2, 0, 1), SPAN_REL_TOL));
    }

    #[test]
    fn range_basis_of_projections() {
        let mut rng = crate::random::rng(17);
        for n in 2..=8 {
            for r in 1..n {
                let q = crate::random::isometry(&mut rng, n, r);
                let p = &q * q.adjoint();
                let f = range_basis(&p, &Tolerance { rel: 1e-6, abs: 1e-9 });
                assert_eq!(f.ncols(), r);
                assert!(spectral_norm(&(f.adjoint() * &f - identity(r))) < 1e-12);
                assert!(spectral_norm(&(&p * &f - &f)) < 1e-12);
            }
        }
    }

    #[test]
    fn pinv_inverts_on_range() {
        let mut rng = crate::random::rng(3);
        let m = crate::random::gaussian(&mut rng, 5, 3);
        let pi = pinv(&m, &Tolerance::default());
        assert!(spectral_norm(&(&pi * &m - identity(3))) < 1e-12);
    }
}
