//! Finite-dimensional C*-algebras as unital *-subalgebras of `M_N`.
//!
//! An [`Algebra`] stores a Hilbert-Schmidt orthonormal basis whose first
//! element is `I/√N`. Coordinates of an element are its HS inner products
//! with the basis, so every linear map out of an algebra can be stored by
//! the images of the basis.

use std::sync::{Arc, OnceLock};

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{
    ensure_finite, hermitian_eig, identity, is_psd, kron, matrix_unit, real, zeros, CMatrix,
    MatrixSpan, PsdVerdict, Tolerance, C64, SPAN_REL_TOL,
};
use crate::random;

/// How [`validate_algebra`] treats the ambient identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitPolicy {
    /// Adjoin the identity to the generators.
    Append,
    /// The generated *-algebra must already contain the identity.
    Require,
}

#[derive(Debug, Clone)]
pub struct Algebra {
    span: MatrixSpan,
    structure: Arc<OnceLock<Result<BlockStructure>>>,
}

impl Algebra {
    /// Wrap a spanning set that is known to be a unital *-algebra (tensor
    /// products, corners, direct sums of validated algebras).
    pub(crate) fn from_spanning(n: usize, items: &[CMatrix]) -> Algebra {
        let mut span = MatrixSpan::new(n, n);
        span.push(&identity(n), SPAN_REL_TOL);
        for m in items {
            span.push(m, SPAN_REL_TOL);
        }
        Algebra { span, structure: Arc::new(OnceLock::new()) }
    }

    /// `M_n` with its matrix units as generators.
    pub fn full(n: usize) -> Algebra {
        let units: Vec<CMatrix> =
            (0..n).flat_map(|i| (0..n).map(move |j| matrix_unit(n, n, i, j))).collect();
        Algebra::from_spanning(n, &units)
    }

    /// Diagonal matrices in `M_n`.
    pub fn diagonal(n: usize) -> Algebra {
        let units: Vec<CMatrix> = (0..n).map(|i| matrix_unit(n, n, i, i)).collect();
        Algebra::from_spanning(n, &units)
    }

    /// `C·I_n`.
    pub fn scalars(n: usize) -> Algebra {
        Algebra::from_spanning(n, &[])
    }

    /// Block-diagonal direct sum `A_1 ⊕ … ⊕ A_k`.
    pub fn direct_sum(parts: &[&Algebra]) -> Algebra {
        let n: usize = parts.iter().map(|a| a.ambient_dim()).sum();
        let mut items = Vec::new();
        let mut offset = 0;
        for a in parts {
            for b in a.basis() {
                items.push(crate::numerics::embed(n, n, offset, offset, b));
            }
            offset += a.ambient_dim();
        }
        Algebra::from_spanning(n, &items)
    }

    /// `{a ⊗ I_mu}`: the same algebra repeated with multiplicity `mu`.
    pub fn with_multiplicity(&self, mu: usize) -> Algebra {
        let id = identity(mu);
        let items: Vec<CMatrix> = self.basis().iter().map(|b| kron(b, &id)).collect();
        Algebra::from_spanning(self.ambient_dim() * mu, &items)
    }

    /// `A ⊗ M_m` embedded as `a ⊗ k ↦ kron(a, k)`.
    pub fn tensor_full(&self, m: usize) -> Algebra {
        let mut items = Vec::new();
        for b in self.basis() {
            for k in 0..m {
                for l in 0..m {
                    items.push(kron(b, &matrix_unit(m, m, k, l)));
                }
            }
        }
        Algebra::from_spanning(self.ambient_dim() * m, &items)
    }

    /// `M_n(A)` as block matrices `[a_ij]`, i.e. `kron(e_ij, a)`.
    pub fn matrix_amplification(&self, n: usize) -> Algebra {
        let mut items = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for b in self.basis() {
                    items.push(kron(&matrix_unit(n, n, i, j), b));
                }
            }
        }
        Algebra::from_spanning(self.ambient_dim() * n, &items)
    }

    /// `u A u*` for a unitary `u`.
    pub fn conjugate(&self, u: &CMatrix) -> Algebra {
        let ua = u.adjoint();
        let items: Vec<CMatrix> = self.basis().iter().map(|b| u * b * &ua).collect();
        Algebra::from_spanning(self.ambient_dim(), &items)
    }

    pub fn ambient_dim(&self) -> usize {
        self.span.shape().0
    }

    pub fn dim(&self) -> usize {
        self.span.dim()
    }

    pub fn basis(&self) -> &[CMatrix] {
        self.span.basis()
    }

    pub fn span(&self) -> &MatrixSpan {
        &self.span
    }

    pub fn unit(&self) -> CMatrix {
        identity(self.ambient_dim())
    }

    /// Coordinates with respect to the orthonormal basis.
    pub fn coords(&self, x: &CMatrix) -> DVector<C64> {
        self.span.coords(x)
    }

    /// Coordinate matrix of left multiplication by `a`: column `j` holds the
    /// coordinates of `a · b_j`.
    pub fn left_mult_matrix(&self, a: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut m = zeros(d, d);
        for (j, b) in self.basis().iter().enumerate() {
            m.set_column(j, &self.coords(&(a * b)));
        }
        m
    }

    pub fn element(&self, coords: &DVector<C64>) -> CMatrix {
        let n = self.ambient_dim();
        self.basis().iter().zip(coords.iter()).fold(zeros(n, n), |acc, (b, &c)| acc + b * c)
    }

    /// Relative distance of `x` from the algebra.
    pub fn residual(&self, x: &CMatrix) -> f64 {
        if x.shape() != (self.ambient_dim(), self.ambient_dim()) {
            return f64::INFINITY;
        }
        self.span.residual(x)
    }

    pub fn contains(&self, x: &CMatrix, tol: &Tolerance) -> bool {
        self.residual(x) <= tol.rel.max(SPAN_REL_TOL)
    }

    pub fn same_span(&self, other: &Algebra) -> bool {
        self.ambient_dim() == other.ambient_dim() && self.span.same_span(&other.span, 1e-7)
    }

    /// Block structure, computed on first use.
    pub fn structure(&self) -> Result<&BlockStructure> {
        self.structure.get_or_init(|| decompose_uncached(self)).as_ref().map_err(Clone::clone)
    }

    /// A generic self-adjoint element drawn with a fixed seed.
    pub(crate) fn generic_hermitian<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        let n = self.ambient_dim();
        let mut h = zeros(n, n);
        for b in self.basis() {
            let w = random::gaussian_scalar(rng);
            h += b * w;
        }
        (&h + h.adjoint()) * real(0.5)
    }
}

/// Close a generating set under products and adjoints and return the
/// canonical algebra it spans.
pub fn validate_algebra(generators: &[CMatrix], policy: UnitPolicy) -> Result<Algebra> {
    let first = generators.first().ok_or(Error::Empty("algebra generators"))?;
    let n = first.nrows();
    if n == 0 {
        return Err(Error::ShapeMismatch("zero-dimensional ambient space".into()));
    }
    for g in generators {
        if g.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "generator of shape {:?} in M_{n}",
                g.shape()
            )));
        }
        ensure_finite(g)?;
    }

    let mut span = MatrixSpan::new(n, n);
    if policy == UnitPolicy::Append {
        span.push(&identity(n), SPAN_REL_TOL);
    }
    for g in generators {
        span.push(g, SPAN_REL_TOL);
    }

    // Semi-naive closure: every new basis element is multiplied against
    // everything already present, on both sides, and adjoined.
    let mut done = 0;
    while done < span.dim() {
        let x = span.basis()[done].clone();
        span.push(&x.adjoint(), SPAN_REL_TOL);
        let mut j = 0;
        while j <= done {
            let y = span.basis()[j].clone();
            span.push(&(&x * &y), SPAN_REL_TOL);
            span.push(&(&y * &x), SPAN_REL_TOL);
            j += 1;
        }
        if span.dim() > n * n {
            return Err(Error::NotStarClosed(format!(
                "span dimension {} exceeds {}",
                span.dim(),
                n * n
            )));
        }
        done += 1;
    }

    if !span.contains(&identity(n), SPAN_REL_TOL) {
        return Err(Error::NoUnit);
    }
    let basis = span.into_basis();
    Ok(Algebra::from_spanning(n, &basis))
}

/// One simple summand `M_n ⊗ I_m` of an algebra.
#[derive(Debug, Clone)]
pub struct Block {
    pub central_projection: CMatrix,
    pub size: usize,
    pub multiplicity: usize,
    /// Matrix units `e_{ij}` stored row-major: `units[i * size + j]`.
    pub units: Vec<CMatrix>,
}

impl Block {
    pub fn unit(&self, i: usize, j: usize) -> &CMatrix {
        &self.units[i * self.size + j]
    }
}

#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub blocks: Vec<Block>,
}

impl BlockStructure {
    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.size).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.multiplicity).collect()
    }
}

/// Wedderburn decomposition: central projections and matrix units.
pub fn decompose(a: &Algebra) -> Result<BlockStructure> {
    a.structure().cloned()
}

const DECOMPOSE_SEED: u64 = 0x6d6f_7269_7461;
const DECOMPOSE_ATTEMPTS: usize = 8;

fn decompose_uncached(a: &Algebra) -> Result<BlockStructure> {
    let n = a.ambient_dim();
    let center = center_basis(a)?;
    let mut rng = random::rng(DECOMPOSE_SEED);

    let mut projections = None;
    let mut best_gap = 0.0;
    for _ in 0..DECOMPOSE_ATTEMPTS {
        let mut h = zeros(n, n);
        for z in &center {
            h += z * real(rng.random::<f64>() * 2.0 - 1.0);
        }
        let (clusters, gap) = spectral_clusters(&h)?;
        if clusters.len() == center.len() {
            projections = Some(clusters);
            best_gap = gap;
            break;
        }
        best_gap = f64::max(best_gap, gap);
    }
    let mut central = projections.ok_or_else(|| {
        Error::NumericalDegeneracy(format!(
            "could not separate {} central projections (best gap {best_gap:.2e})",
            center.len()
        ))
    })?;

    for z in &central {
        let r = a.residual(z);
        if r > 1e-6 {
            return Err(Error::NumericalDegeneracy(format!(
                "central projection leaves the algebra (residual {r:.2e})"
            )));
        }
    }

    central.sort_by(|x, y| {
        let tx = x.trace().re.round() as i64;
        let ty = y.trace().re.round() as i64;
        tx.cmp(&ty).then_with(|| {
            let dx: Vec<f64> = (0..n).map(|i| -x[(i, i)].re).collect();
            let dy: Vec<f64> = (0..n).map(|i| -y[(i, i)].re).collect();
            dx.partial_cmp(&dy).unwrap_or(std::cmp::Ordering::Equal)
        })
    });

    let blocks = central
        .into_iter()
        .map(|z| simple_block(a, z, &mut rng))
        .collect::<Result<Vec<_>>>()?;

    let total: usize = blocks.iter().map(|b| b.size * b.size).sum();
    if total != a.dim() {
        return Err(Error::NumericalDegeneracy(format!(
            "block sizes account for dimension {total}, algebra has {}",
            a.dim()
        )));
    }
    Ok(BlockStructure { blocks })
}

/// Self-adjoint basis of the center `{z ∈ A : zb = bz for all b}`.
fn center_basis(a: &Algebra) -> Result<Vec<CMatrix>> {
    let basis = a.basis();
    let d = basis.len();
    // M = Σ_j C_j* C_j where column i of C_j is vec([b_i, b_j]); its null
    // space holds the coordinates of central elements.
    let mut m = zeros(d, d);
    for bj in basis {
        let comms: Vec<CMatrix> = basis.iter().map(|bi| bi * bj - bj * bi).collect();
        for i in 0..d {
            for k in i..d {
                let v = comms[i].dotc(&comms[k]);
                m[(i, k)] += v;
                if k != i {
                    m[(k, i)] += v.conj();
                }
            }
        }
    }
    let (values, u) = hermitian_eig(&m)?;
    let lmax = values.first().copied().unwrap_or(0.0).max(1.0);
    let n = a.ambient_dim();
    let mut span = MatrixSpan::new(n, n);
    for (k, &v) in values.iter().enumerate() {
        if v <= 1e-9 * lmax {
            let z = a.element(&u.column(k).into_owned());
            span.push(&(&z + z.adjoint()), SPAN_REL_TOL);
            span.push(&((&z - z.adjoint()) * C64::new(0.0, 1.0)), SPAN_REL_TOL);
        }
    }
    let center = span.into_basis();
    if center.is_empty() {
        return Err(Error::NumericalDegeneracy("empty center".into()));
    }
    Ok(center.into_iter().map(|z| crate::numerics::hermitian_part(&z)).collect())
}

/// Spectral projections of a Hermitian matrix, one per eigenvalue cluster
/// (descending), plus the smallest gap between clusters relative to the
/// spread.
fn spectral_clusters(h: &CMatrix) -> Result<(Vec<CMatrix>, f64)> {
    let (values, u) = hermitian_eig(h)?;
    let spread = (values[0] - values[values.len() - 1]).abs().max(1e-300);
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0);
    let merge = 1e-7 * scale;
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    let mut min_gap = f64::INFINITY;
    for k in 1..values.len() {
        let gap = values[k - 1] - values[k];
        if gap > merge {
            min_gap = min_gap.min(gap / spread);
            groups.push(vec![k]);
        } else {
            groups.last_mut().expect("nonempty").push(k);
        }
    }
    let n = h.nrows();
    let projections = groups
        .iter()
        .map(|g| {
            let mut p = zeros(n, n);
            for &k in g {
                let col = u.column(k);
                p += &col * col.adjoint();
            }
            p
        })
        .collect();
    Ok((projections, if min_gap.is_finite() { min_gap } else { 1.0 }))
}

fn simple_block<R: Rng + ?Sized>(a: &Algebra, z: CMatrix, rng: &mut R) -> Result<Block> {
    let n = a.ambient_dim();
    let rank_z = z.trace().re.round() as usize;
    let corner = MatrixSpan::spanned_by(n, n, a.basis().iter().map(|b| &z * b).collect::<Vec<_>>().iter());
    let dim = corner.dim();
    let size = (dim as f64).sqrt().round() as usize;
    if size * size != dim || size == 0 || rank_z % size != 0 {
        return Err(Error::NumericalDegeneracy(format!(
            "summand of dimension {dim} with projection rank {rank_z} is not M_n ⊗ I_m"
        )));
    }
    let multiplicity = rank_z / size;

    // Orthonormal basis of the range of z.
    let (zvals, zvecs) = hermitian_eig(&z)?;
    let r = zvals.iter().filter(|&&v| v > 0.5).count();
    let w = zvecs.columns(0, r).into_owned();

    let mut minimal = None;
    for _ in 0..DECOMPOSE_ATTEMPTS {
        let g = &z * a.generic_hermitian(rng) * &z;
        let compressed = w.adjoint() * &g * &w;
        let (clusters, _) = spectral_clusters(&compressed)?;
        let ok = clusters.len() == size
            && clusters.iter().all(|p| p.trace().re.round() as usize == multiplicity);
        if ok {
            minimal = Some(clusters.into_iter().map(|p| &w * p * w.adjoint()).collect::<Vec<_>>());
            break;
        }
    }
    let minimal = minimal.ok_or_else(|| {
        Error::NumericalDegeneracy(format!(
            "could not split a summand of size {size} into minimal projections"
        ))
    })?;

    // e_{1j}: normalized nonzero element of p_1 A p_j (a one-dimensional space).
    let p1 = &minimal[0];
    let mut first_row = Vec::with_capacity(size);
    first_row.push(p1.clone());
    for pj in minimal.iter().skip(1) {
        let s = a
            .basis()
            .iter()
            .map(|b| p1 * b * pj)
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .expect("nonempty basis");
        let scale = (s.norm_squared() / multiplicity as f64).sqrt();
        if scale < 1e-8 {
            return Err(Error::NumericalDegeneracy("vanishing off-diagonal matrix unit".into()));
        }
        first_row.push(s / real(scale));
    }
    let mut units = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            units.push(first_row[i].adjoint() * &first_row[j]);
        }
    }
    Ok(Block { central_projection: z, size, multiplicity, units })
}

/// Positivity of an element of a concrete C*-algebra (ambient positivity).
pub fn is_positive_element(a: &Algebra, x: &CMatrix, tol: &Tolerance) -> Result<PsdVerdict> {
    let residual = a.residual(x);
    if residual > tol.rel.max(SPAN_REL_TOL) {
        return Err(Error::NotInAlgebra { residual });
    }
    is_psd(x, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{diag, from_real, rel_diff};

    fn check_units(s: &BlockStructure, unit: &CMatrix) {
        let n = unit.nrows();
        let mut sum = zeros(n, n);
        for b in &s.blocks {
            for i in 0..b.size {
                sum += b.unit(i, i);
                for j in 0..b.size {
                    assert!(rel_diff(&b.unit(i, j).adjoint(), b.unit(j, i)) < 1e-9);
                    for k in 0..b.size {
                        for l in 0..b.size {
                            let prod = b.unit(i, j) * b.unit(k, l);
                            let expect = if j == k { b.unit(i, l).clone() } else { zeros(n, n) };
                            assert!(rel_diff(&prod, &expect) < 1e-9);
                        }
                    }
                }
            }
        }
        assert!(rel_diff(&sum, unit) < 1e-9);
    }

    #[test]
    fn scalars_from_identity() {
        let a = validate_algebra(&[identity(2)], UnitPolicy::Require).unwrap();
        assert_eq!(a.dim(), 1);
    }

    #[test]
    fn closure_of_two_matrix_units_is_m2() {
        let gens = [matrix_unit(2, 2, 0, 0), matrix_unit(2, 2, 0, 1)];
        let a = validate_algebra(&gens, UnitPolicy::Require).unwrap();
        assert_eq!(a.dim(), 4);
        assert!(a.contains(&matrix_unit(2, 2, 1, 0), &Tolerance::default()));
    }

    #[test]
    fn require_unit_rejects_corner() {
        let gens = [matrix_unit(2, 2, 0, 0)];
        assert_eq!(validate_algebra(&gens, UnitPolicy::Require).unwrap_err(), Error::NoUnit);
        assert_eq!(validate_algebra(&gens, UnitPolicy::Append).unwrap().dim(), 2);
    }

    #[test]
    fn diagonal_m3() {
        let gens: Vec<_> = (0..3).map(|i| matrix_unit(3, 3, i, i)).collect();
        let a = validate_algebra(&gens, UnitPolicy::Require).unwrap();
        assert_eq!(a.dim(), 3);
        let s = decompose(&a).unwrap();
        assert_eq!(s.sizes(), vec![1, 1, 1]);
        check_units(&s, &identity(3));
    }

    #[test]
    fn basis_starts_with_normalized_identity() {
        let a = Algebra::full(3);
        assert!(rel_diff(&a.basis()[0], &(identity(3) * real(1.0 / 3f64.sqrt()))) < 1e-12);
    }

    #[test]
    fn decompose_examples() {
        let s = decompose(&Algebra::full(2)).unwrap();
        assert_eq!((s.sizes(), s.multiplicities()), (vec![2], vec![1]));
        check_units(&s, &identity(2));

        let s = decompose(&Algebra::diagonal(2)).unwrap();
        assert_eq!(s.sizes(), vec![1, 1]);

        let a = Algebra::full(2).with_multiplicity(2);
        let s = decompose(&a).unwrap();
        assert_eq!((s.sizes(), s.multiplicities()), (vec![2], vec![2]));
        check_units(&s, &identity(4));
    }

    #[test]
    fn decompose_mixed_sum_conjugated() {
        let mut rng = random::rng(7);
        let a = Algebra::direct_sum(&[
            &Algebra::full(2).with_multiplicity(2),
            &Algebra::scalars(1),
            &Algebra::full(3),
        ]);
        let u = random::unitary(&mut rng, a.ambient_dim());
        let a = a.conjugate(&u);
        let s = decompose(&a).unwrap();
        let mut pairs: Vec<_> = s.sizes().into_iter().zip(s.multiplicities()).collect();
        pairs.sort();
        assert_eq!(pairs, vec![(1, 1), (2, 2), (3, 1)]);
        check_units(&s, &identity(a.ambient_dim()));
        for b in &s.blocks {
            for x in a.basis() {
                let comm = &b.central_projection * x - x * &b.central_projection;
                assert!(comm.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn decompose_is_deterministic() {
        let mut rng = random::rng(3);
        let a = Algebra::full(3).conjugate(&random::unitary(&mut rng, 3));
        let s1 = decompose_uncached(&a).unwrap();
        let s2 = decompose_uncached(&a).unwrap();
        for (x, y) in s1.blocks[0].units.iter().zip(&s2.blocks[0].units) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn validate_is_idempotent() {
        let mut rng = random::rng(11);
        let a = Algebra::direct_sum(&[&Algebra::full(2), &Algebra::diagonal(2)])
            .conjugate(&random::unitary(&mut rng, 4));
        let b = validate_algebra(a.basis(), UnitPolicy::Require).unwrap();
        assert!(a.same_span(&b));
    }

    #[test]
    fn positive_elements() {
        let a = Algebra::full(2);
        let t = Tolerance::default();
        assert!(is_positive_element(&a, &identity(2), &t).unwrap().psd);
        let mut rng = random::rng(5);
        let x = random::gaussian(&mut rng, 2, 2);
        assert!(is_positive_element(&a, &(x.adjoint() * &x), &t).unwrap().psd);
        assert!(!is_positive_element(&a, &diag(&[1.0, -1.0]), &t).unwrap().psd);

        let d = Algebra::diagonal(2);
        let off = from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(is_positive_element(&d, &off, &t), Err(Error::NotInAlgebra { .. })));
    }
}
