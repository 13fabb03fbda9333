//! Completely positive maps, their Choi certificates and minimal
//! Stinespring dilations, and the equivalence of CP maps defined through
//! their dilations.

use nalgebra::DVector;

use crate::algebra::Algebra;
use crate::bimodule::{Bimodule, LinkingAlgebra};
use crate::error::{Error, Result};
use crate::numerics::{
    direct_sum, gram_quotient, GramQuotient, hermitian_part, identity, is_psd, kron, pinv, rank,
    spectral_norm, zeros, CMatrix, Tolerance, C64,
};
use crate::representation::{
    linking_rep, sme_representations, stabilize_rep, tensor_apply, BgrTransport, BimoduleRep,
    Representation,
};

/// A linear map `A → M_h` given by the images of the basis of `A`.
#[derive(Debug, Clone)]
pub struct CPMap {
    source: Algebra,
    target_dim: usize,
    images: Vec<CMatrix>,
}

impl CPMap {
    pub fn new(source: &Algebra, target_dim: usize, images: Vec<CMatrix>) -> Result<Self> {
        if images.len() != source.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} images for an algebra of dimension {}",
                images.len(),
                source.dim()
            )));
        }
        for m in &images {
            if m.shape() != (target_dim, target_dim) {
                return Err(Error::ShapeMismatch(format!(
                    "image of shape {:?} for target dimension {target_dim}",
                    m.shape()
                )));
            }
            crate::numerics::ensure_finite(m)?;
        }
        Ok(CPMap { source: source.clone(), target_dim, images })
    }

    pub fn from_fn(source: &Algebra, target_dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let images = source.basis().iter().map(f).collect();
        CPMap { source: source.clone(), target_dim, images }
    }

    /// `a ↦ Σ K_i* a K_i` for operators `K_i` of shape `N × h`.
    pub fn from_kraus(source: &Algebra, kraus: &[CMatrix]) -> Result<Self> {
        let first = kraus.first().ok_or(Error::Empty("Kraus operators"))?;
        let (n, h) = first.shape();
        if n != source.ambient_dim() || kraus.iter().any(|k| k.shape() != (n, h)) {
            return Err(Error::ShapeMismatch("Kraus operators must all be N × h".into()));
        }
        Ok(CPMap::from_fn(source, h, |a| {
            kraus.iter().fold(zeros(h, h), |acc, k| acc + k.adjoint() * a * k)
        }))
    }

    pub fn source(&self) -> &Algebra {
        &self.source
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn images(&self) -> &[CMatrix] {
        &self.images
    }

    pub fn eval_coords(&self, coords: &DVector<C64>) -> CMatrix {
        self.images
            .iter()
            .zip(coords.iter())
            .fold(zeros(self.target_dim, self.target_dim), |acc, (m, &c)| acc + m * c)
    }

    pub fn eval(&self, x: &CMatrix) -> CMatrix {
        self.eval_coords(&self.source.coords(x))
    }

    /// `‖φ‖ = ‖φ(1)‖`.
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.eval(&self.source.unit()))
    }

    pub fn is_zero(&self) -> bool {
        self.images.iter().all(|m| m.norm() <= 1e-14)
    }

    /// Largest deviation between two maps on a common source basis.
    pub fn distance(&self, other: &CPMap) -> f64 {
        self.source
            .basis()
            .iter()
            .map(|b| spectral_norm(&(self.eval(b) - other.eval(b))))
            .fold(0.0, f64::max)
    }

    /// `φ ∘ σ` for a linear map `σ` from another algebra into the source
    /// ambient space.
    pub fn precompose(&self, sigma: &Representation) -> CPMap {
        CPMap::from_fn(sigma.algebra(), self.target_dim, |a| self.eval(&sigma.eval(a)))
    }
}

/// Choi matrices `[φ(e_ij)]` over the matrix units of each simple summand.
#[derive(Debug, Clone)]
pub struct ChoiCertificate {
    pub blocks: Vec<CMatrix>,
    pub min_eigenvalue: f64,
    pub cp: bool,
}

pub fn verify_cp(phi: &CPMap, tol: &Tolerance) -> Result<ChoiCertificate> {
    let basis = phi.source.basis();
    let scale = phi.images.iter().map(spectral_norm).fold(0.0, f64::max);
    let mut herm = 0.0_f64;
    for (i, b) in basis.iter().enumerate() {
        herm = herm.max(spectral_norm(&(phi.eval(&b.adjoint()) - phi.images[i].adjoint())));
    }
    if herm > tol.bound(scale) {
        return Err(Error::NonHermitian { residual: herm });
    }
    let h = phi.target_dim;
    let structure = phi.source.structure()?;
    let mut blocks = Vec::with_capacity(structure.blocks.len());
    let mut min_eigenvalue = f64::INFINITY;
    let mut cp = true;
    for block in &structure.blocks {
        let n = block.size;
        let mut choi = zeros(n * h, n * h);
        for i in 0..n {
            for j in 0..n {
                choi.view_mut((i * h, j * h), (h, h)).copy_from(&phi.eval(block.unit(i, j)));
            }
        }
        let choi = hermitian_part(&choi);
        let verdict = is_psd(&choi, tol)?;
        min_eigenvalue = min_eigenvalue.min(verdict.min_eigenvalue);
        cp &= verdict.psd;
        blocks.push(choi);
    }
    if !min_eigenvalue.is_finite() {
        min_eigenvalue = 0.0;
    }
    Ok(ChoiCertificate { blocks, min_eigenvalue, cp })
}

/// [`verify_cp`] turned into an error when the certificate fails.
pub fn require_cp(phi: &CPMap, tol: &Tolerance) -> Result<ChoiCertificate> {
    let cert = verify_cp(phi, tol)?;
    if !cert.cp {
        return Err(Error::NotCp { min_eigenvalue: cert.min_eigenvalue });
    }
    Ok(cert)
}

/// `(π, V, H')` with `φ(a) = V* π(a) V`.
#[derive(Debug, Clone)]
pub struct StinespringTriple {
    pub pi: Representation,
    /// Shape `dilation_dim × h`.
    pub v: CMatrix,
}

impl StinespringTriple {
    pub fn dilation_dim(&self) -> usize {
        self.pi.space_dim()
    }

    /// The map `a ↦ V* π(a) V` on the basis of `π`'s algebra.
    pub fn compress(&self, a: &CMatrix) -> CMatrix {
        self.v.adjoint() * self.pi.eval(a) * &self.v
    }

    /// Columns `π(b_i) V`, the generators of `π(A) V C^h`.
    pub fn generators(&self) -> CMatrix {
        let basis = self.pi.algebra().basis();
        let (dd, h) = self.v.shape();
        let mut g = zeros(dd, basis.len() * h);
        for (i, b) in basis.iter().enumerate() {
            g.view_mut((0, i * h), (dd, h)).copy_from(&(self.pi.eval(b) * &self.v));
        }
        g
    }

    pub fn cyclic_rank(&self) -> usize {
        if self.dilation_dim() == 0 {
            return 0;
        }
        rank(&self.generators(), &Tolerance { rel: 1e-9, abs: 1e-12 })
    }
}

/// Residuals of the Stinespring conditions for a triple against a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleReport {
    /// `max_a ‖φ(a) − V* π(a) V‖` over basis `a`.
    pub dilation: f64,
    pub dilation_dim: usize,
    /// `dim span π(A) V C^h`.
    pub cyclic_rank: usize,
    /// `|‖V*V‖ − ‖φ(1)‖|`.
    pub norm_gap: f64,
}

impl TripleReport {
    pub fn minimal(&self) -> bool {
        self.cyclic_rank == self.dilation_dim
    }

    pub fn pass(&self, phi_norm: f64, tol: &Tolerance) -> bool {
        let limit = tol.rel * phi_norm + tol.abs;
        self.minimal() && self.dilation <= limit && self.norm_gap <= limit
    }
}

pub fn check_triple(phi: &CPMap, t: &StinespringTriple) -> TripleReport {
    let dilation = phi
        .source
        .basis()
        .iter()
        .map(|b| spectral_norm(&(phi.eval(b) - t.compress(b))))
        .fold(0.0, f64::max);
    let vv = if t.dilation_dim() == 0 { 0.0 } else { spectral_norm(&(t.v.adjoint() * &t.v)) };
    TripleReport {
        dilation,
        dilation_dim: t.dilation_dim(),
        cyclic_rank: t.cyclic_rank(),
        norm_gap: (vv - phi.norm()).abs(),
    }
}

fn require_triple(phi: &CPMap, t: &StinespringTriple, tol: &Tolerance) -> Result<TripleReport> {
    let report = check_triple(phi, t);
    let limit = tol.bound(phi.norm());
    if report.dilation > limit || report.norm_gap > limit {
        return Err(Error::NotSameMap { residual: report.dilation.max(report.norm_gap) });
    }
    if !report.minimal() {
        return Err(Error::NumericalDegeneracy(format!(
            "dilation of dimension {} is generated by a subspace of dimension {}",
            report.dilation_dim, report.cyclic_rank
        )));
    }
    Ok(report)
}

/// Minimal Stinespring dilation on the quotient of `A ⊙ C^h` by the null
/// space of `⟨a⊗ξ, a'⊗ξ'⟩ = ⟨ξ, φ(a*a')ξ'⟩`.
pub fn minimal_stinespring(phi: &CPMap, tol: &Tolerance) -> Result<StinespringTriple> {
    let order: Vec<usize> = (0..phi.source.dim()).collect();
    minimal_stinespring_ordered(phi, &order, tol)
}

/// As [`minimal_stinespring`], with the formal generators `b_{order[i]} ⊗ e_s`
/// taken in the given order.
pub fn minimal_stinespring_ordered(
    phi: &CPMap,
    order: &[usize],
    tol: &Tolerance,
) -> Result<StinespringTriple> {
    Ok(dilate(phi, order, tol)?.0)
}

/// The dilation together with the quotient of `A ⊙ C^h` it lives on
/// (absent for the zero map).
pub(crate) fn dilate(
    phi: &CPMap,
    order: &[usize],
    tol: &Tolerance,
) -> Result<(StinespringTriple, Option<GramQuotient>)> {
    let a = &phi.source;
    let d = a.dim();
    let mut seen = vec![false; d];
    if order.len() != d || order.iter().any(|&i| i >= d || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::ParamOutOfRange("basis order must be a permutation".into()));
    }
    require_cp(phi, tol)?;
    let h = phi.target_dim;
    if phi.is_zero() {
        let pi = Representation::new(a, 0, vec![zeros(0, 0); d])?;
        return Ok((StinespringTriple { pi, v: zeros(0, h) }, None));
    }
    let gens: Vec<&CMatrix> = order.iter().map(|&i| &a.basis()[i]).collect();
    let mut g = zeros(d * h, d * h);
    for i in 0..d {
        for j in i..d {
            let block = phi.eval(&(gens[i].adjoint() * gens[j]));
            g.view_mut((i * h, j * h), (h, h)).copy_from(&block);
            if i != j {
                g.view_mut((j * h, i * h), (h, h)).copy_from(&block.adjoint());
            }
        }
    }
    let q = gram_quotient(&hermitian_part(&g), tol)?;
    let pg = &q.coords;
    let pstar = q.project.adjoint();
    let id_h = identity(h);
    let permuted = |v: DVector<C64>| DVector::from_iterator(d, order.iter().map(|&i| v[i]));
    let left_mult = |x: &CMatrix| {
        let mut m = zeros(d, d);
        for (j, gj) in gens.iter().enumerate() {
            m.set_column(j, &permuted(a.coords(&(x * *gj))));
        }
        m
    };
    let images = a.basis().iter().map(|b| pg * kron(&left_mult(b), &id_h) * &pstar).collect();
    let pi = Representation::new(a, q.quotient_dim, images)?;
    let unit = CMatrix::from_column_slice(d, 1, permuted(a.coords(&a.unit())).as_slice());
    let v = pg * kron(&unit, &id_h);
    let t = StinespringTriple { pi, v };
    require_triple(phi, &t, tol)?;
    Ok((t, Some(q)))
}

/// Unitary `U: H_1 → H_2` with `U V_1 = V_2` and `U π_1(·) U* = π_2`.
pub fn stinespring_uniqueness(
    t1: &StinespringTriple,
    t2: &StinespringTriple,
    tol: &Tolerance,
) -> Result<CMatrix> {
    if !t1.pi.algebra().same_span(t2.pi.algebra()) {
        return Err(Error::AlgebraMismatch("triples of different algebras".into()));
    }
    let basis = t1.pi.algebra().basis();
    let scale = basis.iter().map(|b| spectral_norm(&t1.compress(b))).fold(0.0, f64::max);
    let diff = basis
        .iter()
        .map(|b| spectral_norm(&(t1.compress(b) - t2.compress(b))))
        .fold(0.0, f64::max);
    if diff > tol.bound(scale) || t1.v.ncols() != t2.v.ncols() {
        return Err(Error::NotSameMap { residual: diff });
    }
    if t1.dilation_dim() != t2.dilation_dim() {
        return Err(Error::DimensionMismatch(format!(
            "minimal dilations of dimensions {} and {}",
            t1.dilation_dim(),
            t2.dilation_dim()
        )));
    }
    let g1 = t1.generators();
    // t2 is evaluated on t1's basis so the columns match.
    let (dd, h) = t2.v.shape();
    let mut g2 = zeros(dd, basis.len() * h);
    for (i, b) in basis.iter().enumerate() {
        g2.view_mut((0, i * h), (dd, h)).copy_from(&(t2.pi.eval(b) * &t2.v));
    }
    let u = &g2 * pinv(&g1, &Tolerance { rel: 1e-10, abs: 1e-14 });
    let n = t1.dilation_dim();
    let unitary = spectral_norm(&(u.adjoint() * &u - identity(n)));
    if unitary > tol.bound(1.0).max(1e-8) {
        return Err(Error::NumericalDegeneracy(format!(
            "matching the cyclic vectors gave a non-unitary map (residual {unitary:.3e})"
        )));
    }
    Ok(u)
}

/// Minimal dilations of both maps and a bimodule representation relating them.
#[derive(Debug, Clone)]
pub struct CpWitness {
    pub phi_triple: StinespringTriple,
    pub psi_triple: StinespringTriple,
    pub rep: BimoduleRep,
}

/// Decide equivalence of two CP maps through the supplied bimodule.
pub fn sme_cpmaps(phi: &CPMap, psi: &CPMap, x: &Bimodule, tol: &Tolerance) -> Result<Option<CpWitness>> {
    if phi.is_zero() || psi.is_zero() {
        return Err(Error::ZeroMap);
    }
    if !phi.source.same_span(x.left()) || !psi.source.same_span(x.right()) {
        return Err(Error::AlgebraMismatch("maps are not defined on the bimodule's algebras".into()));
    }
    let phi_triple = minimal_stinespring(phi, tol)?;
    let psi_triple = minimal_stinespring(psi, tol)?;
    let rep = sme_representations(&phi_triple.pi, &psi_triple.pi, x, tol)?;
    Ok(rep.map(|rep| CpWitness { phi_triple, psi_triple, rep }))
}

/// The CP map `τ` on the linking algebra with its dilation `(ρ, V_φ ⊕ V_ψ)`.
#[derive(Debug, Clone)]
pub struct LinkingCp {
    pub tau: CPMap,
    pub triple: StinespringTriple,
    pub report: TripleReport,
    /// `max_a ‖φ(a) − P_H τ(a ⊕ 0) P_H‖`.
    pub left_compression: f64,
    /// `max_b ‖ψ(b) − P_K τ(0 ⊕ b) P_K‖`.
    pub right_compression: f64,
    pub choi: ChoiCertificate,
}

pub fn linking_cp(
    phi: &CPMap,
    psi: &CPMap,
    w: &CpWitness,
    l: &LinkingAlgebra,
    tol: &Tolerance,
) -> Result<LinkingCp> {
    let rho = linking_rep(&w.rep, l)?.rho;
    let vs = direct_sum(&[&w.phi_triple.v, &w.psi_triple.v]);
    let (h, k) = (phi.target_dim, psi.target_dim);
    let tau = CPMap::from_fn(&l.algebra, h + k, |m| vs.adjoint() * rho.eval(m) * &vs);
    let triple = StinespringTriple { pi: rho, v: vs };
    let report = check_triple(&tau, &triple);
    let left_compression = phi
        .source
        .basis()
        .iter()
        .map(|a| {
            let t = tau.eval(&l.embed_left(a)).view((0, 0), (h, h)).into_owned();
            spectral_norm(&(phi.eval(a) - t))
        })
        .fold(0.0, f64::max);
    let right_compression = psi
        .source
        .basis()
        .iter()
        .map(|b| {
            let t = tau.eval(&l.embed_right(b)).view((h, h), (k, k)).into_owned();
            spectral_norm(&(psi.eval(b) - t))
        })
        .fold(0.0, f64::max);
    let choi = verify_cp(&tau, tol)?;
    Ok(LinkingCp { tau, triple, report, left_compression, right_compression, choi })
}

/// The triple `(π_φ, W̃* V_ψ)` for `ψ ∘ θ`.
#[derive(Debug, Clone)]
pub struct TransportedCp {
    pub map: CPMap,
    pub triple: StinespringTriple,
    pub report: TripleReport,
}

pub fn transport_cp(
    psi: &CPMap,
    psi_triple: &StinespringTriple,
    bgr: &BgrTransport,
    tol: &Tolerance,
) -> Result<TransportedCp> {
    let a = bgr.pi_a.algebra();
    let mut mismatch = 0.0_f64;
    for b in a.basis() {
        let lhs = psi_triple.pi.eval(&bgr.theta.eval(b));
        let rhs = &bgr.w_tilde * bgr.pi_a.eval(b) * bgr.w_tilde.adjoint();
        mismatch = mismatch.max(spectral_norm(&(lhs - rhs)));
    }
    if mismatch > tol.bound(1.0) {
        return Err(Error::IntertwinerMismatch { residual: mismatch });
    }
    let map = psi.precompose(&bgr.theta);
    let triple =
        StinespringTriple { pi: bgr.pi_a.clone(), v: bgr.w_tilde.adjoint() * &psi_triple.v };
    let report = check_triple(&map, &triple);
    Ok(TransportedCp { map, triple, report })
}

/// `φ ⊗ id_{M_m}` with the triple `(π_φ ⊗ id, V_φ ⊗ 1)` and the witness
/// relating `π_φ ⊗ id` to `π_φ`.
#[derive(Debug, Clone)]
pub struct CpStabilization {
    pub phi_s: CPMap,
    pub triple: StinespringTriple,
    pub report: TripleReport,
    pub base: StinespringTriple,
    pub witness: BimoduleRep,
}

pub fn stabilize_cp(phi: &CPMap, m: usize, tol: &Tolerance) -> Result<CpStabilization> {
    if m == 0 {
        return Err(Error::ParamOutOfRange("stabilization size must be at least 1".into()));
    }
    let base = minimal_stinespring(phi, tol)?;
    if base.dilation_dim() == 0 {
        return Err(Error::ZeroMap);
    }
    let n = phi.source.ambient_dim();
    let h = phi.target_dim;
    let stab = stabilize_rep(&base.pi, m)?;
    let a_s = stab.pi_s.algebra().clone();
    let phi_s = CPMap::from_fn(&a_s, h * m, |s| tensor_apply(s, n, m, h, |x| phi.eval(x)));
    let triple = StinespringTriple { pi: stab.pi_s, v: kron(&base.v, &identity(m)) };
    let report = check_triple(&phi_s, &triple);
    Ok(CpStabilization { phi_s, triple, report, base, witness: stab.witness })
}
