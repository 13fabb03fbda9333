//! Conditional expectations on unital inclusions, their compatibility with
//! an equivalence bimodule, and the induced equivalence of the CP maps
//! `π_A ∘ E^A` and `π_B ∘ E^B`.

use crate::algebra::Algebra;
use crate::bimodule::{verify_bimodule, Bimodule};
use crate::cpmap::{check_triple, dilate, sme_cpmaps, verify_cp, CPMap, StinespringTriple};
use crate::error::{Error, Result};
use crate::numerics::{
    gram_quotient, hermitian_part, identity, kron, spectral_norm, zeros, CMatrix, Tolerance,
    C64,
};
use crate::representation::{induce, verify_bimodule_rep, BimoduleRep, Representation};

/// A unital inclusion `A ⊆ C` of algebras on the same space.
#[derive(Debug, Clone)]
pub struct Inclusion {
    pub big: Algebra,
    pub small: Algebra,
}

impl Inclusion {
    pub fn new(big: &Algebra, small: &Algebra, tol: &Tolerance) -> Result<Self> {
        if big.ambient_dim() != small.ambient_dim() {
            return Err(Error::ShapeMismatch(format!(
                "inclusion of an algebra on C^{} into one on C^{}",
                small.ambient_dim(),
                big.ambient_dim()
            )));
        }
        let residual = small.basis().iter().map(|a| big.residual(a)).fold(0.0, f64::max);
        if residual > tol.rel.max(crate::numerics::SPAN_REL_TOL) {
            return Err(Error::StructureInvalid(format!(
                "subalgebra is not contained in the larger algebra (residual {residual:.3e})"
            )));
        }
        Ok(Inclusion { big: big.clone(), small: small.clone() })
    }
}

/// A linear map `E: C → A` stored by the images of `C`'s basis.
#[derive(Debug, Clone)]
pub struct ConditionalExpectation {
    pub inclusion: Inclusion,
    images: Vec<CMatrix>,
}

impl ConditionalExpectation {
    pub fn from_fn(inclusion: &Inclusion, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let images = inclusion.big.basis().iter().map(f).collect();
        ConditionalExpectation { inclusion: inclusion.clone(), images }
    }

    pub fn images(&self) -> &[CMatrix] {
        &self.images
    }

    pub fn eval(&self, c: &CMatrix) -> CMatrix {
        let n = self.inclusion.big.ambient_dim();
        let coords = self.inclusion.big.coords(c);
        self.images.iter().zip(coords.iter()).fold(zeros(n, n), |acc, (m, &w)| acc + m * w)
    }

    pub fn as_cpmap(&self) -> CPMap {
        CPMap::from_fn(&self.inclusion.big, self.inclusion.big.ambient_dim(), |c| self.eval(c))
    }

    /// `π ∘ E` for a representation `π` of the subalgebra.
    pub fn compose(&self, pi: &Representation) -> CPMap {
        CPMap::from_fn(&self.inclusion.big, pi.space_dim(), |c| pi.eval(&self.eval(c)))
    }
}

/// Check range, unitality, idempotence, the bimodule property and complete
/// positivity, in that order.
pub fn verify_expectation(
    inclusion: &Inclusion,
    images: Vec<CMatrix>,
    tol: &Tolerance,
) -> Result<ConditionalExpectation> {
    let (c, a) = (&inclusion.big, &inclusion.small);
    let n = c.ambient_dim();
    if images.len() != c.dim() || images.iter().any(|m| m.shape() != (n, n)) {
        return Err(Error::ShapeMismatch("expectation images do not match the algebra".into()));
    }
    let e = ConditionalExpectation { inclusion: inclusion.clone(), images };
    let limit = tol.bound(1.0);

    let range = e.images.iter().map(|m| a.residual(m) * m.norm()).fold(0.0, f64::max);
    if range > limit {
        return Err(Error::RangeEscapesA { residual: range });
    }
    let unit = spectral_norm(&(e.eval(&identity(n)) - identity(n)));
    if unit > limit {
        return Err(Error::NotUnitalExpectation { residual: unit });
    }
    let idem = a.basis().iter().map(|x| spectral_norm(&(e.eval(x) - x))).fold(0.0, f64::max);
    if idem > limit {
        return Err(Error::NotIdempotent { residual: idem });
    }
    let mut bimod = 0.0_f64;
    for x in a.basis() {
        for (i, y) in c.basis().iter().enumerate() {
            bimod = bimod.max(spectral_norm(&(e.eval(&(x * y)) - x * &e.images[i])));
            bimod = bimod.max(spectral_norm(&(e.eval(&(y * x)) - &e.images[i] * x)));
        }
    }
    if bimod > limit {
        return Err(Error::NotBimodular { residual: bimod });
    }
    let cert = verify_cp(&e.as_cpmap(), tol)?;
    if !cert.cp {
        return Err(Error::NotCp { min_eigenvalue: cert.min_eigenvalue });
    }
    Ok(e)
}

/// `out_ij = Σ_kl c_{(i,k),(j,l)} ρ_lk`: the slice map `id ⊗ tr(ρ ·)` for
/// `c` in `M_n ⊗ M_r` with `kron` ordering.
pub fn weighted_partial_trace(c: &CMatrix, n: usize, r: usize, rho: &CMatrix) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        let mut s = C64::new(0.0, 0.0);
        for k in 0..r {
            for l in 0..r {
                s += c[(i * r + k, j * r + l)] * rho[(l, k)];
            }
        }
        s
    })
}

/// `E(c) = (id ⊗ tr(ρ ·))(c) ⊗ 1` from `A_0 ⊗ M_r` onto `A_0 ⊗ 1`.
pub fn slice_expectation(a0: &Algebra, r: usize, rho: &CMatrix, tol: &Tolerance) -> Result<ConditionalExpectation> {
    let n = a0.ambient_dim();
    let inclusion = Inclusion::new(&a0.tensor_full(r), &a0.with_multiplicity(r), tol)?;
    let id_r = identity(r);
    let images = inclusion
        .big
        .basis()
        .iter()
        .map(|c| kron(&weighted_partial_trace(c, n, r, rho), &id_r))
        .collect();
    verify_expectation(&inclusion, images, tol)
}

/// Two expectations together with a `C–D` bimodule `Y` and an `A–B`
/// bimodule `X ⊆ Y`.
#[derive(Debug, Clone)]
pub struct ExpectationPair {
    pub e_a: ConditionalExpectation,
    pub e_b: ConditionalExpectation,
    pub y: Bimodule,
    pub x_sub: Bimodule,
}

impl ExpectationPair {
    /// Structural checks: `X ⊆ Y`, the algebras line up, `C·X` spans `Y`,
    /// and `E^B(x* z) = x* z ∈ B` on `X`.
    pub fn new(
        e_a: ConditionalExpectation,
        e_b: ConditionalExpectation,
        y: Bimodule,
        x_sub: Bimodule,
        tol: &Tolerance,
    ) -> Result<Self> {
        let bad = |s: &str| Err(Error::StructureInvalid(s.into()));
        if !e_a.inclusion.big.same_span(y.left()) || !e_b.inclusion.big.same_span(y.right()) {
            return bad("Y is not a bimodule over the larger algebras");
        }
        if !e_a.inclusion.small.same_span(x_sub.left())
            || !e_b.inclusion.small.same_span(x_sub.right())
        {
            return bad("X is not a bimodule over the smaller algebras");
        }
        let limit = tol.rel.max(crate::numerics::SPAN_REL_TOL);
        if x_sub.basis().iter().any(|x| y.residual(x) > limit) {
            return bad("X is not contained in Y");
        }
        let products: Vec<CMatrix> = y
            .left()
            .basis()
            .iter()
            .flat_map(|c| x_sub.basis().iter().map(move |x| c * x))
            .collect();
        let span = crate::numerics::MatrixSpan::spanned_by(y.rows(), y.cols(), &products);
        if span.dim() != y.dim() {
            return bad("C·X does not span Y");
        }
        let b = x_sub.right();
        for x in x_sub.basis() {
            for z in x_sub.basis() {
                let ip = Bimodule::right_inner(x, z);
                if b.residual(&ip) * ip.norm() > tol.bound(1.0) {
                    return bad("inner products of X leave B");
                }
                if spectral_norm(&(e_b.eval(&ip) - &ip)) > tol.bound(1.0) {
                    return bad("E^B does not fix the B-valued inner product on X");
                }
            }
        }
        Ok(ExpectationPair { e_a, e_b, y, x_sub })
    }

    /// `C = A_0 ⊗ M_r ⊇ A_0 ⊗ 1`, `D = B_0 ⊗ M_r ⊇ B_0 ⊗ 1`, `Y = X_0 ⊗ M_r`,
    /// `X = X_0 ⊗ 1`, with slice expectations for `rho_a` and `rho_b`.
    /// The pair is compatible when `rho_a = rho_b`.
    pub fn tensor(
        x0: &Bimodule,
        r: usize,
        rho_a: &CMatrix,
        rho_b: &CMatrix,
        tol: &Tolerance,
    ) -> Result<Self> {
        if r == 0 {
            return Err(Error::ParamOutOfRange("tensor factor must be at least 1".into()));
        }
        let e_a = slice_expectation(x0.left(), r, rho_a, tol)?;
        let e_b = slice_expectation(x0.right(), r, rho_b, tol)?;
        let mut y_items = Vec::new();
        for x in x0.basis() {
            for k in 0..r {
                for l in 0..r {
                    y_items.push(kron(x, &crate::numerics::matrix_unit(r, r, k, l)));
                }
            }
        }
        let y = verify_bimodule(&e_a.inclusion.big, &e_b.inclusion.big, &y_items, tol)?;
        let id_r = identity(r);
        let x_items: Vec<CMatrix> = x0.basis().iter().map(|x| kron(x, &id_r)).collect();
        let x_sub = verify_bimodule(&e_a.inclusion.small, &e_b.inclusion.small, &x_items, tol)?;
        ExpectationPair::new(e_a, e_b, y, x_sub, tol)
    }

    /// `C = A`, `D = B`, `Y = X`, both expectations the identity.
    pub fn trivial(x: &Bimodule, tol: &Tolerance) -> Result<Self> {
        let ia = Inclusion::new(x.left(), x.left(), tol)?;
        let ib = Inclusion::new(x.right(), x.right(), tol)?;
        let e_a = verify_expectation(&ia, x.left().basis().to_vec(), tol)?;
        let e_b = verify_expectation(&ib, x.right().basis().to_vec(), tol)?;
        ExpectationPair::new(e_a, e_b, x.clone(), x.clone(), tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmeExpectationVerdict {
    /// `max ‖⟨z, E^A(a) z_1⟩_B − E^B(⟨z, a z_1⟩_D)‖` over basis `z, z_1 ∈ X`, `a ∈ C`.
    pub residual: f64,
    pub pass: bool,
}

pub fn verify_sme_expectations(pair: &ExpectationPair, tol: &Tolerance) -> SmeExpectationVerdict {
    let xs = pair.x_sub.basis();
    let mut residual = 0.0_f64;
    for (ci, c) in pair.e_a.inclusion.big.basis().iter().enumerate() {
        let ec = &pair.e_a.images[ci];
        for z in xs {
            let za = z.adjoint();
            for z1 in xs {
                let lhs = &za * ec * z1;
                let rhs = pair.e_b.eval(&(&za * c * z1));
                residual = residual.max(spectral_norm(&(lhs - rhs)));
            }
        }
    }
    SmeExpectationVerdict { residual, pass: residual <= tol.bound(1.0) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageResult {
    pub stage: &'static str,
    pub residual: f64,
}

/// Every intermediate object of the pipeline, kept for reporting.
#[derive(Debug, Clone)]
pub struct RelPipeline {
    pub stages: Vec<StageResult>,
    /// `(π_D, V_D)` for `π_B ∘ E^B`.
    pub triple_d: StinespringTriple,
    /// `π_A` induced from `X` and `π_B`.
    pub pi_a: Representation,
    /// `(π_C, π_Y, π_D)` induced from `Y` and `π_D`.
    pub witness: BimoduleRep,
    /// `Φ: H_C → E` in orthonormal coordinates.
    pub phi: CMatrix,
    /// `Ψ: H_C' → E`.
    pub psi: CMatrix,
    /// `U = Φ* Ψ`.
    pub u: CMatrix,
    /// `(π_C, U V_C')` for `π_A ∘ E^A`.
    pub triple_c: StinespringTriple,
    pub cyclic_rank: usize,
    /// Whether `sme_cpmaps` run on its own also finds a witness.
    pub independent_witness: bool,
}

impl RelPipeline {
    pub fn residual(&self, stage: &str) -> Option<f64> {
        self.stages.iter().find(|s| s.stage == stage).map(|s| s.residual)
    }
}

fn unitary_residual(m: &CMatrix) -> f64 {
    let (r, c) = m.shape();
    let a = spectral_norm(&(m.adjoint() * m - identity(c)));
    let b = spectral_norm(&(m * m.adjoint() - identity(r)));
    a.max(b)
}

/// Gram matrix of formal vectors `v_i ⊗ e_s`, indexed `i * k + s`, with
/// blocks `block(i, j)`.
fn formal_gram(d: usize, k: usize, block: impl Fn(usize, usize) -> CMatrix) -> CMatrix {
    let mut g = zeros(d * k, d * k);
    for i in 0..d {
        for j in i..d {
            let b = block(i, j);
            g.view_mut((i * k, j * k), (k, k)).copy_from(&b);
            if i != j {
                g.view_mut((j * k, i * k), (k, k)).copy_from(&b.adjoint());
            }
        }
    }
    hermitian_part(&g)
}

struct Checker<'a> {
    stages: Vec<StageResult>,
    limit: f64,
    tol: &'a Tolerance,
}

impl Checker<'_> {
    fn record(&mut self, stage: &'static str, residual: f64) -> Result<()> {
        self.stages.push(StageResult { stage, residual });
        if residual.is_nan() || residual > self.limit {
            return Err(Error::StageFailure { stage, residual });
        }
        Ok(())
    }
}

/// Run the construction that turns compatible expectations and a
/// representation `π_B` into equivalent CP maps `π_A ∘ E^A ~ π_B ∘ E^B`,
/// checking each intermediate identity.
pub fn rel_pipeline(pair: &ExpectationPair, pi_b: &Representation, tol: &Tolerance) -> Result<RelPipeline> {
    let pre = verify_sme_expectations(pair, tol);
    if !pre.pass {
        return Err(Error::StageFailure { stage: "precondition", residual: pre.residual });
    }
    if !pi_b.algebra().same_span(pair.x_sub.right()) {
        return Err(Error::AlgebraMismatch("representation is not of B".into()));
    }
    let mut ck = Checker { stages: Vec::new(), limit: tol.bound(1.0), tol };
    let k = pi_b.space_dim();
    let y = &pair.y;
    let d_alg = y.right();
    let c_alg = y.left();

    // K_D and V_D for π_B ∘ E^B.
    let phi_b = pair.e_b.compose(pi_b);
    let (triple_d, q_d) = dilate(&phi_b, &(0..d_alg.dim()).collect::<Vec<_>>(), tol)?;
    let q_d = q_d.ok_or(Error::ZeroMap)?;
    let mut expected = zeros(k, d_alg.dim() * k);
    for (i, di) in d_alg.basis().iter().enumerate() {
        expected.view_mut((0, i * k), (k, k)).copy_from(&phi_b.eval(di));
    }
    let vd_res = spectral_norm(&(triple_d.v.adjoint() * &q_d.coords - expected));
    ck.record("kd-dilation", vd_res)?;

    // Induced representations of A and C.
    let ind_a = induce(&pair.x_sub, pi_b, tol)?;
    let ind_c = induce(y, &triple_d.pi, tol)?;
    let va = verify_bimodule_rep(&ind_a.rep, tol)?;
    let vc = verify_bimodule_rep(&ind_c.rep, tol)?;
    ck.record("induce", va.max_residual().max(vc.max_residual()))?;
    let pi_a = ind_a.rep.pi_a.clone();
    let pi_c = ind_c.rep.pi_a.clone();
    let h_a = pi_a.space_dim();
    let kd = triple_d.dilation_dim();

    // E = Y_B ⊗_B K_B.
    let ys = y.basis();
    let g_e = formal_gram(ys.len(), k, |i, j| {
        pi_b.eval(&pair.e_b.eval(&Bimodule::right_inner(&ys[i], &ys[j])))
    });
    let q_e = gram_quotient(&g_e, tol)?;

    // Φ(y ⊗ (d ⊗ ξ)) = (y d) ⊗ ξ.
    let p_d_star = q_d.project.adjoint();
    let dy = ys.len();
    let mut f = zeros(dy * k, dy * kd);
    for (j, yj) in ys.iter().enumerate() {
        for (i, di) in d_alg.basis().iter().enumerate() {
            let cl = y.coords(&(yj * di));
            for l in 0..dy {
                if cl[l].norm() == 0.0 {
                    continue;
                }
                for s in 0..k {
                    for r in 0..kd {
                        f[(l * k + s, j * kd + r)] += cl[l] * p_d_star[(i * k + s, r)];
                    }
                }
            }
        }
    }
    let phi = &q_e.coords * f * ind_c.quotient.project.adjoint();
    ck.record("phi-unitary", unitary_residual(&phi))?;

    // (π_C', V_C') for π_A ∘ E^A, and Ψ(c ⊗ (x ⊗ ξ)) = (c x) ⊗ ξ.
    let phi_a = pair.e_a.compose(&pi_a);
    let (triple_cp, q_cp) = dilate(&phi_a, &(0..c_alg.dim()).collect::<Vec<_>>(), tol)?;
    let q_cp = q_cp.ok_or(Error::ZeroMap)?;
    let p_a_star = ind_a.quotient.project.adjoint();
    let xs = pair.x_sub.basis();
    let mut f2 = zeros(dy * k, c_alg.dim() * h_a);
    for (i, ci) in c_alg.basis().iter().enumerate() {
        for (j, xj) in xs.iter().enumerate() {
            let cl = y.coords(&(ci * xj));
            for l in 0..dy {
                if cl[l].norm() == 0.0 {
                    continue;
                }
                for s in 0..k {
                    for t in 0..h_a {
                        f2[(l * k + s, i * h_a + t)] += cl[l] * p_a_star[(j * k + s, t)];
                    }
                }
            }
        }
    }
    let psi = &q_e.coords * f2 * q_cp.project.adjoint();
    ck.record("psi-unitary", unitary_residual(&psi))?;

    // U = Φ* Ψ intertwines π_C' and π_C.
    let u = phi.adjoint() * &psi;
    let mut inter = 0.0_f64;
    for (i, c) in c_alg.basis().iter().enumerate() {
        let lhs = pi_c.images()[i].clone() * &u;
        let rhs = &u * triple_cp.pi.eval(c);
        inter = inter.max(spectral_norm(&(lhs - rhs)));
    }
    ck.record("intertwining", inter)?;

    // (π_C, U V_C') is a minimal triple for π_A ∘ E^A.
    let triple_c = StinespringTriple { pi: pi_c.clone(), v: &u * &triple_cp.v };
    let report = check_triple(&phi_a, &triple_c);
    ck.record("compressed-dilation", report.dilation)?;
    ck.record("minimality", (report.dilation_dim - report.cyclic_rank.min(report.dilation_dim)) as f64)?;

    // The Y-representation (π_C, π_Y, π_D) relates the two dilations.
    let witness = ind_c.rep.clone();
    let wv = verify_bimodule_rep(&witness, ck.tol)?;
    ck.record("witness", if wv.pass { wv.max_residual() } else { f64::INFINITY })?;
    let independent_witness = sme_cpmaps(&phi_a, &phi_b, y, tol)?.is_some();
    ck.record("independent-witness", if independent_witness { 0.0 } else { f64::INFINITY })?;

    Ok(RelPipeline {
        stages: ck.stages,
        triple_d,
        pi_a,
        witness,
        phi,
        psi,
        u,
        triple_c,
        cyclic_rank: report.cyclic_rank,
        independent_witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rel10Verdict {
    /// `‖V_C* V_C − I‖`.
    pub isometry: f64,
    /// `max_c ‖π_A(E^A(c)) − V_C* π_C(c) V_C‖`.
    pub compression: f64,
    /// `max ‖E^B(⟨c x, x_1⟩_D) − ⟨E^A(c) x, x_1⟩_B‖`.
    pub bimodule: f64,
    pub compression_holds: bool,
    pub bimodule_holds: bool,
}

impl Rel10Verdict {
    pub fn holds(&self) -> bool {
        self.compression_holds && self.bimodule_holds
    }
}

/// The converse direction: with `V_C(x ⊗ ξ) = x ⊗ (1 ⊗ ξ)`, test whether
/// `π_A ∘ E^A` is the compression of `π_C` and whether the expectations
/// satisfy the bimodule identity.
pub fn rel10_converse(pair: &ExpectationPair, pi_b: &Representation, tol: &Tolerance) -> Result<Rel10Verdict> {
    let kernel_dim = pi_b.kernel_dim(tol);
    if kernel_dim > 0 {
        return Err(Error::NotFaithful { kernel_dim });
    }
    let y = &pair.y;
    let k = pi_b.space_dim();
    let phi_b = pair.e_b.compose(pi_b);
    let (triple_d, _) = dilate(&phi_b, &(0..y.right().dim()).collect::<Vec<_>>(), tol)?;
    let kd = triple_d.dilation_dim();
    let ind_a = induce(&pair.x_sub, pi_b, tol)?;
    let ind_c = induce(y, &triple_d.pi, tol)?;
    let h_a = ind_a.rep.pi_a.space_dim();
    let xs = pair.x_sub.basis();
    let dy = y.dim();

    let mut f = zeros(dy * kd, xs.len() * k);
    for (j, xj) in xs.iter().enumerate() {
        let cl = y.coords(xj);
        for l in 0..dy {
            for r in 0..kd {
                for s in 0..k {
                    f[(l * kd + r, j * k + s)] = cl[l] * triple_d.v[(r, s)];
                }
            }
        }
    }
    let v_c = &ind_c.quotient.coords * f * ind_a.quotient.project.adjoint();
    let isometry = spectral_norm(&(v_c.adjoint() * &v_c - identity(h_a)));

    let pi_a = &ind_a.rep.pi_a;
    let pi_c = &ind_c.rep.pi_a;
    let compression = pair
        .e_a
        .inclusion
        .big
        .basis()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let lhs = pi_a.eval(&pair.e_a.images[i]);
            spectral_norm(&(lhs - v_c.adjoint() * pi_c.eval(c) * &v_c))
        })
        .fold(0.0, f64::max);

    let mut bimodule = 0.0_f64;
    for (i, c) in pair.e_a.inclusion.big.basis().iter().enumerate() {
        for x in xs {
            let cx = c * x;
            let ex = &pair.e_a.images[i] * x;
            for x1 in xs {
                let lhs = pair.e_b.eval(&Bimodule::right_inner(&cx, x1));
                let rhs = Bimodule::right_inner(&ex, x1);
                bimodule = bimodule.max(spectral_norm(&(lhs - rhs)));
            }
        }
    }
    let limit = tol.bound(1.0);
    Ok(Rel10Verdict {
        isometry,
        compression,
        bimodule,
        compression_holds: isometry <= limit && compression <= limit,
        bimodule_holds: bimodule <= limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{matrix_unit, real};
    use crate::random;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn columns() -> Bimodule {
        let items = [matrix_unit(2, 1, 0, 0), matrix_unit(2, 1, 1, 0)];
        verify_bimodule(&Algebra::full(2), &Algebra::scalars(1), &items, &tol()).unwrap()
    }

    #[test]
    fn expectation_examples() {
        let m2 = Algebra::full(2);
        let half = identity(2) * real(0.5);
        slice_expectation(&m2, 2, &half, &tol()).unwrap();

        let inc = Inclusion::new(&m2, &Algebra::diagonal(2), &tol()).unwrap();
        let images = m2.basis().iter().map(|c| CMatrix::from_diagonal(&c.diagonal())).collect();
        verify_expectation(&inc, images, &tol()).unwrap();

        let inc = Inclusion::new(&m2.tensor_full(2), &m2.with_multiplicity(2), &tol()).unwrap();
        let images = inc
            .big
            .basis()
            .iter()
            .map(|c| kron(&weighted_partial_trace(c, 2, 2, &half).transpose(), &identity(2)))
            .collect();
        let err = verify_expectation(&inc, images, &tol()).unwrap_err();
        assert!(matches!(err, Error::NotIdempotent { .. }), "{err:?}");

        let images = inc.big.basis().to_vec();
        assert!(matches!(verify_expectation(&inc, images, &tol()), Err(Error::RangeEscapesA { .. })));
    }

    fn tensor_pair(seed: u64, compatible: bool) -> ExpectationPair {
        let mut rng = random::rng(seed);
        let rho = random::density(&mut rng, 2);
        let rho_a = if compatible { rho.clone() } else { random::density(&mut rng, 2) };
        ExpectationPair::tensor(&columns(), 2, &rho_a, &rho, &tol()).unwrap()
    }

    #[test]
    fn sme_expectation_examples() {
        assert!(verify_sme_expectations(&tensor_pair(1, true), &tol()).pass);
        let v = verify_sme_expectations(&tensor_pair(1, false), &tol());
        assert!(!v.pass && v.residual > 1e-3);
        let trivial = ExpectationPair::trivial(&Bimodule::trivial(&Algebra::full(2)), &tol()).unwrap();
        let v = verify_sme_expectations(&trivial, &tol());
        assert!(v.pass && v.residual < 1e-14);
    }

    #[test]
    fn structure_checks() {
        let p = tensor_pair(2, true);
        // X not inside Y.
        let other = Bimodule::trivial(p.x_sub.left());
        let err = ExpectationPair::new(p.e_a.clone(), p.e_b.clone(), p.y.clone(), other, &tol());
        assert!(matches!(err, Err(Error::StructureInvalid(_))));
    }

    #[test]
    fn pipeline_trivial_pair() {
        let m2 = Algebra::full(2);
        let pair = ExpectationPair::trivial(&Bimodule::trivial(&m2), &tol()).unwrap();
        let run = rel_pipeline(&pair, &Representation::identity(&m2), &tol()).unwrap();
        assert!(unitary_residual(&run.u) < 1e-12);
        assert!(run.independent_witness);
        for s in &run.stages {
            assert!(s.residual < 1e-10, "{s:?}");
        }
    }

    #[test]
    fn pipeline_tensor_pair() {
        for seed in 0..3 {
            let pair = tensor_pair(seed, true);
            let pi_b = Representation::identity(pair.x_sub.right());
            let run = rel_pipeline(&pair, &pi_b, &tol()).unwrap();
            assert!(run.residual("phi-unitary").unwrap() < 1e-8);
            assert!(run.residual("psi-unitary").unwrap() < 1e-8);
            assert!(run.residual("intertwining").unwrap() < 1e-8);
            assert_eq!(run.cyclic_rank, run.triple_c.dilation_dim());
            assert!(verify_bimodule_rep(&run.witness, &tol()).unwrap().pass);
        }
    }

    #[test]
    fn pipeline_refuses_incompatible_pair() {
        let pair = tensor_pair(3, false);
        let pi_b = Representation::identity(pair.x_sub.right());
        let err = rel_pipeline(&pair, &pi_b, &tol()).unwrap_err();
        assert!(matches!(err, Error::StageFailure { stage: "precondition", .. }));
    }

    #[test]
    fn converse_examples() {
        let pair = tensor_pair(4, true);
        let pi_b = Representation::identity(pair.x_sub.right());
        let v = rel10_converse(&pair, &pi_b, &tol()).unwrap();
        assert!(v.holds(), "{v:?}");
        assert!(v.isometry < 1e-9);

        let bad = tensor_pair(4, false);
        let v = rel10_converse(&bad, &pi_b, &tol()).unwrap();
        assert!(!v.compression_holds && v.compression > 1e-3, "{v:?}");

        let m2 = Algebra::full(2);
        let triv = ExpectationPair::trivial(&Bimodule::trivial(&m2), &tol()).unwrap();
        let v = rel10_converse(&triv, &Representation::identity(&m2), &tol()).unwrap();
        assert!(v.holds() && v.compression < 1e-12 && v.bimodule < 1e-12);

        let c2 = Algebra::diagonal(2);
        let pair = ExpectationPair::trivial(&Bimodule::trivial(&c2), &tol()).unwrap();
        let lossy = Representation::from_fn(&c2, 1, |b| CMatrix::from_element(1, 1, b[(0, 0)]));
        assert!(matches!(rel10_converse(&pair, &lossy, &tol()), Err(Error::NotFaithful { kernel_dim: 1 })));
    }
}
