//! Representations, bimodule representations and the constructions that
//! move representations across an equivalence bimodule.

use nalgebra::DVector;

use crate::algebra::Algebra;
use crate::bimodule::{dual, interior_tensor, left_basis, Bimodule, LinkingAlgebra};
use crate::error::{Error, Result};
use crate::numerics::{
    gram_quotient, identity, kron, matrix_unit, polar_partial_isometry, range_basis,
    rank, spectral_norm, vectorize, zeros, CMatrix, GramQuotient, Tolerance, C64,
};
use crate::random;

/// A linear map from an algebra into `M_h`, stored by the images of the
/// algebra's basis. A verified one is a unital *-homomorphism.
#[derive(Debug, Clone)]
pub struct Representation {
    algebra: Algebra,
    space_dim: usize,
    images: Vec<CMatrix>,
}

impl Representation {
    /// Wrap basis images after a shape check.
    pub fn new(algebra: &Algebra, space_dim: usize, images: Vec<CMatrix>) -> Result<Self> {
        if images.len() != algebra.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} images for an algebra of dimension {}",
                images.len(),
                algebra.dim()
            )));
        }
        for m in &images {
            if m.shape() != (space_dim, space_dim) {
                return Err(Error::ShapeMismatch(format!(
                    "image of shape {:?} on a space of dimension {space_dim}",
                    m.shape()
                )));
            }
            crate::numerics::ensure_finite(m)?;
        }
        Ok(Representation { algebra: algebra.clone(), space_dim, images })
    }

    pub fn from_fn(algebra: &Algebra, space_dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let images = algebra.basis().iter().map(f).collect();
        Representation { algebra: algebra.clone(), space_dim, images }
    }

    /// The defining representation `a ↦ a` on `C^N`.
    pub fn identity(algebra: &Algebra) -> Self {
        Representation::from_fn(algebra, algebra.ambient_dim(), |b| b.clone())
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn images(&self) -> &[CMatrix] {
        &self.images
    }

    pub fn eval_coords(&self, coords: &DVector<C64>) -> CMatrix {
        self.images
            .iter()
            .zip(coords.iter())
            .fold(zeros(self.space_dim, self.space_dim), |acc, (m, &c)| acc + m * c)
    }

    pub fn eval(&self, x: &CMatrix) -> CMatrix {
        self.eval_coords(&self.algebra.coords(x))
    }

    /// `π ⊕ σ` on `H ⊕ K`.
    pub fn direct_sum(&self, other: &Representation) -> Result<Representation> {
        if !self.algebra.same_span(&other.algebra) {
            return Err(Error::AlgebraMismatch("direct sum of representations".into()));
        }
        let n = self.space_dim + other.space_dim;
        Ok(Representation::from_fn(&self.algebra, n, |b| {
            crate::numerics::direct_sum(&[&self.eval(b), &other.eval(b)])
        }))
    }

    /// `π ⊗ 1_mu`.
    pub fn ampliate(&self, mu: usize) -> Representation {
        let id = identity(mu);
        let images = self.images.iter().map(|m| kron(m, &id)).collect();
        Representation { algebra: self.algebra.clone(), space_dim: self.space_dim * mu, images }
    }

    /// `u π(·) u*` for a unitary `u`.
    pub fn conjugate(&self, u: &CMatrix) -> Representation {
        let ua = u.adjoint();
        let images = self.images.iter().map(|m| u * m * &ua).collect();
        Representation { algebra: self.algebra.clone(), space_dim: u.nrows(), images }
    }

    /// Dimension of the kernel of `a ↦ π(a)`.
    pub fn kernel_dim(&self, tol: &Tolerance) -> usize {
        let d = self.images.len();
        let h2 = self.space_dim * self.space_dim;
        if h2 == 0 {
            return d;
        }
        let mut m = zeros(h2, d);
        for (j, img) in self.images.iter().enumerate() {
            m.set_column(j, &vectorize(img));
        }
        d - rank(&m, tol)
    }
}

/// Largest residual of the homomorphism checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentationReport {
    pub unital: f64,
    pub star: f64,
    pub multiplicative: f64,
}

impl Representation {
    pub fn report(&self) -> RepresentationReport {
        let basis = self.algebra.basis();
        let unital = spectral_norm(&(self.eval(&self.algebra.unit()) - identity(self.space_dim)));
        let mut star = 0.0_f64;
        let mut multiplicative = 0.0_f64;
        for (i, bi) in basis.iter().enumerate() {
            star = star.max(spectral_norm(&(self.eval(&bi.adjoint()) - self.images[i].adjoint())));
            for (j, bj) in basis.iter().enumerate() {
                let lhs = self.eval(&(bi * bj));
                let rhs = &self.images[i] * &self.images[j];
                multiplicative = multiplicative.max(spectral_norm(&(lhs - rhs)));
            }
        }
        RepresentationReport { unital, star, multiplicative }
    }
}

/// Check that basis images define a unital *-homomorphism.
pub fn verify_representation(
    algebra: &Algebra,
    space_dim: usize,
    images: Vec<CMatrix>,
    tol: &Tolerance,
) -> Result<Representation> {
    if space_dim == 0 {
        return Err(Error::ZeroDimensional);
    }
    let r = Representation::new(algebra, space_dim, images)?;
    check_representation(&r, tol)?;
    Ok(r)
}

pub fn check_representation(r: &Representation, tol: &Tolerance) -> Result<()> {
    if r.space_dim == 0 {
        return Err(Error::ZeroDimensional);
    }
    let report = r.report();
    let limit = tol.bound(0.0);
    if report.unital > limit {
        return Err(Error::NotUnital { residual: report.unital });
    }
    if report.star > limit {
        return Err(Error::NotStar { residual: report.star });
    }
    if report.multiplicative > limit {
        return Err(Error::NotMultiplicative { residual: report.multiplicative });
    }
    Ok(())
}

/// Multiplicity of each simple summand: `rank π(z_k) / n_k`.
pub fn multiplicities(r: &Representation) -> Result<Vec<usize>> {
    let s = r.algebra.structure()?;
    Ok(s.blocks
        .iter()
        .map(|b| {
            let t = r.eval(&b.central_projection).trace().re;
            (t / b.size as f64).round().max(0.0) as usize
        })
        .collect())
}

/// A unitary `u` with `r2 = u r1(·) u*`, when the two are equivalent.
pub fn unitary_equivalence(
    r1: &Representation,
    r2: &Representation,
    tol: &Tolerance,
) -> Result<Option<CMatrix>> {
    if !r1.algebra.same_span(&r2.algebra) {
        return Err(Error::AlgebraMismatch("unitary equivalence needs a common algebra".into()));
    }
    let h = r1.space_dim;
    if h != r2.space_dim || multiplicities(r1)? != multiplicities(r2)? {
        return Ok(None);
    }
    if h == 0 {
        return Ok(Some(zeros(0, 0)));
    }
    let s = r1.algebra.structure()?;
    let proj_tol = Tolerance { rel: 1e-6, abs: 1e-9 };
    let mut u1 = zeros(h, h);
    let mut u2 = zeros(h, h);
    let mut col = 0;
    for block in &s.blocks {
        let e11 = block.unit(0, 0);
        let f = range_basis(&r1.eval(e11), &proj_tol);
        let g = range_basis(&r2.eval(e11), &proj_tol);
        if f.ncols() != g.ncols() {
            return Ok(None);
        }
        for j in 0..block.size {
            let ej1 = block.unit(j, 0);
            let a = r1.eval(ej1) * &f;
            let b = r2.eval(ej1) * &g;
            for s in 0..f.ncols() {
                if col >= h {
                    return Ok(None);
                }
                u1.set_column(col, &a.column(s));
                u2.set_column(col, &b.column(s));
                col += 1;
            }
        }
    }
    if col != h {
        return Ok(None);
    }
    let u = &u2 * u1.adjoint();
    let limit = tol.bound(0.0).max(1e-9);
    let unitary = spectral_norm(&(u.adjoint() * &u - identity(h)));
    let mut intertwine = 0.0_f64;
    for (i, img) in r1.images.iter().enumerate() {
        let target = r2.eval(&r1.algebra.basis()[i]);
        intertwine = intertwine.max(spectral_norm(&(&u * img - target * &u)));
    }
    if unitary > limit || intertwine > limit {
        return Ok(None);
    }
    Ok(Some(u))
}

/// A representation `(π_A, π_X, π_B)` of an equivalence bimodule on `(H, K)`;
/// `π_X(x)` maps `K` to `H`.
#[derive(Debug, Clone)]
pub struct BimoduleRep {
    pub pi_a: Representation,
    pub pi_b: Representation,
    pub module: Bimodule,
    /// `π_X` on the basis of `module`, each of shape `dim H × dim K`.
    pub images: Vec<CMatrix>,
}

impl BimoduleRep {
    pub fn eval(&self, x: &CMatrix) -> CMatrix {
        let c = self.module.coords(x);
        self.images
            .iter()
            .zip(c.iter())
            .fold(zeros(self.pi_a.space_dim, self.pi_b.space_dim), |acc, (m, &s)| acc + m * s)
    }
}

/// Residuals of the three defining conditions; the action condition is
/// checked separately for the two sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BimoduleRepVerdict {
    pub left_inner: f64,
    pub right_inner: f64,
    pub left_action: f64,
    pub right_action: f64,
    pub pass: bool,
}

impl BimoduleRepVerdict {
    pub fn max_residual(&self) -> f64 {
        self.left_inner.max(self.right_inner).max(self.left_action).max(self.right_action)
    }
}

pub fn verify_bimodule_rep(b: &BimoduleRep, tol: &Tolerance) -> Result<BimoduleRepVerdict> {
    let (h, k) = (b.pi_a.space_dim, b.pi_b.space_dim);
    if b.images.len() != b.module.dim() {
        return Err(Error::ShapeMismatch(format!(
            "{} images for a bimodule of dimension {}",
            b.images.len(),
            b.module.dim()
        )));
    }
    if let Some(m) = b.images.iter().find(|m| m.shape() != (h, k)) {
        return Err(Error::ShapeMismatch(format!(
            "bimodule image of shape {:?}, expected {:?}",
            m.shape(),
            (h, k)
        )));
    }
    if b.pi_a.algebra.ambient_dim() != b.module.rows()
        || b.pi_b.algebra.ambient_dim() != b.module.cols()
    {
        return Err(Error::ShapeMismatch("representations do not act on the bimodule".into()));
    }
    let basis = b.module.basis();
    let mut left_inner = 0.0_f64;
    let mut right_inner = 0.0_f64;
    for (i, x) in basis.iter().enumerate() {
        for (j, y) in basis.iter().enumerate() {
            let (px, py) = (&b.images[i], &b.images[j]);
            let l = px * py.adjoint() - b.pi_a.eval(&Bimodule::left_inner(x, y));
            left_inner = left_inner.max(spectral_norm(&l));
            let r = px.adjoint() * py - b.pi_b.eval(&Bimodule::right_inner(x, y));
            right_inner = right_inner.max(spectral_norm(&r));
        }
    }
    let mut left_action = 0.0_f64;
    for (ai, a) in b.module.left().basis().iter().enumerate() {
        for (i, x) in basis.iter().enumerate() {
            let d = b.eval(&(a * x)) - &b.pi_a.images[ai] * &b.images[i];
            left_action = left_action.max(spectral_norm(&d));
        }
    }
    let mut right_action = 0.0_f64;
    for (bi, y) in b.module.right().basis().iter().enumerate() {
        for (i, x) in basis.iter().enumerate() {
            let d = b.eval(&(x * y)) - &b.images[i] * &b.pi_b.images[bi];
            right_action = right_action.max(spectral_norm(&d));
        }
    }
    let limit = tol.bound(0.0);
    let pass = [left_inner, right_inner, left_action, right_action].iter().all(|&r| r <= limit);
    Ok(BimoduleRepVerdict { left_inner, right_inner, left_action, right_action, pass })
}

/// Output of [`induce`]: the induced representation of the left algebra on
/// `X ⊗_B K`, the canonical `π_X(x)ξ = [x ⊗ ξ]`, and the quotient used.
#[derive(Debug, Clone)]
pub struct Induced {
    pub rep: BimoduleRep,
    pub quotient: GramQuotient,
}

impl Induced {
    pub fn pi_a(&self) -> &Representation {
        &self.rep.pi_a
    }
}

/// Induce a representation of `x.left()` from `pi_b` along `x`.
///
/// Formal vectors `x_i ⊗ e_s` are indexed `i * k + s` with Gram entries
/// `π_B(x_i* x_j)_{st}`.
pub fn induce(x: &Bimodule, pi_b: &Representation, tol: &Tolerance) -> Result<Induced> {
    if !pi_b.algebra.same_span(x.right()) {
        return Err(Error::AlgebraMismatch("representation is not of the right algebra".into()));
    }
    let d = x.dim();
    let k = pi_b.space_dim;
    let basis = x.basis();
    let mut g = zeros(d * k, d * k);
    for i in 0..d {
        for j in i..d {
            let block = pi_b.eval(&Bimodule::right_inner(&basis[i], &basis[j]));
            g.view_mut((i * k, j * k), (k, k)).copy_from(&block);
            if j != i {
                g.view_mut((j * k, i * k), (k, k)).copy_from(&block.adjoint());
            }
        }
    }
    let quotient = gram_quotient(&crate::numerics::hermitian_part(&g), tol)?;
    let r = quotient.quotient_dim;
    let pg = &quotient.coords;
    let pstar = quotient.project.adjoint();
    let id_k = identity(k);
    let images_a = x
        .left()
        .basis()
        .iter()
        .map(|a| pg * kron(&x.left_action_matrix(a), &id_k) * &pstar)
        .collect();
    let pi_a = Representation { algebra: x.left().clone(), space_dim: r, images: images_a };
    let images_x = (0..d).map(|i| pg.columns(i * k, k).into_owned()).collect();
    Ok(Induced {
        rep: BimoduleRep { pi_a, pi_b: pi_b.clone(), module: x.clone(), images: images_x },
        quotient,
    })
}

/// Decide whether `pi_a` and `pi_b` are strongly Morita equivalent through
/// the given bimodule, and return a verified witness if they are.
pub fn sme_representations(
    pi_a: &Representation,
    pi_b: &Representation,
    x: &Bimodule,
    tol: &Tolerance,
) -> Result<Option<BimoduleRep>> {
    if !pi_a.algebra.same_span(x.left()) {
        return Err(Error::AlgebraMismatch("representation is not of the left algebra".into()));
    }
    let induced = induce(x, pi_b, tol)?;
    let Some(u) = unitary_equivalence(induced.pi_a(), pi_a, tol)? else {
        return Ok(None);
    };
    let images = induced.rep.images.iter().map(|m| &u * m).collect();
    let witness =
        BimoduleRep { pi_a: pi_a.clone(), pi_b: pi_b.clone(), module: x.clone(), images };
    let verdict = verify_bimodule_rep(&witness, tol)?;
    Ok(verdict.pass.then_some(witness))
}

/// `π_{X_0}(x) = π(x)` on the trivial bimodule.
pub fn reflexivity_witness(pi: &Representation) -> BimoduleRep {
    let module = Bimodule::trivial(&pi.algebra);
    let images = module.basis().iter().map(|x| pi.eval(x)).collect();
    BimoduleRep { pi_a: pi.clone(), pi_b: pi.clone(), module, images }
}

/// `π̃(x̃) = π_X(x)*` on the dual bimodule.
pub fn symmetry_witness(b: &BimoduleRep) -> BimoduleRep {
    let module = dual(&b.module);
    let images = module.basis().iter().map(|d| b.eval(&d.adjoint()).adjoint()).collect();
    BimoduleRep { pi_a: b.pi_b.clone(), pi_b: b.pi_a.clone(), module, images }
}

/// `π_{X⊗Y}(x y) = π_X(x) π_Y(y)` on the product span, evaluated through a
/// frame of `X` so that no linear solve is needed.
pub fn transitivity_witness(b1: &BimoduleRep, b2: &BimoduleRep, tol: &Tolerance) -> Result<BimoduleRep> {
    let (k1, k2) = (b1.pi_b.space_dim, b2.pi_a.space_dim);
    if k1 != k2 {
        return Err(Error::DimensionMismatch(format!(
            "middle representations act on dimensions {k1} and {k2}"
        )));
    }
    let mismatch = b1
        .pi_b
        .algebra
        .basis()
        .iter()
        .map(|b| spectral_norm(&(b1.pi_b.eval(b) - b2.pi_a.eval(b))))
        .fold(0.0, f64::max);
    if mismatch > tol.bound(1.0).max(1e-9) {
        return Err(Error::IntertwinerMismatch { residual: mismatch });
    }
    let module = interior_tensor(&b1.module, &b2.module)?;
    // z = Σ_j u_j (u_j* z) with Σ_j u_j u_j* = 1, and u_j* z ∈ Y.
    let us: Vec<CMatrix> =
        left_basis(&dual(&b1.module), tol)?.vectors.iter().map(|v| v.adjoint()).collect();
    let (h, l) = (b1.pi_a.space_dim, b2.pi_b.space_dim);
    let images = module
        .basis()
        .iter()
        .map(|z| {
            us.iter().fold(zeros(h, l), |acc, u| acc + b1.eval(u) * b2.eval(&(u.adjoint() * z)))
        })
        .collect();
    Ok(BimoduleRep { pi_a: b1.pi_a.clone(), pi_b: b2.pi_b.clone(), module, images })
}

/// Witness from a unitary equivalence `pi2 = u pi1(·) u*`: `π_{X_0}(x) = π_1(x) u*`.
pub fn unitary_witness(pi1: &Representation, pi2: &Representation, u: &CMatrix) -> BimoduleRep {
    let module = Bimodule::trivial(&pi1.algebra);
    let ua = u.adjoint();
    let images = module.basis().iter().map(|x| pi1.eval(x) * &ua).collect();
    BimoduleRep { pi_a: pi1.clone(), pi_b: pi2.clone(), module, images }
}

/// The representation `ρ` of the linking algebra on `H ⊕ K`, together with
/// the witness that `ρ` is equivalent to `π_A` through `Y = p L_X`.
#[derive(Debug, Clone)]
pub struct LinkingRep {
    pub rho: Representation,
    pub witness: BimoduleRep,
}

pub fn linking_rep(b: &BimoduleRep, l: &LinkingAlgebra) -> Result<LinkingRep> {
    let (p, q) = l.corner_dims();
    if (p, q) != (b.module.rows(), b.module.cols()) {
        return Err(Error::ShapeMismatch("linking algebra does not match the bimodule".into()));
    }
    let (h, k) = (b.pi_a.space_dim, b.pi_b.space_dim);
    let rho = Representation::from_fn(&l.algebra, h + k, |m| {
        let (a, x, y, bb) = l.corners(m);
        let mut out = zeros(h + k, h + k);
        out.view_mut((0, 0), (h, h)).copy_from(&b.pi_a.eval(&a));
        out.view_mut((0, h), (h, k)).copy_from(&b.eval(&x));
        out.view_mut((h, 0), (k, h)).copy_from(&b.eval(&y).adjoint());
        out.view_mut((h, h), (k, k)).copy_from(&b.pi_b.eval(&bb));
        out
    });

    // Y = p L_X as p × (p+q) rows [a, x].
    let mut items = Vec::new();
    for a in b.module.left().basis() {
        let mut row = zeros(p, p + q);
        row.view_mut((0, 0), (p, p)).copy_from(a);
        items.push(row);
    }
    for x in b.module.basis() {
        let mut row = zeros(p, p + q);
        row.view_mut((0, p), (p, q)).copy_from(x);
        items.push(row);
    }
    let module = Bimodule::from_parts(b.module.left().clone(), l.algebra.clone(), &items);
    let images = module
        .basis()
        .iter()
        .map(|y| {
            let a = y.view((0, 0), (p, p)).into_owned();
            let x = y.view((0, p), (p, q)).into_owned();
            let mut out = zeros(h, h + k);
            out.view_mut((0, 0), (h, h)).copy_from(&b.pi_a.eval(&a));
            out.view_mut((0, h), (h, k)).copy_from(&b.eval(&x));
            out
        })
        .collect();
    let witness = BimoduleRep { pi_a: b.pi_a.clone(), pi_b: rho.clone(), module, images };
    Ok(LinkingRep { rho, witness })
}

/// Partial isometry `w ∈ L_X` with `w*w = p`, `ww* = q`, the isomorphism
/// `θ(a) = w a w*` of `A` onto `B`, and `W̃ = ρ(w)|_H`.
#[derive(Debug, Clone)]
pub struct BgrTransport {
    pub w: CMatrix,
    /// `θ` as a representation of `A` on `C^q` whose images lie in `B`.
    pub theta: Representation,
    pub w_tilde: CMatrix,
    pub pi_a: Representation,
    pub pi_b: Representation,
    /// `max_a ‖π_B(θ(a)) − W̃ π_A(a) W̃*‖`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct BgrOutcome {
    /// Rank of `p` and of `q` in each simple summand of `L_X`.
    pub block_ranks: Vec<(usize, usize)>,
    pub transport: Option<BgrTransport>,
}

impl BgrOutcome {
    pub fn feasible(&self) -> bool {
        self.block_ranks.iter().all(|(a, b)| a == b)
    }
}

const BGR_RANDOM_TRIES: usize = 16;

pub fn bgr_transport(
    l: &LinkingAlgebra,
    rho: &Representation,
    seed: u64,
    tol: &Tolerance,
) -> Result<BgrOutcome> {
    let s = l.algebra.structure()?;
    let block_ranks: Vec<(usize, usize)> = s
        .blocks
        .iter()
        .map(|b| {
            let mu = b.multiplicity as f64;
            let rp = (&b.central_projection * &l.p_proj).trace().re / mu;
            let rq = (&b.central_projection * &l.q_proj).trace().re / mu;
            (rp.round() as usize, rq.round() as usize)
        })
        .collect();
    let mut outcome = BgrOutcome { block_ranks, transport: None };
    if !outcome.feasible() {
        return Ok(outcome);
    }

    let check = |z: &CMatrix| -> Result<Option<CMatrix>> {
        let c = &l.q_proj * z * &l.p_proj;
        if c.norm() < 1e-8 {
            return Ok(None);
        }
        let w = polar_partial_isometry(&c, &Tolerance { rel: 1e-8, abs: 1e-12 })?;
        let e1 = spectral_norm(&(w.adjoint() * &w - &l.p_proj));
        let e2 = spectral_norm(&(&w * w.adjoint() - &l.q_proj));
        Ok((e1 < 1e-8 && e2 < 1e-8).then_some(w))
    };
    let mut found = None;
    for z in l.algebra.basis() {
        if let Some(w) = check(z)? {
            found = Some(w);
            break;
        }
    }
    if found.is_none() {
        let mut rng = random::rng(seed);
        for _ in 0..BGR_RANDOM_TRIES {
            let mut z = zeros(l.algebra.ambient_dim(), l.algebra.ambient_dim());
            for b in l.algebra.basis() {
                z += b * random::gaussian_scalar(&mut rng);
            }
            if let Some(w) = check(&z)? {
                found = Some(w);
                break;
            }
        }
    }
    let Some(w) = found else {
        return Ok(outcome);
    };

    let (p, q) = l.corner_dims();
    let a_alg = corner_algebra(l, true);
    let theta = Representation::from_fn(&a_alg, q, |a| {
        let t = &w * l.embed_left(a) * w.adjoint();
        t.view((p, p), (q, q)).into_owned()
    });

    let ep = corner_frame(&rho.eval(&l.p_proj));
    let eq = corner_frame(&rho.eval(&l.q_proj));
    let (h, k) = (ep.ncols(), eq.ncols());
    let b_alg = corner_algebra(l, false);
    let pi_a = Representation::from_fn(&a_alg, h, |a| ep.adjoint() * rho.eval(&l.embed_left(a)) * &ep);
    let pi_b = Representation::from_fn(&b_alg, k, |b| eq.adjoint() * rho.eval(&l.embed_right(b)) * &eq);
    let w_tilde = eq.adjoint() * rho.eval(&w) * &ep;

    let mut residual = 0.0_f64;
    for i in 0..a_alg.dim() {
        let lhs = pi_b.eval(&theta.images[i]);
        let rhs = &w_tilde * &pi_a.images[i] * w_tilde.adjoint();
        residual = residual.max(spectral_norm(&(lhs - rhs)));
    }
    let iso = spectral_norm(&(w_tilde.adjoint() * &w_tilde - identity(h)));
    if iso > tol.bound(1.0).max(1e-9) {
        return Err(Error::IntertwinerMismatch { residual: iso });
    }
    outcome.transport = Some(BgrTransport { w, theta, w_tilde, pi_a, pi_b, residual });
    Ok(outcome)
}

/// Orthonormal frame of the range of a projection. Coordinate vectors are
/// used when the projection is a coordinate projection.
fn corner_frame(proj: &CMatrix) -> CMatrix {
    let n = proj.nrows();
    let diag_01 = (0..n).all(|i| {
        (0..n).all(|j| {
            let v = proj[(i, j)];
            if i == j {
                v.norm() < 1e-10 || (v - C64::new(1.0, 0.0)).norm() < 1e-10
            } else {
                v.norm() < 1e-10
            }
        })
    });
    if diag_01 {
        let idx: Vec<usize> = (0..n).filter(|&i| proj[(i, i)].re > 0.5).collect();
        let mut f = zeros(n, idx.len());
        for (c, &i) in idx.iter().enumerate() {
            f[(i, c)] = C64::new(1.0, 0.0);
        }
        f
    } else {
        range_basis(proj, &Tolerance { rel: 1e-6, abs: 1e-9 })
    }
}

/// `p L p` (or `q L q`) read back as an algebra on `C^p` (or `C^q`).
fn corner_algebra(l: &LinkingAlgebra, left: bool) -> Algebra {
    let (p, q) = l.corner_dims();
    let (off, n, proj) = if left { (0, p, &l.p_proj) } else { (p, q, &l.q_proj) };
    let items: Vec<CMatrix> = l
        .algebra
        .basis()
        .iter()
        .map(|b| (proj * b * proj).view((off, off), (n, n)).into_owned())
        .collect();
    Algebra::from_spanning(n, &items)
}

/// `π^s = π ⊗ id` on `H ⊗ C^m` for `A ⊗ M_m`, with the witness bimodule
/// `X = A^s (1 ⊗ e_11)` realized as `(Nm) × N` matrices `a ⊗ e_k`.
#[derive(Debug, Clone)]
pub struct Stabilization {
    pub pi_s: Representation,
    pub witness: BimoduleRep,
    /// `ι_H = 1 ⊗ e_1 : H → H ⊗ C^m`.
    pub iota_h: CMatrix,
}

/// Apply `f` blockwise to `s = Σ_kl a_kl ⊗ e_kl` where `s` is `kron`-ordered
/// with an inner factor of size `m`: returns `Σ_kl kron(f(a_kl), e_kl)`.
pub(crate) fn tensor_apply(
    s: &CMatrix,
    n: usize,
    m: usize,
    out_dim: usize,
    f: impl Fn(&CMatrix) -> CMatrix,
) -> CMatrix {
    let mut out = zeros(out_dim * m, out_dim * m);
    for k in 0..m {
        for l in 0..m {
            let akl = CMatrix::from_fn(n, n, |i, j| s[(i * m + k, j * m + l)]);
            if akl.norm() == 0.0 {
                continue;
            }
            out += kron(&f(&akl), &matrix_unit(m, m, k, l));
        }
    }
    out
}

pub fn stabilize_rep(pi: &Representation, m: usize) -> Result<Stabilization> {
    if m == 0 {
        return Err(Error::ParamOutOfRange("stabilization size must be at least 1".into()));
    }
    let a = &pi.algebra;
    let n = a.ambient_dim();
    let h = pi.space_dim;
    let a_s = a.tensor_full(m);
    let pi_s = Representation::from_fn(&a_s, h * m, |s| tensor_apply(s, n, m, h, |x| pi.eval(x)));

    let e1 = matrix_unit(m, 1, 0, 0);
    let iota_a = kron(&identity(n), &e1);
    let iota_h = kron(&identity(h), &e1);
    let mut items = Vec::new();
    for b in a.basis() {
        for k in 0..m {
            items.push(kron(b, &matrix_unit(m, 1, k, 0)));
        }
    }
    let module = Bimodule::from_parts(a_s.clone(), a.clone(), &items);
    let images = module.basis().iter().map(|x| pi_s.eval(&(x * iota_a.adjoint())) * &iota_h).collect();
    let witness = BimoduleRep { pi_a: pi_s.clone(), pi_b: pi.clone(), module, images };
    Ok(Stabilization { pi_s, witness, iota_h })
}
