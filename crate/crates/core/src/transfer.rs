//! Moving CP maps across an equivalence bimodule with a left basis, and the
//! resulting correspondence of equivalence classes.

use crate::bimodule::{dual, left_basis, Bimodule, Frame};
use crate::cpmap::{dilate, sme_cpmaps, verify_cp, ChoiCertificate, CPMap, CpWitness, StinespringTriple};
use crate::error::{Error, Result};
use crate::numerics::{identity, spectral_norm, zeros, CMatrix, Tolerance};
use crate::representation::{induce, Representation};

/// Output of [`transfer_cp`].
#[derive(Debug, Clone)]
pub struct TransferResult {
    /// `φ(a)` with blocks `φ(a)_ij = ψ(⟨u_i, a u_j⟩_B)`, acting on `K ⊗ C^n`
    /// indexed `i * h + s`.
    pub phi: CPMap,
    pub choi: ChoiCertificate,
    pub frame: Frame,
    pub psi_triple: StinespringTriple,
    pub phi_triple: StinespringTriple,
    /// Representation of `A` induced from `X` and the dilation of `ψ`.
    pub pi_a: Representation,
    /// Isometry `U: H_φ → H_A`.
    pub u_iso: CMatrix,
    /// `‖U*U − I‖`.
    pub isometry: f64,
    /// `max_c ‖π_φ(c) − U* π_A(c) U‖`.
    pub intertwining: f64,
    /// Witness from running [`sme_cpmaps`] on `(φ, ψ, X)`.
    pub witness: Option<CpWitness>,
}

/// `[φ(a)_ij] = [ψ(⟨u_i, a u_j⟩_B)]`.
pub fn transferred_map(psi: &CPMap, x: &Bimodule, frame: &Frame) -> CPMap {
    let n = frame.len();
    let h = psi.target_dim();
    let us = &frame.vectors;
    CPMap::from_fn(x.left(), n * h, |a| {
        let mut out = zeros(n * h, n * h);
        for i in 0..n {
            let ui = us[i].adjoint();
            for j in 0..n {
                let block = psi.eval(&(&ui * a * &us[j]));
                out.view_mut((i * h, j * h), (h, h)).copy_from(&block);
            }
        }
        out
    })
}

pub fn transfer_cp(psi: &CPMap, x: &Bimodule, frame: &Frame, tol: &Tolerance) -> Result<TransferResult> {
    if !psi.source().same_span(x.right()) {
        return Err(Error::AlgebraMismatch("map is not defined on the right algebra".into()));
    }
    let recon = frame.reconstruction_residual(x);
    if recon > tol.rel.max(1e-9) {
        return Err(Error::FrameInvalid { residual: recon });
    }
    let phi = transferred_map(psi, x, frame);
    let choi = verify_cp(&phi, tol)?;
    if !choi.cp {
        return Err(Error::NotCp { min_eigenvalue: choi.min_eigenvalue });
    }
    let (psi_triple, _) = dilate(psi, &(0..psi.source().dim()).collect::<Vec<_>>(), tol)?;
    if psi_triple.dilation_dim() == 0 {
        return Err(Error::ZeroMap);
    }
    let a = x.left();
    let (phi_triple, q_phi) = dilate(&phi, &(0..a.dim()).collect::<Vec<_>>(), tol)?;
    let q_phi = q_phi.ok_or(Error::ZeroMap)?;
    let ind = induce(x, &psi_triple.pi, tol)?;
    let pi_a = ind.rep.pi_a.clone();
    if phi_triple.dilation_dim() != pi_a.space_dim() {
        return Err(Error::DimensionMismatch(format!(
            "dilation of the transferred map has dimension {} but the induced space has {}",
            phi_triple.dilation_dim(),
            pi_a.space_dim()
        )));
    }

    // U(a_k ⊗ e_s ⊗ e_i) = (a_k u_i) ⊗ V_ψ e_s.
    let kpsi = psi_triple.dilation_dim();
    let h = psi.target_dim();
    let n = frame.len();
    let dx = x.dim();
    let mut f = zeros(dx * kpsi, a.dim() * n * h);
    for (k, ak) in a.basis().iter().enumerate() {
        for (i, ui) in frame.vectors.iter().enumerate() {
            let cl = x.coords(&(ak * ui));
            for l in 0..dx {
                if cl[l].norm() == 0.0 {
                    continue;
                }
                for r in 0..kpsi {
                    for s in 0..h {
                        f[(l * kpsi + r, k * n * h + i * h + s)] = cl[l] * psi_triple.v[(r, s)];
                    }
                }
            }
        }
    }
    let u_iso = &ind.quotient.coords * f * q_phi.project.adjoint();
    let isometry = spectral_norm(&(u_iso.adjoint() * &u_iso - identity(phi_triple.dilation_dim())));
    let intertwining = a
        .basis()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let rhs = u_iso.adjoint() * pi_a.eval(c) * &u_iso;
            spectral_norm(&(&phi_triple.pi.images()[i] - rhs))
        })
        .fold(0.0, f64::max);
    let witness = sme_cpmaps(&phi, psi, x, tol)?;
    Ok(TransferResult {
        phi,
        choi,
        frame: frame.clone(),
        psi_triple,
        phi_triple,
        pi_a,
        u_iso,
        isometry,
        intertwining,
        witness,
    })
}

#[derive(Debug, Clone)]
pub struct Roundtrip {
    pub forward: TransferResult,
    pub backward: TransferResult,
    /// Witness that `ψ''` is equivalent to `ψ` over the trivial bimodule.
    pub witness: Option<CpWitness>,
}

/// `ψ → φ` along `X`, then `φ → ψ''` along the dual, and compare `ψ''`
/// with `ψ`.
pub fn roundtrip(psi: &CPMap, x: &Bimodule, tol: &Tolerance) -> Result<Roundtrip> {
    let forward = transfer_cp(psi, x, &left_basis(x, tol)?, tol)?;
    let xd = dual(x);
    let backward = transfer_cp(&forward.phi, &xd, &left_basis(&xd, tol)?, tol)?;
    let witness = sme_cpmaps(psi, &backward.phi, &Bimodule::trivial(psi.source()), tol)?;
    Ok(Roundtrip { forward, backward, witness })
}

/// Pairwise equivalence verdicts before and after transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    pub before: Vec<Vec<bool>>,
    pub after: Vec<Vec<bool>>,
}

impl ClassMap {
    pub fn preserved(&self) -> bool {
        self.before == self.after
    }
}

fn verdicts(maps: &[CPMap], tol: &Tolerance) -> Result<Vec<Vec<bool>>> {
    let n = maps.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        let x0 = Bimodule::trivial(maps[i].source());
        for j in 0..n {
            out[i][j] = sme_cpmaps(&maps[i], &maps[j], &x0, tol)?.is_some();
        }
    }
    Ok(out)
}

pub fn transfer_class_map(psis: &[CPMap], x: &Bimodule, tol: &Tolerance) -> Result<ClassMap> {
    let frame = left_basis(x, tol)?;
    let phis: Vec<CPMap> = psis
        .iter()
        .map(|p| transfer_cp(p, x, &frame, tol).map(|t| t.phi))
        .collect::<Result<_>>()?;
    Ok(ClassMap { before: verdicts(psis, tol)?, after: verdicts(&phis, tol)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Algebra;
    use crate::bimodule::verify_bimodule;
    use crate::numerics::{c, matrix_unit};
    use crate::random;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn columns() -> Bimodule {
        let items = [matrix_unit(2, 1, 0, 0), matrix_unit(2, 1, 1, 0)];
        verify_bimodule(&Algebra::full(2), &Algebra::scalars(1), &items, &tol()).unwrap()
    }

    fn random_cp(seed: u64, a: &Algebra, h: usize, r: usize) -> CPMap {
        let mut rng = random::rng(seed);
        let kraus: Vec<CMatrix> =
            (0..r).map(|_| random::gaussian(&mut rng, a.ambient_dim(), h)).collect();
        CPMap::from_kraus(a, &kraus).unwrap()
    }

    #[test]
    fn columns_with_positive_scalar() {
        let x = columns();
        let frame = Frame::new(&x, vec![matrix_unit(2, 1, 0, 0)], &tol()).unwrap();
        let t_mat = crate::numerics::from_real(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let psi = CPMap::from_fn(x.right(), 2, |b| &t_mat * b[(0, 0)]);
        let r = transfer_cp(&psi, &x, &frame, &tol()).unwrap();
        for a in x.left().basis() {
            assert!(spectral_norm(&(r.phi.eval(a) - &t_mat * a[(0, 0)])) < 1e-12);
        }
        assert!(r.isometry < 1e-9 && r.intertwining < 1e-9);
        assert!(r.witness.is_some());
    }

    #[test]
    fn identity_transfer() {
        let m2 = Algebra::full(2);
        let x0 = Bimodule::trivial(&m2);
        let frame = Frame::new(&x0, vec![identity(2)], &tol()).unwrap();
        let psi = random_cp(1, &m2, 2, 2);
        let r = transfer_cp(&psi, &x0, &frame, &tol()).unwrap();
        assert!(r.phi.distance(&psi) < 1e-12);
        assert!(r.witness.is_some());
    }

    #[test]
    fn scalar_to_matrix_units() {
        let x = columns();
        let frame = Frame::new(&x, vec![matrix_unit(2, 1, 0, 0)], &tol()).unwrap();
        let psi = CPMap::from_fn(x.right(), 1, |b| b.clone());
        let r = transfer_cp(&psi, &x, &frame, &tol()).unwrap();
        for a in x.left().basis() {
            assert!((r.phi.eval(a)[(0, 0)] - a[(0, 0)]).norm() < 1e-12);
        }
        assert_eq!(r.phi_triple.dilation_dim(), 2);
        assert!(r.witness.is_some());
    }

    #[test]
    fn invalid_frame_is_rejected() {
        let x = columns();
        let frame = Frame { vectors: vec![matrix_unit(2, 1, 0, 0) * c(0.5, 0.0)] };
        let psi = CPMap::from_fn(x.right(), 1, |b| b.clone());
        assert!(matches!(transfer_cp(&psi, &x, &frame, &tol()), Err(Error::FrameInvalid { .. })));
    }

    #[test]
    fn roundtrip_examples() {
        let m2 = Algebra::full(2);
        let id = CPMap::from_fn(&m2, 2, |b| b.clone());
        let rt = roundtrip(&id, &Bimodule::trivial(&m2), &tol()).unwrap();
        assert!(rt.backward.phi.distance(&id) < 1e-12);
        assert!(rt.witness.is_some());

        let x = columns();
        let state = CPMap::from_fn(x.right(), 1, |b| b.clone());
        assert!(roundtrip(&state, &x, &tol()).unwrap().witness.is_some());
    }

    #[test]
    fn class_map_examples() {
        let m2 = Algebra::full(2);
        let x = columns();
        let x_dual = dual(&x);
        let psi = random_cp(3, &m2, 2, 2);
        let mut rng = random::rng(4);
        let w = random::unitary(&mut rng, 2);
        let conj = CPMap::from_fn(&m2, 2, |b| w.adjoint() * psi.eval(b) * &w);
        let bigger = random_cp(5, &m2, 3, 3);
        let map = transfer_class_map(&[psi.clone(), conj, bigger], &x_dual, &tol()).unwrap();
        assert!(map.preserved(), "{map:?}");
        assert!(map.before[0][1] && !map.before[0][2]);
        let single = transfer_class_map(&[psi], &x_dual, &tol()).unwrap();
        assert_eq!(single.before, vec![vec![true]]);
    }
}
