//! Seeded random instances: algebras, bimodules, representations, CP maps
//! and expectation pairs.

use rand::Rng;

use crate::algebra::Algebra;
use crate::bimodule::{verify_bimodule, Bimodule};
use crate::cpmap::CPMap;
use crate::error::{Error, Result};
use crate::expectation::ExpectationPair;
use crate::numerics::{embed, identity, kron, matrix_unit, zeros, CMatrix, Tolerance};
use crate::random::{self, SeededRng};
use crate::representation::Representation;

fn out_of_range(msg: impl Into<String>) -> Error {
    Error::ParamOutOfRange(msg.into())
}

fn check_blocks(blocks: &[(usize, usize, usize)]) -> Result<()> {
    if blocks.is_empty() {
        return Err(out_of_range("at least one block is required"));
    }
    if blocks.iter().any(|&(n, m, mu)| n == 0 || m == 0 || mu == 0) {
        return Err(out_of_range("block sizes and multiplicities must be positive"));
    }
    Ok(())
}

/// `⊕_k M_{n_k} ⊗ I_{mu_k}` on `C^{Σ n_k mu_k}`.
fn block_algebra(blocks: &[(usize, usize)]) -> Algebra {
    let parts: Vec<Algebra> =
        blocks.iter().map(|&(n, mu)| Algebra::full(n).with_multiplicity(mu)).collect();
    Algebra::direct_sum(&parts.iter().collect::<Vec<_>>())
}

/// `⊕_k M_{n_k} ⊗ I_{mu_k}`, optionally conjugated by a random unitary.
pub fn algebra(blocks: &[(usize, usize)], conjugate: bool, seed: u64) -> Result<Algebra> {
    let triples: Vec<_> = blocks.iter().map(|&(n, mu)| (n, n, mu)).collect();
    check_blocks(&triples)?;
    let a = block_algebra(blocks);
    if !conjugate {
        return Ok(a);
    }
    let mut rng = random::rng(seed);
    let u = random::unitary(&mut rng, a.ambient_dim());
    Ok(a.conjugate(&u))
}

/// Block-diagonal `⊕_k M_{n_k × m_k} ⊗ I_{mu_k}` as an
/// `(⊕ M_{n_k} ⊗ I_{mu_k})–(⊕ M_{m_k} ⊗ I_{mu_k})` bimodule.
fn block_bimodule(blocks: &[(usize, usize, usize)]) -> (Algebra, Algebra, Vec<CMatrix>) {
    let p: usize = blocks.iter().map(|&(n, _, mu)| n * mu).sum();
    let q: usize = blocks.iter().map(|&(_, m, mu)| m * mu).sum();
    let mut items = Vec::new();
    let (mut r, mut c) = (0, 0);
    for &(n, m, mu) in blocks {
        let id = identity(mu);
        for i in 0..n {
            for j in 0..m {
                items.push(embed(p, q, r, c, &kron(&matrix_unit(n, m, i, j), &id)));
            }
        }
        r += n * mu;
        c += m * mu;
    }
    let left: Vec<_> = blocks.iter().map(|&(n, _, mu)| (n, mu)).collect();
    let right: Vec<_> = blocks.iter().map(|&(_, m, mu)| (m, mu)).collect();
    (block_algebra(&left), block_algebra(&right), items)
}

fn conjugated_bimodule(
    blocks: &[(usize, usize, usize)],
    u: &CMatrix,
    w: &CMatrix,
) -> Result<Bimodule> {
    let (a, b, items) = block_bimodule(blocks);
    let items: Vec<CMatrix> = items.iter().map(|x| u * x * w.adjoint()).collect();
    verify_bimodule(&a.conjugate(u), &b.conjugate(w), &items, &Tolerance::default())
}

/// Equivalence bimodule with blocks `(n_k, m_k, mu_k)`. When `conjugate` is
/// set, `X ↦ U X W*` with the algebras moved along.
pub fn bimodule(blocks: &[(usize, usize, usize)], conjugate: bool, seed: u64) -> Result<Bimodule> {
    check_blocks(blocks)?;
    let p: usize = blocks.iter().map(|&(n, _, mu)| n * mu).sum();
    let q: usize = blocks.iter().map(|&(_, m, mu)| m * mu).sum();
    let (u, w) = if conjugate {
        let mut rng = random::rng(seed);
        (random::unitary(&mut rng, p), random::unitary(&mut rng, q))
    } else {
        (identity(p), identity(q))
    };
    conjugated_bimodule(blocks, &u, &w)
}

/// `X: A–B` with blocks `(n_k, m_k, mu_k)` and `Y: B–C` with blocks
/// `(m_k, l_k, mu_k)`, sharing the same conjugated `B`.
pub fn chain(
    blocks: &[(usize, usize, usize)],
    right_sizes: &[usize],
    seed: u64,
) -> Result<(Bimodule, Bimodule)> {
    check_blocks(blocks)?;
    if right_sizes.len() != blocks.len() {
        return Err(out_of_range("one right size per block is required"));
    }
    let y_blocks: Vec<_> =
        blocks.iter().zip(right_sizes).map(|(&(_, m, mu), &l)| (m, l, mu)).collect();
    check_blocks(&y_blocks)?;
    let dim = |bs: &[(usize, usize, usize)], f: fn(&(usize, usize, usize)) -> usize| -> usize {
        bs.iter().map(|b| f(b) * b.2).sum()
    };
    let mut rng = random::rng(seed);
    let u = random::unitary(&mut rng, dim(blocks, |b| b.0));
    let w = random::unitary(&mut rng, dim(blocks, |b| b.1));
    let v = random::unitary(&mut rng, dim(&y_blocks, |b| b.1));
    Ok((conjugated_bimodule(blocks, &u, &w)?, conjugated_bimodule(&y_blocks, &w, &v)?))
}

/// `π(a) = V (⊕_k a_k ⊗ I_{m_k}) V*` for the Wedderburn components `a_k` of
/// `a`, a random unitary `V` and the given multiplicities.
pub fn representation(a: &Algebra, multiplicities: &[usize], seed: u64) -> Result<Representation> {
    let structure = a.structure()?;
    if multiplicities.len() != structure.blocks.len() {
        return Err(out_of_range(format!(
            "expected {} multiplicities, got {}",
            structure.blocks.len(),
            multiplicities.len()
        )));
    }
    let dim: usize = structure.blocks.iter().zip(multiplicities).map(|(b, m)| b.size * m).sum();
    if dim == 0 {
        return Err(out_of_range("representation space would be zero-dimensional"));
    }
    let mut rng = random::rng(seed);
    let v = random::unitary(&mut rng, dim);
    let vt = v.adjoint();
    Ok(Representation::from_fn(a, dim, |x| {
        let mut out = zeros(dim, dim);
        let mut offset = 0;
        for (block, &m) in structure.blocks.iter().zip(multiplicities) {
            let n = block.size;
            let norm = block.unit(0, 0).trace();
            let mut comp = zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    comp[(i, j)] = (block.unit(0, i) * x * block.unit(j, 0)).trace() / norm;
                }
            }
            let amp = kron(&comp, &identity(m));
            out.view_mut((offset, offset), (n * m, n * m)).copy_from(&amp);
            offset += n * m;
        }
        &v * out * &vt
    }))
}

/// `a ↦ Σ_{i<r} K_i* a K_i` with Gaussian `K_i` of shape `N × h`.
pub fn cpmap(a: &Algebra, target_dim: usize, kraus_rank: usize, seed: u64) -> Result<CPMap> {
    if target_dim == 0 || kraus_rank == 0 {
        return Err(out_of_range("target dimension and Kraus rank must be positive"));
    }
    let mut rng = random::rng(seed);
    let kraus: Vec<CMatrix> =
        (0..kraus_rank).map(|_| random::gaussian(&mut rng, a.ambient_dim(), target_dim)).collect();
    CPMap::from_kraus(a, &kraus)
}

/// Ingredients of a tensor-type pair: `X_0`, the factor `r` and the two
/// slice weights.
#[derive(Debug, Clone)]
pub struct TensorPairParts {
    pub x0: Bimodule,
    pub tensor_factor: usize,
    pub rho_a: CMatrix,
    pub rho_b: CMatrix,
}

impl TensorPairParts {
    pub fn build(&self, tol: &Tolerance) -> Result<ExpectationPair> {
        ExpectationPair::tensor(&self.x0, self.tensor_factor, &self.rho_a, &self.rho_b, tol)
    }
}

/// Block bimodule `X_0` with slice factor `r` and random full-rank weights.
/// With `compatible` unset the two weights differ.
pub fn tensor_pair_parts(
    blocks: &[(usize, usize, usize)],
    r: usize,
    compatible: bool,
    seed: u64,
) -> Result<TensorPairParts> {
    if r == 0 {
        return Err(out_of_range("tensor factor must be at least 1"));
    }
    if !compatible && r == 1 {
        return Err(out_of_range("an incompatible pair needs a tensor factor of at least 2"));
    }
    let x0 = bimodule(blocks, true, seed)?;
    let mut rng = random::rng(seed ^ 0x5eed);
    let rho_b = random::density(&mut rng, r);
    let rho_a = if compatible { rho_b.clone() } else { random::density(&mut rng, r) };
    Ok(TensorPairParts { x0, tensor_factor: r, rho_a, rho_b })
}

pub fn expectation_pair(
    blocks: &[(usize, usize, usize)],
    r: usize,
    compatible: bool,
    seed: u64,
) -> Result<ExpectationPair> {
    tensor_pair_parts(blocks, r, compatible, seed)?.build(&Tolerance::default())
}

fn random_blocks(
    rng: &mut SeededRng,
    max_left: usize,
    max_right: usize,
    max_size: usize,
) -> Vec<(usize, usize, usize)> {
    loop {
        let count = rng.random_range(1..=2);
        let blocks: Vec<_> = (0..count)
            .map(|_| {
                (
                    rng.random_range(1..=max_size),
                    rng.random_range(1..=max_size),
                    rng.random_range(1..=2),
                )
            })
            .collect();
        let p: usize = blocks.iter().map(|&(n, _, mu)| n * mu).sum();
        let q: usize = blocks.iter().map(|&(_, m, mu)| m * mu).sum();
        if p <= max_left && q <= max_right {
            return blocks;
        }
    }
}

/// A CP map `ψ` on `B` with an `A–B` bimodule `X`, the input of a transfer.
#[derive(Debug, Clone)]
pub struct Co5Instance {
    pub x: Bimodule,
    pub psi: CPMap,
}

/// Random 1–2 block bimodule with both sides of ambient dimension at most
/// `max_ambient`, and a CP map with target at most 3 and Kraus rank at most 3.
pub fn co5_instance(max_ambient: usize, seed: u64) -> Result<Co5Instance> {
    if max_ambient == 0 {
        return Err(out_of_range("ambient dimension must be positive"));
    }
    let mut rng = random::rng(seed);
    let blocks = random_blocks(&mut rng, max_ambient, max_ambient, max_ambient.min(3));
    let h = rng.random_range(1..=3);
    let r = rng.random_range(1..=3);
    let x = bimodule(&blocks, true, rng.random())?;
    let psi = cpmap(x.right(), h, r, rng.random())?;
    Ok(Co5Instance { x, psi })
}

/// A compatible tensor-type pair, the same pair with an incompatible
/// `E^A`, and a faithful representation of `B`.
#[derive(Debug, Clone)]
pub struct Rel7Instance {
    pub parts: TensorPairParts,
    pub incompatible_parts: TensorPairParts,
    pub pair: ExpectationPair,
    pub incompatible: ExpectationPair,
    pub pi_b: Representation,
}

/// Tensor factor `r = 2` and `X_0` blocks chosen so that `C` and `D` have
/// ambient dimension at most `max_ambient`.
pub fn rel7_instance(max_ambient: usize, seed: u64) -> Result<Rel7Instance> {
    let r = 2;
    if max_ambient < r {
        return Err(out_of_range(format!("ambient dimension must be at least {r}")));
    }
    let mut rng = random::rng(seed);
    let side = max_ambient / r;
    let blocks = random_blocks(&mut rng, side, side, side.min(2));
    let pair_seed = rng.random();
    let parts = tensor_pair_parts(&blocks, r, true, pair_seed)?;
    let incompatible_parts = tensor_pair_parts(&blocks, r, false, pair_seed)?;
    let tol = Tolerance::default();
    let pair = parts.build(&tol)?;
    let incompatible = incompatible_parts.build(&tol)?;
    let b = pair.x_sub.right();
    let mults: Vec<usize> = (0..b.structure()?.blocks.len()).map(|_| rng.random_range(1..=2)).collect();
    let pi_b = representation(b, &mults, rng.random())?;
    Ok(Rel7Instance { parts, incompatible_parts, pair, incompatible, pi_b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmap::verify_cp;
    use crate::representation::{check_representation, multiplicities};

    #[test]
    fn columns_up_to_unitary() {
        let x = bimodule(&[(2, 1, 1)], true, 7).unwrap();
        assert_eq!((x.rows(), x.cols(), x.dim()), (2, 1, 2));
        assert_eq!(x.left().dim(), 4);
        assert_eq!(x.right().dim(), 1);
    }

    #[test]
    fn algebra_blocks() {
        let a = algebra(&[(2, 1), (1, 2)], true, 3).unwrap();
        assert_eq!(a.ambient_dim(), 4);
        assert_eq!(a.dim(), 5);
        let s = a.structure().unwrap();
        let mut sizes = s.sizes();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2]);
    }

    #[test]
    fn bad_parameters() {
        assert!(matches!(algebra(&[], false, 0), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(bimodule(&[(2, 0, 1)], false, 0), Err(Error::ParamOutOfRange(_))));
        let m2 = Algebra::full(2);
        assert!(matches!(cpmap(&m2, 0, 1, 0), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(representation(&m2, &[0], 0), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(expectation_pair(&[(1, 1, 1)], 1, false, 0), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(rel7_instance(1, 0), Err(Error::ParamOutOfRange(_))));
    }

    #[test]
    fn generated_cpmap_is_cp() {
        let phi = cpmap(&Algebra::full(2), 2, 2, 11).unwrap();
        assert!(verify_cp(&phi, &Tolerance::default()).unwrap().cp);
    }

    #[test]
    fn representation_has_requested_multiplicities() {
        let a = algebra(&[(2, 1), (1, 1)], true, 5).unwrap();
        let pi = representation(&a, &[2, 3], 9).unwrap();
        check_representation(&pi, &Tolerance::default()).unwrap();
        assert_eq!(multiplicities(&pi).unwrap(), vec![2, 3]);
    }

    #[test]
    fn chain_shares_middle_algebra() {
        let (x, y) = chain(&[(2, 1, 1), (1, 2, 1)], &[1, 1], 2).unwrap();
        assert!(x.right().same_span(y.left()));
    }

    #[test]
    fn instances_are_deterministic() {
        let a = co5_instance(6, 42).unwrap();
        let b = co5_instance(6, 42).unwrap();
        assert_eq!(a.x.basis(), b.x.basis());
        assert!(a.psi.distance(&b.psi) == 0.0);
        assert!(a.x.rows() <= 6 && a.x.cols() <= 6);
        let r = rel7_instance(6, 1).unwrap();
        assert!(r.pair.y.rows() <= 6 && r.pair.y.cols() <= 6);
    }
}
