//! Seeded random matrices for instance generation and property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::{c, real, CMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_scalar<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_scalar(rng))
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian(rng, n, n);
    (&g + g.adjoint()) * real(0.5)
}

/// Haar-distributed unitary (QR of a Gaussian matrix with phases fixed).
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / real(d.norm()) } else { real(1.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// Isometry `C^cols -> C^rows` (first columns of a Haar unitary).
pub fn isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    unitary(rng, rows).columns(0, cols).into_owned()
}

/// Full-rank density matrix with unit trace.
pub fn density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian(rng, n, n);
    let p = &g * g.adjoint() + CMatrix::identity(n, n) * real(0.1);
    let t = p.trace();
    p / t
}
