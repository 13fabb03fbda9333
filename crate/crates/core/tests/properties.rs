use moritakit::bimodule::{dual, verify_bimodule, Bimodule};
use moritakit::cpmap::{check_triple, minimal_stinespring, verify_cp};
use moritakit::generate;
use moritakit::numerics::{gram_quotient, identity, spectral_norm, Tolerance};
use moritakit::random;
use moritakit::representation::{
    induce, multiplicities, sme_representations, unitary_equivalence, Representation,
};
use moritakit::transfer::transfer_class_map;
use moritakit::Algebra;
use proptest::prelude::*;
use rand::Rng;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn shape(seed: u64) -> Vec<(usize, usize, usize)> {
    let mut rng = random::rng(seed);
    loop {
        let count = rng.random_range(1..=2);
        let blocks: Vec<_> = (0..count)
            .map(|_| (rng.random_range(1..=2), rng.random_range(1..=2), rng.random_range(1..=2)))
            .collect();
        let p: usize = blocks.iter().map(|b| b.0 * b.2).sum();
        let q: usize = blocks.iter().map(|b| b.1 * b.2).sum();
        if p <= 4 && q <= 4 {
            return blocks;
        }
    }
}

fn rep_of(a: &Algebra, seed: u64) -> Representation {
    let mut rng = random::rng(seed);
    let n = a.structure().unwrap().blocks.len();
    let mults: Vec<usize> = (0..n).map(|_| rng.random_range(1..=2)).collect();
    generate::representation(a, &mults, rng.random()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn kraus_maps_are_certified_cp(seed in any::<u64>(), h in 1usize..4, r in 1usize..4) {
        let a = generate::algebra(&[(2, 1), (1, 2)], true, seed).unwrap();
        let phi = generate::cpmap(&a, h, r, seed ^ 1).unwrap();
        let cert = verify_cp(&phi, &tol()).unwrap();
        prop_assert!(cert.cp, "min eigenvalue {}", cert.min_eigenvalue);
    }

    #[test]
    fn minimal_dilation_reproduces_the_map(seed in any::<u64>(), h in 1usize..4, r in 1usize..4) {
        let a = generate::algebra(&[(2, 1), (1, 1)], true, seed).unwrap();
        let phi = generate::cpmap(&a, h, r, seed ^ 2).unwrap();
        let t = minimal_stinespring(&phi, &tol()).unwrap();
        let report = check_triple(&phi, &t);
        prop_assert!(report.pass(phi.norm(), &tol()), "{report:?}");
    }

    #[test]
    fn gram_quotient_is_orthonormal(seed in any::<u64>(), n in 1usize..8, k in 1usize..5) {
        let mut rng = random::rng(seed);
        let g = random::gaussian(&mut rng, k, n);
        let gram = g.adjoint() * &g;
        let q = gram_quotient(&gram, &tol()).unwrap();
        prop_assert_eq!(q.quotient_dim, k.min(n));
        let res = spectral_norm(&(&q.project * &gram * q.project.adjoint() - identity(q.quotient_dim)));
        prop_assert!(res < 1e-9, "{res:e}");
    }

    #[test]
    fn inducing_over_the_trivial_bimodule_is_the_identity(seed in any::<u64>()) {
        let a = generate::algebra(&[(2, 1), (1, 1)], true, seed).unwrap();
        let pi = rep_of(&a, seed ^ 3);
        let ind = induce(&Bimodule::trivial(&a), &pi, &tol()).unwrap();
        prop_assert!(unitary_equivalence(ind.pi_a(), &pi, &tol()).unwrap().is_some());
    }

    #[test]
    fn induction_commutes_with_direct_sums(seed in any::<u64>()) {
        let x = generate::bimodule(&shape(seed), true, seed ^ 4).unwrap();
        let p1 = rep_of(x.right(), seed ^ 5);
        let p2 = rep_of(x.right(), seed ^ 6);
        let sum = induce(&x, &p1.direct_sum(&p2).unwrap(), &tol()).unwrap();
        let parts = induce(&x, &p1, &tol()).unwrap().pi_a().direct_sum(induce(&x, &p2, &tol()).unwrap().pi_a()).unwrap();
        prop_assert_eq!(multiplicities(sum.pi_a()).unwrap(), multiplicities(&parts).unwrap());
        prop_assert!(unitary_equivalence(sum.pi_a(), &parts, &tol()).unwrap().is_some());
    }

    #[test]
    fn equivalence_is_symmetric(seed in any::<u64>()) {
        let x = generate::bimodule(&shape(seed), true, seed ^ 7).unwrap();
        let pi_b = rep_of(x.right(), seed ^ 8);
        let pi_a = induce(&x, &pi_b, &tol()).unwrap().rep.pi_a;
        prop_assert!(sme_representations(&pi_a, &pi_b, &x, &tol()).unwrap().is_some());
        prop_assert!(sme_representations(&pi_b, &pi_a, &dual(&x), &tol()).unwrap().is_some());
    }

    #[test]
    fn class_correspondence_does_not_depend_on_the_bimodule(seed in any::<u64>()) {
        let x1 = generate::bimodule(&shape(seed), true, seed ^ 9).unwrap();
        let mut rng = random::rng(seed ^ 10);
        let u = random::unitary(&mut rng, x1.rows());
        let items: Vec<_> = x1.basis().iter().map(|x| &u * x).collect();
        let x2 = verify_bimodule(&x1.left().conjugate(&u), x1.right(), &items, &tol()).unwrap();
        let base = generate::cpmap(x1.right(), 2, 1, seed ^ 11).unwrap();
        let other = generate::cpmap(x1.right(), 2, 2, seed ^ 12).unwrap();
        let maps = [base.clone(), base, other];
        let m1 = transfer_class_map(&maps, &x1, &tol()).unwrap();
        let m2 = transfer_class_map(&maps, &x2, &tol()).unwrap();
        prop_assert!(m1.preserved() && m2.preserved());
        prop_assert_eq!(m1.after, m2.after);
    }
}
