use num_complex::Complex64;
use proptest::prelude::*;
use stringfock::lattice::Grid;
use stringfock::propagator::{scalar_smear, symplectic_form, PauliJordanEvaluator, RegularSolution, TimeDomain};
use stringfock::quantum_field::MultiStringSpace;
use stringfock::scalar::q;
use stringfock::smearing::{bump, InternalSpace, SpacetimeBump};
use stringfock::sparse::SparseVec;
use stringfock::Execution;

const SEQ: Execution = Execution::Sequential;

fn coarse() -> TimeDomain {
    TimeDomain { h: 0.05, courant: None, richardson: false }
}

fn mass() -> impl Strategy<Value = f64> {
    prop_oneof![Just(-2.0), Just(0.0), Just(2.0)]
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn smear_is_antisymmetric(r in mass(), dt in -3.0f64..3.0, dx in -2.0f64..2.0, rho in 0.5f64..1.2) {
        let f = SpacetimeBump::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let g = SpacetimeBump::new(vec![dt, dx], vec![rho, 0.8]).unwrap();
        let a = scalar_smear(r, &f, &g, &coarse(), SEQ).unwrap();
        let b = scalar_smear(r, &g, &f, &coarse(), SEQ).unwrap();
        prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    #[test]
    fn spacelike_boxes_do_not_talk(r in mass(), dt in -1.5f64..1.5, extra in 0.15f64..3.0, rho_t in 0.4f64..1.0, rho_x in 0.4f64..1.0) {
        let f = SpacetimeBump::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        // spatial gap beats the largest time separation of the supports
        let dx = 1.0 + rho_x + dt.abs() + 1.0 + rho_t + extra;
        let g = SpacetimeBump::new(vec![dt, dx], vec![rho_t, rho_x]).unwrap();
        let s = scalar_smear(r, &f, &g, &coarse(), SEQ).unwrap();
        prop_assert_eq!(s, 0.0);
    }

    #[test]
    fn pauli_jordan_vanishes_outside_the_cone(r in mass(), t in -2.0f64..2.0, gap in 0.05f64..1.0) {
        let pj = PauliJordanEvaluator { td: TimeDomain { h: 0.02, ..TimeDomain::default() }, ..PauliJordanEvaluator::new(r, 2) };
        let x = t.abs() + gap;
        prop_assert_eq!(pj.time_domain(t, &[x], SEQ).unwrap(), 0.0);
    }

    // tachyonic data grows like e^{√2 t}; round-off grows with it, so runs stop at t = 3
    #[test]
    fn symplectic_form_is_conserved(r in mass(), c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, w in 0.6f64..1.5, steps in 20i64..60) {
        let td = coarse();
        let scheme = td.scheme(r, td.h, 1).unwrap();
        let grid = Grid::covering(&[(-16.0, 16.0)], td.h);
        let space = InternalSpace::new(2, q(1), 0, SEQ);
        let internal = SparseVec::unit(0);
        let u = RegularSolution::from_cauchy(grid.clone(), scheme, 0, internal.clone(), 0, |x| bump((x[0] - c1) / w), |_| 0.0);
        let v = RegularSolution::from_cauchy(grid, scheme, 0, internal, 0, |x| 0.5 * bump(x[0] - c2), |x| bump((x[0] + c1) / w));
        let s0 = symplectic_form(&u, &v, &space, SEQ).unwrap();
        let (mut u1, mut v1) = (u, v);
        u1.evolve_to(steps, SEQ).unwrap();
        v1.evolve_to(steps, SEQ).unwrap();
        let s1 = symplectic_form(&u1, &v1, &space, SEQ).unwrap();
        prop_assert!((s0 - s1).abs() <= 1e-9 * s0.abs().max(1e-3), "{s0} {s1}");
    }

    #[test]
    fn fock_commutator_is_the_overlap_difference(
        raw in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..10),
        cutoff in 2usize..5,
    ) {
        // Gram of k vectors in C²: Hermitian and positive semidefinite
        let k = raw.len() / 2;
        let vecs: Vec<[Complex64; 2]> = (0..k)
            .map(|i| [Complex64::new(raw[2 * i].0, raw[2 * i].1), Complex64::new(raw[2 * i + 1].0, raw[2 * i + 1].1)])
            .collect();
        let overlaps: Vec<Vec<Complex64>> = vecs
            .iter()
            .map(|u| vecs.iter().map(|v| u[0].conj() * v[0] + u[1].conj() * v[1]).collect())
            .collect();
        let space = MultiStringSpace::from_overlaps(overlaps.clone(), cutoff);
        prop_assert_eq!(space.dim(), binomial(k + cutoff, cutoff));
        prop_assert!((0..space.dim()).all(|s| space.particle_number(s) <= cutoff));
        for i in 0..k {
            prop_assert!(space.hermiticity_residual(i) <= 1e-12);
            for j in 0..k {
                let c = space.commutator_check(i, j);
                prop_assert!(c.max_deviation <= 1e-12);
                prop_assert!((c.value - (overlaps[i][j] - overlaps[j][i])).norm() <= 1e-15);
                prop_assert!(c.value.re.abs() <= 1e-15);
            }
        }
    }
}
