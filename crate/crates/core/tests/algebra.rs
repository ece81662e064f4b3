use num_bigint::BigUint;
use num_traits::Zero;
use proptest::prelude::*;
use stringfock::config::{Gauge, Metric, ModelConfig};
use stringfock::fock_basis::{enumerate_basis, level_degeneracy};
use stringfock::oscillator::{apply_alpha, ccr_check, gram};
use stringfock::scalar::{q, Q};
use stringfock::sparse::SparseVec;
use stringfock::virasoro::{build_m2, mass_spectrum, Virasoro};
use stringfock::Execution;

/// Coefficients of Π (1 − xⁿ)^(−colors), one geometric factor at a time.
fn colored_partitions(max: usize, colors: usize) -> Vec<BigUint> {
    let mut c = vec![BigUint::zero(); max + 1];
    c[0] = BigUint::from(1u32);
    for n in 1..=max {
        for _ in 0..colors {
            for k in n..=max {
                let prev = c[k - n].clone();
                c[k] += prev;
            }
        }
    }
    c
}

fn gauge() -> impl Strategy<Value = Gauge> {
    prop_oneof![Just(Gauge::LightCone), Just(Gauge::Covariant)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn metric_signs_follow_the_gauge(d in 3usize..40, g in gauge()) {
        let m = ModelConfig::new(d, q(1), g, 2).metric();
        match g {
            Gauge::LightCone => {
                prop_assert_eq!(m.directions(), d - 2);
                prop_assert_eq!(m.negative_count(), 0);
            }
            Gauge::Covariant => {
                prop_assert_eq!(m.directions(), d);
                prop_assert_eq!(m.negative_count(), 1);
                prop_assert_eq!(m.sign(0), -1);
            }
        }
    }

    #[test]
    fn level_slices_match_the_partition_oracle(colors in 1usize..6, cutoff in 0usize..6) {
        let basis = enumerate_basis(colors, cutoff);
        let oracle = colored_partitions(cutoff, colors);
        for level in 0..=cutoff {
            prop_assert_eq!(BigUint::from(basis.level_count(level)), oracle[level].clone());
            prop_assert_eq!(level_degeneracy(level, colors), oracle[level].clone());
        }
        prop_assert_eq!(basis.len(), basis.prefix_len(cutoff + 1));
    }

    #[test]
    fn enumeration_is_a_deterministic_bijection(colors in 1usize..5, cutoff in 0usize..5) {
        let a = enumerate_basis(colors, cutoff);
        let b = enumerate_basis(colors, cutoff);
        prop_assert_eq!(a.states(), b.states());
        for (i, s) in a.states().iter().enumerate() {
            prop_assert_eq!(a.index_of(s), Some(i));
            prop_assert!(i == 0 || a.level_of(i - 1) <= a.level_of(i));
        }
    }

    #[test]
    fn ccr_holds_on_safe_subspaces(directions in 1usize..5, cutoff in 2usize..5, g in gauge()) {
        let metric = match g {
            Gauge::LightCone => Metric::euclidean(directions),
            Gauge::Covariant => Metric::minkowski(directions + 1),
        };
        let basis = enumerate_basis(metric.directions(), cutoff);
        let records = ccr_check(&basis, &metric, cutoff, Execution::Sequential).unwrap();
        prop_assert!(!records.is_empty());
        prop_assert!(records.iter().all(|r| r.pass));
    }

    #[test]
    fn alpha_adjoint_is_alpha_of_opposite_mode(n in 1i64..4, mu in 0usize..3, cutoff in 1usize..5) {
        prop_assume!(n as usize <= cutoff);
        let metric = Metric::minkowski(3);
        let basis = enumerate_basis(3, cutoff);
        let g = gram(&basis, &metric);
        for i in 0..basis.len() {
            let up = apply_alpha(&basis, &metric, -n, mu, &SparseVec::unit(i));
            for j in 0..basis.len() {
                let down = apply_alpha(&basis, &metric, n, mu, &SparseVec::unit(j));
                prop_assert_eq!(g.pair(&up, &SparseVec::unit(j)), g.pair(&SparseVec::unit(i), &down));
            }
        }
    }

    #[test]
    fn virasoro_is_hermitian_for_the_indefinite_form(
        m in 1i64..4,
        p0 in -3i64..4,
        p1 in -3i64..4,
        p2 in -3i64..4,
    ) {
        let metric = Metric::minkowski(3);
        let basis = enumerate_basis(3, 3);
        let vir = Virasoro::new(&basis, &metric, vec![q(p0), Q::new(p1.into(), 2.into()), q(p2)]).unwrap();
        let g = gram(&basis, &metric);
        for i in 0..basis.len() {
            let raised = vir.apply_l(-m, i);
            for j in 0..basis.len() {
                let lowered = vir.apply_l(m, j);
                prop_assert_eq!(g.pair(&raised, &SparseVec::unit(j)), g.pair(&SparseVec::unit(i), &lowered));
            }
        }
    }

    #[test]
    fn spectrum_is_two_level_minus_two_a(colors in 1usize..5, cutoff in 0usize..4, a_num in -2i64..4, a_den in 1i64..3) {
        let a = Q::new(a_num.into(), a_den.into());
        let basis = enumerate_basis(colors, cutoff);
        let m2 = build_m2(Gauge::LightCone, &basis, &Metric::euclidean(colors), &a, Execution::Sequential).unwrap();
        let rows = mass_spectrum(&m2, &basis).unwrap();
        let oracle = colored_partitions(cutoff, colors);
        prop_assert_eq!(rows.len(), cutoff + 1);
        for (level, row) in rows.iter().enumerate() {
            prop_assert_eq!(row.level, level);
            prop_assert_eq!(row.mass_squared.clone(), q(2 * level as i64) - a.clone() * q(2));
            prop_assert_eq!(BigUint::from(row.degeneracy), oracle[level].clone());
        }
    }
}

#[test]
fn gram_is_symmetric_block_diagonal_and_lightcone_positive() {
    for (metric, positive) in [(Metric::euclidean(3), true), (Metric::minkowski(3), false)] {
        let basis = enumerate_basis(3, 4);
        let g = gram(&basis, &metric);
        assert!(g.is_symmetric());
        assert!(g.is_block_diagonal());
        let sig = g.signature();
        assert_eq!(sig.dim(), basis.len());
        assert_eq!(sig.is_positive_definite(), positive);
    }
}

#[test]
fn covariant_and_lightcone_mass_values_agree() {
    let a = q(1);
    let lc = enumerate_basis(24, 2);
    let cov = enumerate_basis(26, 2);
    let lc_rows = mass_spectrum(&build_m2(Gauge::LightCone, &lc, &Metric::euclidean(24), &a, Execution::Parallel).unwrap(), &lc).unwrap();
    let cov_rows = mass_spectrum(&build_m2(Gauge::Covariant, &cov, &Metric::minkowski(26), &a, Execution::Parallel).unwrap(), &cov).unwrap();
    let values = |rows: &[stringfock::virasoro::SpectrumRow]| rows.iter().map(|r| r.mass_squared.clone()).collect::<Vec<_>>();
    assert_eq!(values(&lc_rows), values(&cov_rows));
    let degeneracies: Vec<usize> = cov_rows.iter().map(|r| r.degeneracy).collect();
    assert_eq!(degeneracies, [1, 26, 377]);
}

#[test]
fn central_charge_tracks_the_direction_count() {
    for d in [1usize, 2, 5, 10] {
        let metric = Metric::euclidean(d);
        let basis = enumerate_basis(d, 2);
        let vir = Virasoro::new(&basis, &metric, vec![Q::zero(); d]).unwrap();
        assert_eq!(vir.fit_central_charge().unwrap(), q(d as i64));
    }
}

#[test]
fn one_color_level_two_gram() {
    // ⟨α₋₂Ω, α₋₂Ω⟩ = 2 and ⟨α₋₁²Ω, α₋₁²Ω⟩ = 2·1·1 (two contractions)
    let basis = enumerate_basis(1, 2);
    let block = gram(&basis, &Metric::euclidean(1)).level_block(2);
    assert_eq!(block, vec![vec![q(2), q(0)], vec![q(0), q(2)]]);
}
