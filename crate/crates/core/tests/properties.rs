//! Cross-module invariants and randomized property tests.

use proptest::prelude::*;

use freedim::covering::{
    greedy_net, max_packing, orbit_vs_trace_comparison, Metric, PointCloud,
};
use freedim::matrixcore::{
    fit_szarek_constant, gue_hermitian, haar_unitary, operator_norm, tuple_op_norm,
    tuple_trace_norm, HermitianMatrix, MatrixTuple, OrbitOpts,
};
use freedim::mfcheck::two_projection_oracle;
use freedim::microstates::{
    compose_free_product, exact_witness, semi_membership_defect, target_norms, Microstate,
    MicrostateParams, Presentation,
};
use freedim::ncpoly::{parse_poly, NcPolynomial, Word};
use freedim::C64;

fn arb_coeff() -> impl Strategy<Value = C64> {
    // Short decimal coefficients survive the printer round trip exactly and
    // keep the test focused on structure rather than float formatting.
    (-8i32..=8, -8i32..=8).prop_map(|(re, im)| C64::new(re as f64 / 4.0, im as f64 / 4.0))
}

fn arb_word(n: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..n as u16, 0..5).prop_map(Word)
}

fn arb_poly(n: usize) -> impl Strategy<Value = NcPolynomial> {
    prop::collection::vec((arb_word(n), arb_coeff()), 1..6)
        .prop_map(move |terms| NcPolynomial::from_terms(terms, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_parse_round_trip(p in arb_poly(3)) {
        let printed = p.to_string();
        let back = parse_poly(&printed, 3).unwrap();
        prop_assert_eq!(p, back);
    }

    #[test]
    fn adjoint_is_involutive(p in arb_poly(2)) {
        prop_assert_eq!(p.adjoint().adjoint(), p);
    }

    #[test]
    fn trace_norm_bounded_by_op_norm(seed in 0u64..500, n in 1usize..4, k in 2usize..6) {
        let mats: Vec<HermitianMatrix> = (0..n)
            .map(|i| gue_hermitian(k, seed * 10 + i as u64, 1.0))
            .collect();
        let t = MatrixTuple::new(mats).unwrap();
        prop_assert!(tuple_trace_norm(&t) <= (n as f64).sqrt() * tuple_op_norm(&t) + 1e-12);
    }

    #[test]
    fn orbit_bounded_by_trace_distance(seed in 0u64..100) {
        let a = MatrixTuple::new(vec![gue_hermitian(4, seed, 1.0)]).unwrap();
        let b = MatrixTuple::new(vec![gue_hermitian(4, seed + 5000, 1.0)]).unwrap();
        let (d, _) = freedim::matrixcore::orbit_distance(&a, &b, &OrbitOpts::default()).unwrap();
        prop_assert!(d <= a.trace_distance(&b).unwrap() + 1e-10);
    }
}

#[test]
fn universality_bound_over_projection_pairs() {
    // Every pair of projections represents the universal two-projection
    // algebra: concrete word norms never exceed the oracle value.
    let words: Vec<NcPolynomial> = [
        "X1*X2*X1",
        "X2*X1*X2",
        "X1*X2 - X2*X1",
        "X1*X2*X1*X2",
        "X1 + X2",
        "X1*X2*X1*X2*X1",
    ]
    .iter()
    .map(|s| parse_poly(s, 2).unwrap())
    .collect();
    let oracles: Vec<f64> = words
        .iter()
        .map(|w| two_projection_oracle(w).unwrap().value)
        .collect();
    let mut checked = 0usize;
    for seed in 0..1000u64 {
        let k = 2 + (seed % 11) as usize; // up to 12
        let r1 = 1 + (seed as usize % k);
        let r2 = 1 + ((seed / 11) as usize % k);
        let mk = |rank: usize, s: u64| {
            let mut diag = vec![0.0; k];
            for d in diag.iter_mut().take(rank) {
                *d = 1.0;
            }
            HermitianMatrix::from_real_diagonal(&diag).conjugate(&haar_unitary(k, s))
        };
        let t = MatrixTuple::new(vec![mk(r1, 3000 + seed), mk(r2, 7000 + seed)]).unwrap();
        for (w, oracle) in words.iter().zip(oracles.iter()) {
            let val = operator_norm(&w.evaluate(&t).unwrap()).unwrap();
            assert!(
                val <= oracle + 1e-9,
                "seed {seed}: ‖{w}‖ = {val} > oracle {oracle}"
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 6000);
}

#[test]
fn free_product_padding_preserves_one_sided_defect() {
    // Block-diagonal norms are maxima of block norms, so the one-sided
    // defect of the padded tuple stays below the worst constituent's.
    let p = Presentation::FreeProduct {
        left: Box::new(Presentation::Spectrum {
            points: vec![0.0, 1.0],
        }),
        right: Box::new(Presentation::Spectrum {
            points: vec![0.0, 1.0],
        }),
    };
    let battery = p.recommended_battery(3).unwrap();
    let targets = target_norms(&p, &battery).unwrap();
    assert!(!targets.uncertain);

    let mk_pair = |k: usize, seed: u64| -> (Microstate, Microstate) {
        let left = exact_witness(
            &Presentation::Spectrum {
                points: vec![0.0, 1.0],
            },
            k,
            seed,
        )
        .unwrap();
        let right_raw = exact_witness(
            &Presentation::Spectrum {
                points: vec![0.0, 1.0],
            },
            k,
            seed + 1,
        )
        .unwrap()
        .conjugate(&haar_unitary(k, seed + 2));
        let params = MicrostateParams::new(k, 0.1, p.default_radius(), battery.clone());
        (
            Microstate {
                tuple: left,
                defect: 0.0,
                params: params.clone(),
            },
            Microstate {
                tuple: right_raw,
                defect: 0.0,
                params,
            },
        )
    };

    for seed in 0..10u64 {
        let base_pair = mk_pair(8, 100 * seed);
        let base = {
            let mut mats = base_pair.0.tuple.mats().to_vec();
            mats.extend(base_pair.1.tuple.mats().iter().cloned());
            MatrixTuple::new(mats).unwrap()
        };
        let blocks: Vec<(Microstate, Microstate)> =
            (0..3).map(|q| mk_pair(4, 100 * seed + 10 + q)).collect();
        let blocks_left: Vec<Microstate> = blocks.iter().map(|(l, _)| l.clone()).collect();
        let blocks_right: Vec<Microstate> = blocks.iter().map(|(_, r)| r.clone()).collect();
        let padded = compose_free_product(&base, 1, &blocks_left, &blocks_right).unwrap();

        let params_base =
            MicrostateParams::new(base.dim(), 0.1, p.default_radius(), battery.clone());
        let params_padded =
            MicrostateParams::new(padded.dim(), 0.1, p.default_radius(), battery.clone());
        let mut worst_in = semi_membership_defect(&base, &targets.values, &params_base).unwrap();
        for (l, r) in &blocks {
            let joint = {
                let mut mats = l.tuple.mats().to_vec();
                mats.extend(r.tuple.mats().iter().cloned());
                MatrixTuple::new(mats).unwrap()
            };
            let params_block =
                MicrostateParams::new(joint.dim(), 0.1, p.default_radius(), battery.clone());
            worst_in = worst_in
                .max(semi_membership_defect(&joint, &targets.values, &params_block).unwrap());
        }
        let out = semi_membership_defect(&padded, &targets.values, &params_padded).unwrap();
        assert!(
            out <= worst_in + 1e-12,
            "seed {seed}: padded {out} > inputs {worst_in}"
        );
    }
}

#[test]
fn unitary_net_fit_and_comparison_logged() {
    // Empirical net constant at k = 2 and the trace-vs-orbit covering
    // comparison; the constant is not asserted, only reported.
    let (c_hat, table) = fit_szarek_constant(2, &[1.0, 0.7, 0.5], 400, 5);
    assert!(c_hat >= 1.0);
    for w in table.windows(2) {
        assert!(w[1].1 >= w[0].1, "net counts grow as delta shrinks");
    }
    println!("fitted unitary net constant at k=2: {c_hat:.3}; table {table:?}");

    let pts: Vec<MatrixTuple> = (0..40)
        .map(|j| MatrixTuple::new(vec![gue_hermitian(2, 40 + j, 1.0)]).unwrap())
        .collect();
    let cloud = PointCloud::new(pts, "gue k2").unwrap();
    let cmp = orbit_vs_trace_comparison(&cloud, 0.3, 3.0, c_hat, &OrbitOpts::default()).unwrap();
    println!(
        "trace net at 3ω: {}, orbit net at ω: {}, log bound {:.2}, satisfied: {}",
        cmp.trace_net_3omega, cmp.orbit_net_omega, cmp.log_unitary_net_bound, cmp.satisfied
    );
}

#[test]
fn covering_estimates_deterministic() {
    let pts: Vec<MatrixTuple> = (0..25)
        .map(|j| MatrixTuple::new(vec![gue_hermitian(3, 900 + j, 1.0)]).unwrap())
        .collect();
    let cloud = PointCloud::new(pts, "determinism").unwrap();
    let opts = OrbitOpts {
        seed: 4,
        ..OrbitOpts::default()
    };
    for metric in [Metric::OpNorm, Metric::Trace2, Metric::Orbit2] {
        let a = (
            greedy_net(&cloud, 0.5, metric, &opts).unwrap(),
            max_packing(&cloud, 0.5, metric, &opts).unwrap(),
        );
        let b = (
            greedy_net(&cloud, 0.5, metric, &opts).unwrap(),
            max_packing(&cloud, 0.5, metric, &opts).unwrap(),
        );
        assert_eq!(a, b);
    }
}
