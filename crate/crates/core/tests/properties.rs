use metavqe::circuit::{meta_ansatz, processing_ansatz};
use metavqe::exact::{dense_matrix, LanczosConfig};
use metavqe::pauli::parse_hamiltonian;
use metavqe::workflows::{
    evaluate_profile, exact_energies, meta_loss, run_vqe_per_point, train_ga_vqe, train_meta_vqe, Init, ProfileMeta,
};
use metavqe::*;
use proptest::prelude::*;

fn pauli_sum(max_qubits: usize) -> impl Strategy<Value = PauliSum> {
    (1..=max_qubits).prop_flat_map(|n| {
        prop::collection::vec((-2.0..2.0f64, prop::collection::vec(0u8..4, n)), 1..10).prop_map(move |terms| {
            let terms = terms.into_iter().map(|(c, letters)| {
                let ops = letters.iter().enumerate().filter_map(|(q, &l)| match l {
                    1 => Some((q, Pauli::X)),
                    2 => Some((q, Pauli::Y)),
                    3 => Some((q, Pauli::Z)),
                    _ => None,
                });
                PauliTerm::new(c, PauliString::new(ops.collect::<Vec<_>>()).unwrap())
            });
            PauliSum::from_terms(n, terms.collect::<Vec<_>>()).unwrap()
        })
    })
}

fn random_state(n: usize, seed: u64) -> Statevector {
    let mut s = Statevector::zeros(n).unwrap();
    let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    for a in s.amplitudes_mut() {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        let re = (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        let im = (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        *a = C64::new(re, im);
    }
    let norm = s.norm_sqr().sqrt();
    s.amplitudes_mut().iter_mut().for_each(|a| *a /= norm);
    s
}

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    let angle = -7.0..7.0f64;
    prop_oneof![
        (0..n, angle.clone()).prop_map(|(target, angle)| Gate::Ry { target, angle }),
        (0..n, angle.clone()).prop_map(|(target, angle)| Gate::Rz { target, angle }),
        (0..n, 1..n.max(2)).prop_filter_map("needs two qubits", move |(c, off)| {
            (n > 1).then(|| Gate::Cnot {
                control: c,
                target: (c + off) % n,
            })
        }),
        (prop::collection::vec(0u8..3, n), angle).prop_map(|(letters, angle)| {
            let ops = letters.iter().enumerate().map(|(q, &l)| (q, [Pauli::X, Pauli::Y, Pauli::Z][l as usize]));
            Gate::pauli_exp(&PauliString::new(ops.collect::<Vec<_>>()).unwrap(), angle)
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pauli_sums_are_hermitian(h in pauli_sum(5)) {
        let m = dense_matrix(&h).unwrap();
        let gap = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(gap == 0.0);
    }

    #[test]
    fn matvec_matches_dense(h in pauli_sum(5), seed in any::<u64>()) {
        let v = random_state(h.nqubits(), seed);
        let hv = h.matvec(&v).unwrap();
        let m = dense_matrix(&h).unwrap();
        let dv = &m * nalgebra::DVector::from_column_slice(v.amplitudes());
        for (a, b) in hv.amplitudes().iter().zip(dv.iter()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn expectation_is_real_and_bounded(h in pauli_sum(5), seed in any::<u64>()) {
        let v = random_state(h.nqubits(), seed);
        let e = v.expectation(&h).unwrap();
        let bound: f64 = h.terms().iter().map(|t| t.coefficient.abs()).sum();
        prop_assert!(e.abs() <= bound + 1e-12);
    }

    #[test]
    fn print_parse_identity(h in pauli_sum(6)) {
        let back = parse_hamiltonian(&h.to_string()).unwrap();
        prop_assert_eq!(back, h);
    }

    #[test]
    fn gates_preserve_norm(gates in prop::collection::vec(gate(5), 1..20), seed in any::<u64>()) {
        let mut s = random_state(5, seed);
        for g in &gates {
            s.apply(g).unwrap();
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_undoes_gate(g in gate(4), seed in any::<u64>()) {
        let s0 = random_state(4, seed);
        let mut s = s0.clone();
        s.apply(&g).unwrap();
        s.apply(&g.inverse()).unwrap();
        for (a, b) in s.amplitudes().iter().zip(s0.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn gates_preserve_inner_products(g in gate(4), s1 in any::<u64>(), s2 in any::<u64>()) {
        let (mut a, mut b) = (random_state(4, s1), random_state(4, s2));
        let before = a.inner(&b).unwrap();
        a.apply(&g).unwrap();
        b.apply(&g).unwrap();
        prop_assert!((a.inner(&b).unwrap() - before).norm() < 1e-13);
    }

    #[test]
    fn family_is_affine(u in prop::collection::vec(-2.0..2.0f64, 2), w in prop::collection::vec(-2.0..2.0f64, 2), t in 0.0..1.0f64) {
        let fam = HamiltonianFamily::xxz(4).unwrap();
        let mix: Vec<f64> = u.iter().zip(&w).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let v = random_state(4, 9);
        let e = |p: &[f64]| v.expectation(&fam.at(p).unwrap()).unwrap();
        prop_assert!((e(&mix) - (t * e(&u) + (1.0 - t) * e(&w))).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn dense_and_lanczos_agree(h in pauli_sum(6)) {
        let d = ground_state_dense(&h).unwrap();
        let l = ground_state_lanczos(&h, &LanczosConfig::default()).unwrap();
        prop_assert!((d.energy - l.energy).abs() < 1e-8, "dense {} lanczos {}", d.energy, l.energy);
        prop_assert!(d.residual < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn parameter_shift_matches_finite_differences(
        n in 2usize..=5,
        gaussian in any::<bool>(),
        x in -1.0..1.0f64,
        seed in any::<u64>(),
    ) {
        let encoding = if gaussian { AngleEncoding::Gaussian(GaussianForm::Linear) } else { AngleEncoding::Linear };
        let c = meta_ansatz(n, 1, 1, "delta", encoding).unwrap();
        let h = build_xxz(n, x, 0.75).unwrap();
        let p: Vec<f64> = random_init(c.num_params(), seed).iter().map(|v| 0.3 * v).collect();
        let ps = param_shift_gradient(&c, &h, &[x], &p).unwrap();
        let fd = finite_diff_gradient(&c, &h, &[x], &p, 1e-4).unwrap();
        prop_assert_eq!(ps.evaluations, 2 * c.parameterized_sites());
        for (a, b) in ps.gradient.iter().zip(&fd.gradient) {
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }
    }

    #[test]
    fn lbfgs_solves_convex_quadratics(dim in 1usize..=168, seed in any::<u64>()) {
        // f(x) = sum_i d_i (x_i - c_i)^2 / 2 with condition number up to 100.
        let c = random_init(dim, seed);
        let d: Vec<f64> = random_init(dim, seed ^ 1).iter().map(|v| 1.0 + 99.0 * (v.abs() / std::f64::consts::PI)).collect();
        let m = minimize(
            |x| {
                let f = x.iter().zip(&c).zip(&d).map(|((x, c), d)| 0.5 * d * (x - c).powi(2)).sum();
                let g = x.iter().zip(&c).zip(&d).map(|((x, c), d)| d * (x - c)).collect();
                Ok((f, g))
            },
            &vec![0.0; dim],
            &OptimizerConfig { gradient_tolerance: 1e-9, function_tolerance: 1e-300, ..OptimizerConfig::default() },
        ).unwrap();
        prop_assert!(matches!(m.trace.termination, Termination::GradientConverged | Termination::FunctionConverged));
        for (x, c) in m.x.iter().zip(&c) {
            prop_assert!((x - c).abs() < 1e-5);
        }
        let values: Vec<f64> = m.trace.records.iter().map(|r| r.objective).collect();
        prop_assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }
}

fn xxz_grid(points: Vec<f64>) -> TrainingGrid {
    TrainingGrid::new("delta", points, vec![("field".into(), 0.75)]).unwrap()
}

#[test]
fn meta_loss_over_disjoint_union_is_additive() {
    let fam = HamiltonianFamily::xxz(4).unwrap();
    let c = meta_ansatz(4, 1, 1, "delta", AngleEncoding::Linear).unwrap();
    let p = random_init(c.num_params(), 5);
    let a = meta_loss(&c, &fam, &xxz_grid(vec![-1.0, -0.2, 0.5]), &p).unwrap();
    let b = meta_loss(&c, &fam, &xxz_grid(vec![-0.7, 0.9]), &p).unwrap();
    let ab = meta_loss(&c, &fam, &xxz_grid(vec![-1.0, -0.7, -0.2, 0.5, 0.9]), &p).unwrap();
    assert!((ab.value - a.value - b.value).abs() < 1e-12);
    for k in 0..p.len() {
        assert!((ab.gradient[k] - a.gradient[k] - b.gradient[k]).abs() < 1e-12);
    }
}

#[test]
fn meta_loss_single_and_repeated_point() {
    let fam = HamiltonianFamily::xxz(3).unwrap();
    let c = meta_ansatz(3, 1, 1, "delta", AngleEncoding::Linear).unwrap();
    let p = random_init(c.num_params(), 6);
    let one = meta_loss(&c, &fam, &xxz_grid(vec![0.3]), &p).unwrap();
    let direct = param_shift_gradient(&c, &fam.at(&[0.3, 0.75]).unwrap(), &[0.3], &p).unwrap();
    assert_eq!(one.value, direct.value);
    assert_eq!(one.gradient, direct.gradient);
    let two = meta_loss(&c, &fam, &xxz_grid(vec![0.3, 0.3]), &p).unwrap();
    assert_eq!(two.value, 2.0 * one.value);
}

#[test]
fn meta_loss_at_zero_parameters_is_analytic() {
    let fam = HamiltonianFamily::xxz(4).unwrap();
    let c = meta_ansatz(4, 2, 2, "delta", AngleEncoding::Linear).unwrap();
    let grid = TrainingGrid::equispaced("delta", -1.1, 1.1, 20, vec![("field".into(), 0.75)]).unwrap();
    let loss = meta_loss(&c, &fam, &grid, &vec![0.0; c.num_params()]).unwrap();
    let want: f64 = grid.points.iter().map(|d| 4.0 * d + 4.0 * 0.75).sum();
    assert!((loss.value - want).abs() < 1e-12);
}

#[test]
fn evaluate_on_training_points_reproduces_final_loss() {
    let fam = HamiltonianFamily::xxz(2).unwrap();
    let grid = TrainingGrid::equispaced("delta", -1.0, 1.0, 3, vec![("field".into(), 0.75)]).unwrap();
    let (c, r) = train_meta_vqe(&fam, &grid, 1, 1, AngleEncoding::Linear, &OptimizerConfig::default()).unwrap();
    assert!(r.final_loss <= r.trace.records[0].objective);
    let exact = exact_energies(&fam, &grid).unwrap();
    let meta = ProfileMeta { algorithm: "meta".into(), n: 2, l1: 1, l2: 1, seed: 0 };
    let p = evaluate_profile(&c, &r.params, &fam, &grid, &exact, &meta, r.trace.termination).unwrap();
    let sum: f64 = p.energies().iter().sum();
    assert!((sum - r.final_loss).abs() < 1e-10);
    assert!(r.final_loss >= exact.iter().sum::<f64>() - 1e-10);
    let back = workflows::TrainResult::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn ga_profile_is_affine_and_warm_starts_never_worsen() {
    let fam = HamiltonianFamily::xxz(4).unwrap();
    let train = TrainingGrid::equispaced("delta", -1.1, 1.1, 5, vec![("field".into(), 0.75)]).unwrap();
    let test = TrainingGrid::equispaced("delta", -1.1, 1.1, 9, vec![("field".into(), 0.75)]).unwrap();
    let cfg = OptimizerConfig { max_iterations: 200, ..OptimizerConfig::default() };
    let (c, r) = train_ga_vqe(&fam, &train, 2, &cfg).unwrap();
    assert_eq!(c.num_params(), processing_ansatz(4, 2).unwrap().num_params());
    let exact = exact_energies(&fam, &test).unwrap();
    let meta = ProfileMeta { algorithm: "ga".into(), n: 4, l1: 0, l2: 2, seed: 0 };
    let ga = evaluate_profile(&c, &r.params, &fam, &test, &exact, &meta, r.trace.termination).unwrap();
    let e = ga.energies();
    let x = ga.meta_values();
    for w in 0..e.len() - 2 {
        let slope_a = (e[w + 1] - e[w]) / (x[w + 1] - x[w]);
        let slope_b = (e[w + 2] - e[w + 1]) / (x[w + 2] - x[w + 1]);
        assert!((slope_a - slope_b).abs() < 1e-9);
    }
    let opt = run_vqe_per_point(&c, &fam, &test, &exact, &Init::WarmStart(r.params.clone()), &cfg, &meta).unwrap();
    for (g, o) in ga.rows.iter().zip(&opt.rows) {
        assert!(o.energy <= g.energy + 1e-10);
        assert!(o.energy >= o.exact - 1e-8);
    }
}

#[test]
fn random_vqe_is_deterministic() {
    let fam = HamiltonianFamily::xxz(3).unwrap();
    let c = processing_ansatz(3, 1).unwrap();
    let test = xxz_grid(vec![-0.5, 0.5]);
    let exact = exact_energies(&fam, &test).unwrap();
    let meta = ProfileMeta { algorithm: "vqe".into(), n: 3, l1: 0, l2: 1, seed: 4 };
    let init = Init::Random { seed: 4, restarts: 2 };
    let cfg = OptimizerConfig::default();
    let a = run_vqe_per_point(&c, &fam, &test, &exact, &init, &cfg, &meta).unwrap();
    let b = run_vqe_per_point(&c, &fam, &test, &exact, &init, &cfg, &meta).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn two_site_chain_reaches_the_open_chain_ground_state() {
    // The periodic two-site chain doubles the bond, so halve it to get XX + YY.
    let h = parse_hamiltonian("qubits 2\n1 X0 X1\n1 Y0 Y1\n").unwrap();
    let c = processing_ansatz(2, 2).unwrap();
    let mut best = f64::INFINITY;
    for seed in 0..4 {
        let x0 = random_init(c.num_params(), seed);
        let m = minimize(
            |x| {
                let r = param_shift_gradient(&c, &h, &[], x)?;
                Ok((r.value, r.gradient))
            },
            &x0,
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert!(m.value >= -2.0 - 1e-10);
        best = best.min(m.value);
    }
    assert!((best + 2.0).abs() < 1e-6, "best {best}");
}
