//! Acceptance criteria 1-10. Each test prints one PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture --test-threads=1`.

use pu_trihamiltonian::dynamics::propagate_linear;
use pu_trihamiltonian::dynamics::{
    conservation_drift, integrate_rk4, interaction_field_jacobian, lie_derivative_residual,
    solve_exact, InteractionSpec, Potential,
};
use pu_trihamiltonian::hierarchy::{
    conservation_defect, hamiltonian_n_closed, hamiltonian_n_recursive, hamiltonian_n_symmetry,
};
use pu_trihamiltonian::model::{
    flow_operator, hamiltonian_form, poisson_bracket, poisson_tensor, FrequencyTriple, PUParams,
    QuadraticForm, StateVector,
};
use pu_trihamiltonian::positivity::{
    block_sum, region_scan, tensor_weight_verdict, Axis, FixedAxis, GridSpec, VerdictMethod,
};
use pu_trihamiltonian::representations::{
    build_representation, consistency_error, equivalence_check, representation_positivity, Branch,
    EquationClass, FreeChoices, Kind,
};
use pu_trihamiltonian::sampling::{random_params, random_state, rng};
use pu_trihamiltonian::symmetries::{commutator, generators, symmetry_action_on_form};
use pu_trihamiltonian::PuError;
use rand::Rng;

fn report(n: u32, name: &str, ok: bool, detail: String) {
    println!(
        "{} criterion {n}: {name} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

/// (14, 49, 36) followed by 20 seeded non-degenerate draws.
fn parameter_sets() -> Vec<PUParams> {
    let mut r = rng(20);
    let mut out = vec![PUParams::new(14.0, 49.0, 36.0)];
    out.extend((0..20).map(|_| random_params(&mut r).1));
    out
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn criterion_01_determinants() {
    let mut worst = 0.0_f64;
    for p in parameter_sets() {
        let g = p.gamma;
        for (k, want) in [(1, 1.0), (2, g.powi(-4)), (3, g.powi(-8))] {
            worst = worst.max(rel(poisson_tensor(k, &p).unwrap().determinant(), want));
        }
    }
    report(
        1,
        "Poisson tensor determinants",
        worst < 1e-10,
        format!("max rel err {worst:.2e}, tol 1e-10"),
    );
}

#[test]
fn criterion_02_flow_equality() {
    let mut worst = 0.0_f64;
    for p in parameter_sets() {
        let f = flow_operator(&p);
        for k in 1..=3 {
            let ja =
                poisson_tensor(k, &p).unwrap().matrix() * hamiltonian_form(k, &p).unwrap().matrix();
            worst = worst.max((ja - f.matrix()).amax());
        }
    }
    report(
        2,
        "tri-Hamiltonian flow equality",
        worst < 1e-9,
        format!("max entry err {worst:.2e}, tol 1e-9"),
    );
}

#[test]
fn criterion_03_abelian_algebra() {
    let mut worst = 0.0_f64;
    let mut count = 0;
    for p in parameter_sets() {
        let xs = generators(&p);
        count = 0;
        for i in 0..6 {
            for j in i + 1..6 {
                worst = worst.max(commutator(&xs[i], &xs[j]).max_abs());
                count += 1;
            }
        }
    }
    report(
        3,
        "Abelian symmetry algebra",
        worst < 1e-9 && count == 15,
        format!("{count} commutators per set, max entry {worst:.2e}, tol 1e-9"),
    );
}

#[test]
fn criterion_04_action_table() {
    let mut worst = 0.0_f64;
    for p in parameter_sets() {
        let xs = generators(&p);
        let h: Vec<QuadraticForm> = (1..=3).map(|k| hamiltonian_form(k, &p).unwrap()).collect();
        let mut cases: Vec<(usize, usize, QuadraticForm)> = Vec::new();
        for x in 0..3 {
            for i in 0..3 {
                cases.push((x, i, QuadraticForm::zero()));
            }
        }
        for i in 0..3 {
            cases.push((3, i, h[i]));
        }
        cases.extend([(4, 0, h[1]), (4, 1, h[2]), (5, 0, h[2])]);
        for (x, i, want) in cases {
            let got = symmetry_action_on_form(&xs[x], &h[i]);
            worst = worst.max((got - want).max_abs() / h[i].max_abs().max(want.max_abs()));
        }
    }
    report(
        4,
        "symmetry action table",
        worst < 1e-9,
        format!("max rel err {worst:.2e}, tol 1e-9"),
    );
}

#[test]
fn criterion_05_hierarchy() {
    let (mut routes, mut conserved, mut involution) = (0.0_f64, 0.0_f64, 0.0_f64);
    for p in parameter_sets() {
        let f = flow_operator(&p);
        let tensors: Vec<_> = (1..=3).map(|k| poisson_tensor(k, &p).unwrap()).collect();
        let mut hs = Vec::new();
        for n in 1..=10 {
            let closed = hamiltonian_n_closed(n, &p).unwrap();
            let recursive = hamiltonian_n_recursive(n, &p).unwrap();
            let symmetry = hamiltonian_n_symmetry(n, &p).unwrap();
            routes = routes
                .max(closed.rel_diff(&recursive))
                .max(closed.rel_diff(&symmetry))
                .max(recursive.rel_diff(&symmetry));
            conserved = conserved
                .max(conservation_defect(&closed, &p).max_abs() / (closed.max_abs() * f.max_abs()));
            hs.push(closed);
        }
        for j in &tensors {
            for a in 0..hs.len() {
                for b in a + 1..hs.len() {
                    let scale = hs[a].max_abs() * hs[b].max_abs() * j.matrix().amax();
                    involution =
                        involution.max(poisson_bracket(&hs[a], &hs[b], j).max_abs() / scale);
                }
            }
        }
    }
    let ok = routes < 1e-7 && conserved < 1e-8 && involution < 1e-8;
    report(
        5,
        "hierarchy routes, conservation, involution (n=1..10)",
        ok,
        format!("routes {routes:.2e} (tol 1e-7), conservation {conserved:.2e} (tol 1e-8), involution {involution:.2e} (tol 1e-8)"),
    );
}

#[test]
fn criterion_06_block_identity() {
    let mut worst = 0.0_f64;
    let mut r = rng(6);
    let mut sets = vec![FrequencyTriple::new([3.0, 2.0, 1.0]).unwrap()];
    sets.extend((0..20).map(|_| random_params(&mut r).0));
    for f in sets {
        let p = f.params();
        let (a, b, g) = (p.alpha, p.beta, p.gamma);
        let lhs = block_sum([1.0, 1.0, 1.0], &f).unwrap();
        let rhs = 2.0
            * ((a * a - 2.0 * b) * hamiltonian_form(1, &p).unwrap()
                + (3.0 - a * b / g) * hamiltonian_form(2, &p).unwrap()
                + (a / g) * hamiltonian_form(3, &p).unwrap());
        worst = worst.max(lhs.rel_diff(&rhs));
    }
    report(
        6,
        "block identity",
        worst < 1e-9,
        format!("max rel err {worst:.2e}, tol 1e-9"),
    );
}

fn grid(fixed: &str, value: f64, a1: (&str, f64, f64), a2: (&str, f64, f64), n: usize) -> GridSpec {
    GridSpec {
        axis1: Axis {
            name: a1.0.into(),
            min: a1.1,
            max: a1.2,
            n,
        },
        axis2: Axis {
            name: a2.0.into(),
            min: a2.1,
            max: a2.2,
            n,
        },
        fixed: FixedAxis {
            name: fixed.into(),
            value,
        },
    }
}

#[test]
fn criterion_07_positivity() {
    let f = FrequencyTriple::new([3.0, 2.0, 1.0]).unwrap();
    let main = region_scan(
        &grid("c1", 1.0, ("c2", -40.0, 0.0), ("c3", 0.0, 200.0), 200),
        &f,
    )
    .unwrap();
    let agree = main.off_band_disagreements() == 0;
    let mut plane_positive = 0;
    for (fixed, a1, a2) in [
        ("c1", ("c2", -50.0, 50.0), ("c3", -200.0, 200.0)),
        ("c2", ("c1", -2.0, 2.0), ("c3", -200.0, 200.0)),
        ("c3", ("c1", -2.0, 2.0), ("c2", -50.0, 50.0)),
    ] {
        let scan = region_scan(&grid(fixed, 0.0, a1, a2, 200), &f).unwrap();
        plane_positive += scan.positive_count();
        plane_positive += scan
            .cells
            .iter()
            .filter(|c| c.eigen_positive == Some(true))
            .count();
    }
    let witness = tensor_weight_verdict(1.0, -20.0, 150.0, &f, VerdictMethod::Prefactor).unwrap();
    let witness_eigen =
        tensor_weight_verdict(1.0, -20.0, 150.0, &f, VerdictMethod::Eigenvalue).unwrap();
    let ok = agree && plane_positive == 0 && witness.positive;
    report(
        7,
        "positivity criteria",
        ok,
        format!(
            "200x200 grid: {} positive cells, {} off-band disagreements; zero planes: {plane_positive} positive cells; \
             witness (1,-20,150): prefactor positive={}, min eigenvalue {:.3e}",
            main.positive_count(),
            main.off_band_disagreements(),
            witness.positive,
            witness_eigen.min_eigenvalue
        ),
    );
}

fn pattern_and_consistency(p: &PUParams, ch: &FreeChoices, states: &[StateVector]) -> (bool, f64) {
    let rep = build_representation(p, ch).unwrap();
    let traj = propagate_linear(p, &states[0], 0.01, 400).unwrap();
    let classes = equivalence_check(&rep, &traj, 1e-7).map(|r| r.classes);
    let ok = classes.as_ref().is_ok_and(|c| *c == rep.kind.pattern());
    (ok, consistency_error(p, ch, states).unwrap())
}

#[test]
fn criterion_08_representations() {
    use EquationClass::*;
    let mut r = rng(8);
    let states: Vec<StateVector> = (0..100).map(|_| random_state(&mut r)).collect();
    let mut details = Vec::new();
    let mut ok = true;

    // Ta2: random frequencies, positive kinetic coefficients, every valid permutation family.
    let (mut ta2_n, mut ta2_cons, mut ta2_pos) = (0, 0.0_f64, true);
    let perm_sets = [
        [[1, 2, 3], [1, 3, 2], [2, 3, 1]],
        [[2, 1, 3], [3, 1, 2], [3, 2, 1]],
        [[1, 3, 2], [2, 3, 1], [1, 2, 3]],
    ];
    for _ in 0..10 {
        let (f, p) = random_params(&mut r);
        let a = [
            r.gen_range(0.1..3.0),
            r.gen_range(0.1..3.0),
            r.gen_range(0.1..3.0),
        ];
        for perms in perm_sets {
            let ch = FreeChoices::Ta2 { a, perms };
            let (pat, cons) = pattern_and_consistency(&p, &ch, &states);
            ok &= pat;
            ta2_cons = ta2_cons.max(cons);
            ta2_pos &= representation_positivity(&p, &ch).unwrap().positive;
            ta2_n += 1;
            let _ = f;
        }
    }
    ok &= ta2_pos && ta2_cons < 1e-7;
    details.push(format!(
        "Ta2 {ta2_n} draws: pattern (PU,PU,PU), positive={ta2_pos}, consistency {ta2_cons:.1e}"
    ));

    // Tb1: real branches need beta < 0.
    let (mut tb_n, mut tb_cons, mut tb_never_pos) = (0, 0.0_f64, true);
    let mut attempts = 0;
    while tb_n < 40 && attempts < 10_000 {
        attempts += 1;
        let p = PUParams::new(
            r.gen_range(0.1..5.0),
            r.gen_range(-10.0..-1.5),
            r.gen_range(0.1..5.0),
        );
        for (s1, s2) in [
            (Branch::Plus, Branch::Plus),
            (Branch::Plus, Branch::Minus),
            (Branch::Minus, Branch::Plus),
            (Branch::Minus, Branch::Minus),
        ] {
            let ch = FreeChoices::Tb1 {
                tau2_sign: s1,
                g3_sign: s2,
            };
            match build_representation(&p, &ch) {
                Err(PuError::ComplexBranch(_)) => continue,
                Err(e) => panic!("{e}"),
                Ok(_) => {}
            }
            let (pat, cons) = pattern_and_consistency(&p, &ch, &states);
            ok &= pat;
            tb_cons = tb_cons.max(cons);
            tb_never_pos &= !representation_positivity(&p, &ch).unwrap().positive;
            tb_n += 1;
        }
    }
    ok &= tb_n >= 10 && tb_never_pos && tb_cons < 1e-7;
    details.push(format!("Tb1 {tb_n} real-branch draws: pattern (PU,PU,trivial), never positive={tb_never_pos}, consistency {tb_cons:.1e}"));

    // Tc1: random frequencies and projections, complex branches skipped.
    let (mut tc_n, mut tc_cons) = (0, 0.0_f64);
    let mut attempts = 0;
    while tc_n < 20 && attempts < 10_000 {
        attempts += 1;
        let (_, p) = random_params(&mut r);
        let ch = FreeChoices::Tc1 {
            mu0: r.gen_range(0.2..2.0),
            nu0: r.gen_range(-1.5..1.5),
            tau0: r.gen_range(0.2..1.5),
            kappa_sign: if r.gen_bool(0.5) {
                Branch::Plus
            } else {
                Branch::Minus
            },
        };
        match build_representation(&p, &ch) {
            Err(PuError::ComplexBranch(_)) => continue,
            Err(e) => panic!("{e}"),
            Ok(_) => {}
        }
        let (pat, cons) = pattern_and_consistency(&p, &ch, &states);
        ok &= pat;
        tc_cons = tc_cons.max(cons);
        tc_n += 1;
    }
    ok &= tc_n >= 10 && tc_cons < 1e-7;
    details.push(format!(
        "Tc1 {tc_n} draws: pattern (PU,trivial,trivial), consistency {tc_cons:.1e}"
    ));

    assert_eq!(Kind::Tb1.pattern(), [PuEquivalent, PuEquivalent, Trivial]);
    assert_eq!(Kind::Tc1.pattern(), [PuEquivalent, Trivial, Trivial]);
    report(8, "representations", ok, details.join("; "));
}

#[test]
fn criterion_09_dynamics() {
    let f = FrequencyTriple::new([3.0, 2.0, 1.0]).unwrap();
    let p = f.params();
    let init = StateVector::new(0.3, -0.2, 0.5, 0.1, -0.4, 0.2);
    let sol = solve_exact(&f, &init).unwrap();
    let err = |dt: f64| {
        let tr = integrate_rk4(&p, &init, 20.0, dt, None).unwrap();
        tr.times
            .iter()
            .zip(&tr.states)
            .map(|(t, s)| (s - sol.eval(*t)).amax())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-3), err(2e-3));
    let ratio = e2 / e1;
    let tr = integrate_rk4(&p, &init, 50.0, 1e-3, None).unwrap();
    let forms: Vec<_> = (1..=3).map(|k| hamiltonian_form(k, &p).unwrap()).collect();
    let drift = conservation_drift(&tr, &forms)
        .into_iter()
        .fold(0.0, f64::max);
    let ok = e1 < 1e-6 && (12.0..=20.0).contains(&ratio) && drift < 1e-8;
    report(
        9,
        "RK4 accuracy, convergence, conservation",
        ok,
        format!("max err {e1:.2e} (tol 1e-6), ratio err(2e-3)/err(1e-3) {ratio:.2}, drift {drift:.2e} (tol 1e-8)"),
    );
}

#[test]
fn criterion_10_interaction() {
    let p = PUParams::new(14.0, 49.0, 36.0);
    let tensors: Vec<_> = (1..=3).map(|k| poisson_tensor(k, &p).unwrap()).collect();
    let w = InteractionSpec::quartic(1.0, 0);
    let e0 = StateVector::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let jac = interaction_field_jacobian(&p, Some(&w), &e0);
    let r1 = lie_derivative_residual(&jac, &tensors[0]).amax();
    let r2 = lie_derivative_residual(&jac, &tensors[1]);
    let r3 = lie_derivative_residual(&jac, &tensors[2]).amax();
    let pattern =
        (r2[(5, 3)] - 1.0 / 12.0).abs() < 1e-12 && (r2[(3, 5)] + 1.0 / 12.0).abs() < 1e-12;
    let mut ok = r1 < 1e-12 && pattern && r2.amax() > 1e-6 && r3 > 1e-6;

    let mut r = rng(10);
    let mut q_only_j1 = 0.0_f64;
    let mut derivative_min = f64::INFINITY;
    for _ in 0..100 {
        let s = random_state(&mut r);
        q_only_j1 = q_only_j1.max(
            lie_derivative_residual(&interaction_field_jacobian(&p, Some(&w), &s), &tensors[0])
                .amax(),
        );
        for slot in 1..6 {
            let ws = InteractionSpec {
                potential: Potential::Quartic { lambda: 1.0 },
                slot,
            };
            if ws.d2w(s[slot]).abs() < 1e-6 {
                continue;
            }
            let jac = interaction_field_jacobian(&p, Some(&ws), &s);
            for j in &tensors {
                derivative_min = derivative_min.min(lie_derivative_residual(&jac, j).amax());
            }
        }
    }
    ok &= q_only_j1 < 1e-12 && derivative_min > 1e-9;
    report(
        10,
        "interaction Poisson property",
        ok,
        format!(
            "W(q): J1 residual {r1:.1e}, J2 (6,4)={:.6}, J3 max {r3:.3e}; random states J1 max {q_only_j1:.1e}; \
             derivative slots min residual {derivative_min:.2e}",
            r2[(5, 3)]
        ),
    );
}
