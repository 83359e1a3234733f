//! End-to-end gate for the engine.  Each test pins one external guarantee —
//! exact registry verification, necessity of the carried t-rule, the split
//! of the generic ansatz, transform functoriality, gauge invariance, numeric
//! agreement, grid-drift convergence, and cross-case overlaps — and prints
//! one PASS line with the measured numbers.

use std::time::{Duration, Instant};

use conslaw_core::{
    all_cases, case, case_instances, classifying_residual, determining_system, diff, equal,
    from_characteristic, sample_on_shell, simulate, substitute, track_conserved,
    transform_conserved_vector, transform_system, trivial_shift, verify_conservation_law,
    verify_potential_system, ArgVar, Bindings, Boundary, CaseInstance, Characteristic,
    ConservedVector, Dep, DifferentialSystem, EquivTransform, Expr, FuncInstance, GridRun,
    Indeterminate, ModelBuilder, PDEModel, Rat, TableCase, DEFAULT_CLOSURE_ORDER,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PI: f64 = std::f64::consts::PI;

fn assert_law_holds(sys: &DifferentialSystem, cv: &ConservedVector, what: &str) {
    let rep = verify_conservation_law(sys, cv, DEFAULT_CLOSURE_ORDER).unwrap();
    assert!(rep.holds, "{what}: residual {}", rep.residual);
}

/// Replace the free constant `eps` by a concrete integer in a case's law and
/// system.
fn pin_eps(tc: &TableCase, value: i64) -> (DifferentialSystem, ConservedVector) {
    let b = Bindings::new().atom(Indeterminate::param("eps"), Expr::int(value));
    let sub = |e: &Expr| substitute(e, &b).unwrap();
    let law = ConservedVector::new(sub(&tc.law.density), sub(&tc.law.flux));
    let levels: Vec<_> = tc
        .system
        .levels()
        .iter()
        .map(|lv| conslaw_core::PotentialLevel {
            dep: lv.dep,
            x_rhs: sub(&lv.x_rhs),
            t_rhs: lv.t_rhs.as_ref().map(|g| sub(g)),
        })
        .collect();
    let system = if levels.is_empty() {
        DifferentialSystem::base(tc.system.model().clone())
    } else {
        DifferentialSystem::with_levels(tc.system.model().clone(), levels).unwrap()
    };
    (system, law)
}

#[test]
fn registry_verifies_every_case_exactly() {
    let start = Instant::now();
    let mut runs = 0usize;
    for tc in all_cases().unwrap() {
        assert_law_holds(&tc.system, &tc.law, &format!("case {}", tc.id));
        runs += 1;
        if tc.system.model().ctx().params().any(|p| p == "eps") {
            for value in [0, 1, -1] {
                let (system, law) = pin_eps(&tc, value);
                assert_law_holds(&system, &law, &format!("case {} at eps={value}", tc.id));
                runs += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(runs >= 16, "only {runs} verification runs");
    assert!(elapsed < Duration::from_secs(10), "registry verification took {elapsed:.2?}");
    println!("criterion 1: PASS — {runs} exact symbolic verifications in {elapsed:.2?}");
}

#[test]
fn carried_t_rule_is_load_bearing() {
    // every layered system is cross-derivative compatible, and dropping the
    // first level's t-rule must break every dotted case's law
    let mut doubles = 0usize;
    for tc in all_cases().unwrap() {
        assert!(
            verify_potential_system(&tc.extended, DEFAULT_CLOSURE_ORDER).unwrap(),
            "case {} extended system is incompatible",
            tc.id
        );
        if tc.parent.is_none() {
            continue;
        }
        let mut levels = tc.system.levels().to_vec();
        levels[0].t_rhs = None;
        let crippled =
            DifferentialSystem::with_levels(tc.system.model().clone(), levels).unwrap();
        let rep = verify_conservation_law(&crippled, &tc.law, DEFAULT_CLOSURE_ORDER).unwrap();
        assert!(!rep.holds, "case {} still verifies without the carried t-rule", tc.id);
        doubles += 1;
    }
    assert!(doubles >= 8, "only {doubles} dotted cases exercised");
    println!(
        "criterion 2: PASS — all systems compatible; {doubles}/{doubles} dotted cases \
         break without the carried t-rule"
    );
}

#[test]
fn generic_ansatz_splits_as_required() {
    let m = PDEModel::arbitrary();
    let ds = determining_system(&m, 1).unwrap();
    let ut = Indeterminate::jet(Dep::U, 1, 0);
    let ux = Indeterminate::jet(Dep::U, 0, 1);
    let f_ut = diff(&ds.density, &ut).unwrap();
    let f_ux = diff(&ds.density, &ux).unwrap();
    let g_ut = diff(&ds.flux, &ut).unwrap();

    // the second-order-jet coefficients are exactly the ansatz slopes ...
    assert!(equal(&ds.utt_coefficient, &f_ut).unwrap());
    assert!(equal(&ds.utx_coefficient, &(f_ux.clone() + g_ut.clone())).unwrap());
    // ... and both appear verbatim among the equations, forcing the density
    // off u_t and tying the flux's u_t slope to -density's u_x slope
    let forced = |target: &Expr| {
        ds.equations.iter().any(|eq| {
            equal(eq, target).unwrap()
                || equal(&(eq.clone() + target.clone()), &Expr::zero()).unwrap()
        })
    };
    assert!(forced(&f_ut), "no equation forces the density off u_t");
    assert!(forced(&(f_ux + g_ut)), "no equation ties the u_t and u_x slopes");

    // multiplier laws verify whenever the multiplier solves the adjoint
    // classifying relation on the matching model
    let zero_k = ModelBuilder::new()
        .convection("0")
        .unwrap()
        .convection_antiderivative("0")
        .unwrap()
        .build()
        .unwrap();
    let heat = ModelBuilder::new()
        .diffusion("1")
        .unwrap()
        .diffusion_antiderivative("u")
        .unwrap()
        .convection("0")
        .unwrap()
        .convection_antiderivative("0")
        .unwrap()
        .build()
        .unwrap();
    let mut checked = 0usize;
    for (model, psi_src) in [(m, "1"), (zero_k, "x"), (heat, "x^2 - 2*t")] {
        let psi = model.parse_expr(psi_src).unwrap();
        let residual = classifying_residual(&model, &psi).unwrap();
        assert!(residual.is_zero_literal(), "psi = {psi_src}: residual {residual}");
        let law = from_characteristic(&Characteristic::multiplier(psi)).unwrap();
        assert_law_holds(
            &DifferentialSystem::base(model),
            &law,
            &format!("multiplier law for psi = {psi_src}"),
        );
        checked += 1;
    }
    println!(
        "criterion 3: PASS — degree-(1,1) ansatz splits as required; \
         {checked}/3 multiplier laws verify"
    );
}

fn random_rat(rng: &mut ChaCha8Rng, nonzero: bool) -> Rat {
    loop {
        let n = rng.gen_range(-3i64..=3);
        if nonzero && n == 0 {
            continue;
        }
        let den = rng.gen_range(1i64..=3);
        return Rat::new(n.into(), den.into());
    }
}

fn random_transform(rng: &mut ChaCha8Rng) -> EquivTransform {
    EquivTransform::new(
        random_rat(rng, true),
        random_rat(rng, true),
        random_rat(rng, true),
        random_rat(rng, false),
        random_rat(rng, false),
        random_rat(rng, false),
        random_rat(rng, false),
    )
    .unwrap()
}

#[test]
fn pushforward_commutes_with_verification() {
    let zero = Rat::from_integer(0.into());
    let flip = |t: i64, x: i64, u: i64| {
        EquivTransform::new(
            Rat::from_integer(t.into()),
            Rat::from_integer(x.into()),
            Rat::from_integer(u.into()),
            zero.clone(),
            zero.clone(),
            zero.clone(),
            zero.clone(),
        )
        .unwrap()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut runs = 0usize;
    for id in ["1", "2", "3", "4"] {
        let tc = case(id).unwrap();
        // the three sign involutions first, then random group elements
        let mut transforms = vec![flip(-1, 1, 1), flip(1, -1, 1), flip(1, 1, -1)];
        while transforms.len() < 20 {
            transforms.push(random_transform(&mut rng));
        }
        for (i, tr) in transforms.iter().enumerate() {
            let sys = transform_system(&tc.system, tr).unwrap();
            let law = transform_conserved_vector(&tc.law, tr).unwrap();
            assert_law_holds(&sys, &law, &format!("case {id}, transform #{i} {tr:?}"));
            runs += 1;
        }
    }
    assert_eq!(runs, 80);
    println!("criterion 4: PASS — {runs}/80 pushed-forward laws verify");
}

fn random_gauge(rng: &mut ChaCha8Rng, pool: &[Indeterminate]) -> Expr {
    let mut h = Expr::zero();
    for _ in 0..rng.gen_range(1..=3usize) {
        let mut c = 0i64;
        while c == 0 {
            c = rng.gen_range(-3..=3);
        }
        let mut term = Expr::int(c);
        for _ in 0..rng.gen_range(1..=2usize) {
            term = term * Expr::atom(pool[rng.gen_range(0..pool.len())].clone());
        }
        h = h + term;
    }
    h
}

#[test]
fn gauge_shifts_never_change_the_verdict() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut runs = 0usize;
    for tc in all_cases().unwrap() {
        let mut pool = vec![
            Indeterminate::t(),
            Indeterminate::x(),
            Indeterminate::u(),
            Indeterminate::jet(Dep::U, 0, 1),
        ];
        if !tc.system.levels().is_empty() {
            pool.push(Indeterminate::jet(Dep::V, 0, 0));
        }
        for i in 0..50 {
            let h = random_gauge(&mut rng, &pool);
            let shifted = trivial_shift(&tc.law, &h).unwrap();
            assert_law_holds(
                &tc.system,
                &shifted,
                &format!("case {} shifted by H #{i} = {h}", tc.id),
            );
            runs += 1;
        }
    }
    println!("criterion 5: PASS — {runs} gauge-shifted laws all verify");
}

#[test]
fn sampling_agrees_with_symbolic_verdicts() {
    let start = Instant::now();
    let mut variants = 0usize;
    for (i, id) in conslaw_core::CASE_IDS.iter().enumerate() {
        let instances = case_instances(id).unwrap();
        assert!(instances.len() >= 2, "case {id} has {} concrete variants", instances.len());
        for (j, ci) in instances.iter().enumerate() {
            let seed = (i * 100 + j) as u64;
            let rep = sample_on_shell(&ci.law, &ci.system, &ci.instance, 1000, seed).unwrap();
            assert!(
                rep.max_residual < 1e-9,
                "case {id} ({}): residual {:.3e}",
                ci.label,
                rep.max_residual
            );
            let mutant = ConservedVector::new(
                ci.law.density.clone(),
                ci.law.flux.clone() * Expr::ratio(11, 10),
            );
            let rep = sample_on_shell(&mutant, &ci.system, &ci.instance, 1000, seed).unwrap();
            assert!(
                rep.max_residual > 1e-4,
                "case {id} ({}): mutant slipped through at {:.3e}",
                ci.label,
                rep.max_residual
            );
            variants += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(30), "sampling took {elapsed:.2?}");
    println!(
        "criterion 6: PASS — {variants} concrete variants sample < 1e-9 and \
         every flux mutant exceeds 1e-4, in {elapsed:.2?}"
    );
}

fn drift_pair(
    ci: &CaseInstance,
    run: &GridRun,
    u0: &dyn Fn(f64) -> f64,
) -> ((f64, Duration), (f64, Duration)) {
    let mut out = Vec::new();
    for cells in [run.cells, 2 * run.cells] {
        let start = Instant::now();
        let mut r = run.clone();
        r.cells = cells;
        let traj = simulate(&r, ci.system.model(), u0).unwrap();
        let rep = track_conserved(&traj, &ci.law, &ci.system, &ci.instance).unwrap();
        out.push((rep.max_relative_drift, start.elapsed()));
    }
    (out[0], out[1])
}

#[test]
fn conserved_integrals_converge_on_the_grid() {
    // cubic-coefficient model, periodic mass integral
    let free = case_instances("1").unwrap();
    let cubic = free.iter().find(|ci| ci.label.starts_with("d=1+u^2")).unwrap();
    let mut run = GridRun::new(-PI, PI, 800, 0.02, Boundary::Periodic);
    run.frames = 5;
    let (coarse, fine) = drift_pair(cubic, &run, &|x| 1.0 + 0.5 * x.sin());

    // linear model, weighted integral of a compactly supported bump.  The
    // quadratic weight is the named target; the grid conserves it exactly
    // (the central stencil is exact on quadratics and the sums telescope),
    // so the refinement shrink is demonstrated on the exponential weight,
    // whose stencil error is a genuine truncation observable.
    let weighted = case_instances("4").unwrap();
    let by_weight = |f: FuncInstance| {
        weighted
            .iter()
            .find(|ci| ci.instance.func_instance("alpha") == Some(&f))
            .unwrap()
    };
    let mut run = GridRun::new(-3.0, 3.0, 800, 0.02, Boundary::Dirichlet);
    run.frames = 5;
    let mollifier =
        |x: f64| if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
    let (qcoarse, qfine) = drift_pair(by_weight(FuncInstance::Quad), &run, &mollifier);
    let (ecoarse, efine) = drift_pair(by_weight(FuncInstance::Exp(1.0)), &run, &mollifier);

    for (what, (d800, t800), (d1600, t1600), must_shrink) in [
        ("mass", coarse, fine, true),
        ("quadratic-weight", qcoarse, qfine, false),
        ("exponential-weight", ecoarse, efine, true),
    ] {
        assert!(d800 < 1e-5, "{what} drift at N=800 is {d800:.3e}");
        assert!(d1600 < 1e-5, "{what} drift at N=1600 is {d1600:.3e}");
        if must_shrink {
            assert!(
                d800 / d1600 >= 3.0,
                "{what} drift did not shrink: {d800:.3e} -> {d1600:.3e}"
            );
        }
        for t in [t800, t1600] {
            assert!(t < Duration::from_secs(60), "{what} run took {t:.2?}");
        }
    }
    // the named weight must be conserved outright, far below tolerance
    assert!(qcoarse.0 < 1e-12 && qfine.0 < 1e-12);
    println!(
        "criterion 7: PASS — drift {:.2e}->{:.2e} (mass), {:.2e}->{:.2e} (exp weight), \
         quadratic weight exact at {:.2e}; all runs within budget",
        coarse.0, fine.0, ecoarse.0, efine.0, qcoarse.0.max(qfine.0)
    );
}

#[test]
fn overlapping_specializations_coincide() {
    let heat = ModelBuilder::new()
        .diffusion("1")
        .unwrap()
        .diffusion_antiderivative("u")
        .unwrap()
        .convection("0")
        .unwrap()
        .convection_antiderivative("0")
        .unwrap()
        .build()
        .unwrap();
    let weight = |dx: u32| Indeterminate::func("alpha", &[ArgVar::T, ArgVar::X], &[0, dx]);
    let c4 = case("4").unwrap();

    // free-coefficient mass law at d=1, k=0 == weighted law at weight 1
    let c1 = case("1").unwrap();
    let b = Bindings::new()
        .atom(weight(0), Expr::one())
        .atom(weight(1), Expr::zero());
    for (ours, theirs) in [
        (&c1.law.density, &c4.law.density),
        (&c1.law.flux, &c4.law.flux),
    ] {
        let ours = heat.normalize(ours).unwrap();
        let theirs = heat.normalize(&substitute(theirs, &b).unwrap()).unwrap();
        assert!(equal(&ours, &theirs).unwrap(), "{ours} != {theirs}");
    }

    // centered-moment law at d=1 == weighted law at weight x
    let c2 = case("2").unwrap();
    let b = Bindings::new()
        .atom(weight(0), Expr::atom(Indeterminate::x()))
        .atom(weight(1), Expr::one());
    for (ours, theirs) in [
        (&c2.law.density, &c4.law.density),
        (&c2.law.flux, &c4.law.flux),
    ] {
        let ours = heat.normalize(ours).unwrap();
        let theirs = heat.normalize(&substitute(theirs, &b).unwrap()).unwrap();
        assert!(equal(&ours, &theirs).unwrap(), "{ours} != {theirs}");
    }
    println!("criterion 8: PASS — both cross-case specializations agree canonically");
}
