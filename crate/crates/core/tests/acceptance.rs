//! Release gate: every test pins one acceptance criterion with its
//! tolerances and runtime budget written out in code. The runner output
//! gives one pass/fail line per criterion; run with `--nocapture` to see
//! the measured numbers behind each verdict.
//!
//! The gate runs its criteria serially (a shared lock) so the runtime
//! budgets measure the work itself, not scheduler contention.

use std::sync::Mutex;
use std::time::Instant;

use focklab_core::evolution::{
    dyson_partial, left_ode_residual, right_ode_residual, time_ordered_exp, EvolutionConfig,
    Method,
};
use focklab_core::fock::FockSpace;
use focklab_core::harness::{
    convergence_sweep, probe_residual, verify_adjoint_step, verify_derivative_relation,
    verify_exchange, verify_exchange_special, verify_free_exchange, verify_g_flatness,
    verify_hi_commutator, verify_pull_through, verify_wick_consistency, ProbeSet, ResidualMetric,
    Scenario, SweepAxis,
};
use focklab_core::interaction::{Polynomial, WickTable};
use focklab_core::lattice::{LatticeFunction, LatticeSpec, Omega, ProfileTerm};
use focklab_core::linalg::{matrix_exp, operator_norm};
use focklab_core::ring::RingElement;
use focklab_core::suite::{outcome_json, run_suite, suite_csv, IdentityKind, ScenarioEcho, SuiteOptions};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

static GATE: Mutex<()> = Mutex::new(());

fn finish(started: Instant, budget_s: f64, label: &str, detail: &str) {
    let took = started.elapsed().as_secs_f64();
    println!("{label}: {detail} (took {took:.2}s of {budget_s:.0}s budget)");
    assert!(took < budget_s, "{label} exceeded its runtime budget: {took:.2}s >= {budget_s}s");
}

fn quartic() -> Polynomial {
    Polynomial::monic_even(vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap()
}

fn quadratic() -> Polynomial {
    Polynomial::monic_even(vec![0.0, 0.0, 1.0]).unwrap()
}

fn single_mode(sites: usize, value: f64) -> (LatticeSpec, LatticeFunction) {
    let spec = LatticeSpec::new(sites, 1.0, 1.0).unwrap();
    let omega = Omega::new(&spec);
    (spec.clone(), omega.mode(0).scale(Complex64::new(value, 0.0)))
}

fn random_function(rng: &mut ChaCha8Rng, sites: usize, amplitude: f64) -> LatticeFunction {
    let values = (0..sites)
        .map(|_| {
            Complex64::new(
                rng.gen_range(-amplitude..amplitude),
                rng.gen_range(-amplitude..amplitude),
            )
        })
        .collect();
    LatticeFunction::new(values)
}

/// The stock interacting scenario: quartic interaction on one site,
/// matched creation/annihilation functions, fourth-order integration.
fn generic_scenario() -> Scenario {
    let (spec, u) = single_mode(1, 0.15);
    Scenario::new(
        spec,
        14,
        quartic(),
        LatticeFunction::from_real(&[0.1]),
        u.clone(),
        u,
        LatticeFunction::zeros(1),
        0.25,
        EvolutionConfig { steps: 400, method: Method::RungeKutta4 },
        4,
    )
    .unwrap()
}

#[test]
fn gate_1_commutation_relations_are_exact_below_the_cutoff() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for (sites, n_max) in [(1usize, 10usize), (2, 10), (3, 10), (3, 6), (2, 5), (1, 4)] {
        let spec = LatticeSpec::new(sites, 1.0, 1.0).unwrap();
        let space = FockSpace::new(spec, n_max);
        for _ in 0..2 {
            let h = random_function(&mut rng, sites, 1.0);
            let f = random_function(&mut rng, sites, 1.0);
            let defect = space.ccr_defect(&h, &f).unwrap();
            assert!(
                defect <= 1e-12,
                "commutator defect {defect:.3e} at {sites} sites, cutoff {n_max}"
            );
            worst = worst.max(defect);
        }
    }
    finish(started, 1.0, "gate 1 commutation relations", &format!("worst defect {worst:.3e} <= 1e-12"));
}

#[test]
fn gate_2_ring_laws_hold_componentwise() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let sites = rng.gen_range(1..=3);
        let cap = rng.gen_range(1..=6);
        let f = random_function(&mut rng, sites, 0.8);
        let g = random_function(&mut rng, sites, 0.8);

        // The exponential map turns pointwise sums into star products.
        let composed = RingElement::gamma(&f, cap).star(&RingElement::gamma(&g, cap)).unwrap();
        let direct = RingElement::gamma(&(&f + &g), cap);
        worst = worst.max(composed.max_diff(&direct).unwrap());

        // gamma(f) is invertible with inverse gamma(-f).
        let inverse = RingElement::gamma(&f.scale(Complex64::new(-1.0, 0.0)), cap);
        let unit = RingElement::identity(sites, cap);
        worst = worst.max(RingElement::gamma(&f, cap).star(&inverse).unwrap().max_diff(&unit).unwrap());

        // Unit neutrality, commutativity, associativity on generic elements.
        let element = |rng: &mut ChaCha8Rng| {
            RingElement::new((0..=cap).map(|_| random_function(rng, sites, 1.0)).collect()).unwrap()
        };
        let a = element(&mut rng);
        let b = element(&mut rng);
        let c = element(&mut rng);
        worst = worst.max(unit.star(&a).unwrap().max_diff(&a).unwrap());
        worst = worst.max(a.star(&b).unwrap().max_diff(&b.star(&a).unwrap()).unwrap());
        let left = a.star(&b).unwrap().star(&c).unwrap();
        let right = a.star(&b.star(&c).unwrap()).unwrap();
        worst = worst.max(left.max_diff(&right).unwrap());
    }
    assert!(worst <= 1e-13, "worst componentwise law violation {worst:.3e}");
    finish(started, 1.0, "gate 2 ring laws", &format!("worst violation {worst:.3e} <= 1e-13 over 100 instances"));
}

#[test]
fn gate_3_normal_ordered_powers_agree_across_routes() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut worst_route = 0.0f64;
    let mut worst_moment = 0.0f64;
    for sites in [1usize, 2] {
        let spec = LatticeSpec::new(sites, 1.0, 1.0).unwrap();
        let zeros = LatticeFunction::zeros(sites);
        let sc = Scenario::new(
            spec,
            12,
            quadratic(),
            zeros.clone(),
            zeros.clone(),
            zeros.clone(),
            zeros,
            0.5,
            EvolutionConfig::default(),
            2,
        )
        .unwrap();
        let report = verify_wick_consistency(&sc, 8).unwrap();
        worst_route = worst_route.max(report.residual_probe);

        // Vacuum expectations of every ordered power vanish separately.
        let space = sc.space();
        let table = WickTable::new(&space, 8).unwrap();
        let vacuum = space.vacuum();
        for site in 0..sites {
            for n in 1..=8 {
                let moment = vacuum.dotc(&(table.power(site, n) * &vacuum)).norm();
                worst_moment = worst_moment.max(moment);
            }
        }
    }
    assert!(worst_route <= 1e-11, "route disagreement {worst_route:.3e}");
    assert!(worst_moment <= 1e-12, "vacuum moment {worst_moment:.3e}");
    finish(
        started,
        5.0,
        "gate 3 ordered powers",
        &format!("route disagreement {worst_route:.3e} <= 1e-11, vacuum moments {worst_moment:.3e} <= 1e-12"),
    );
}

#[test]
fn gate_4_free_exchange_residual_vanishes_with_the_cutoff() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let (spec, u) = single_mode(1, 0.2);
    let sc = Scenario::new(
        spec,
        8,
        quadratic(),
        LatticeFunction::zeros(1),
        u.clone(),
        u,
        LatticeFunction::zeros(1),
        0.5,
        EvolutionConfig::default(),
        4,
    )
    .unwrap();
    let report =
        convergence_sweep(&sc, SweepAxis::Cutoff, 3, ResidualMetric::Probe, verify_free_exchange)
            .unwrap();
    let series: Vec<(f64, f64)> = report.convergence.iter().map(|p| (p.0, p.1)).collect();
    assert_eq!(series.len(), 3);
    for (level, cutoff) in [8.0, 12.0, 16.0].iter().enumerate() {
        assert_eq!(series[level].0, *cutoff);
    }
    for w in series.windows(2) {
        assert!(w[1].1 < w[0].1, "not strictly decreasing: {series:?}");
    }
    let last = series.last().unwrap().1;
    assert!(last <= 1e-8, "residual at the largest cutoff: {last:.3e}");
    finish(
        started,
        5.0,
        "gate 4 free exchange",
        &format!(
            "residuals {:?} strictly decreasing, final {last:.3e} <= 1e-8",
            series.iter().map(|p| format!("{:.3e}", p.1)).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn gate_5_interaction_shift_lemma_is_algebraically_exact() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut details = Vec::new();
    for poly in [quadratic(), quartic()] {
        let degree = poly.degree();
        let (spec, u) = single_mode(2, 0.2);
        let sc = Scenario::new(
            spec,
            12,
            poly,
            LatticeFunction::from_real(&[0.3, 0.2]),
            u.clone(),
            u.scale(Complex64::new(0.0, 1.0)),
            u.scale(Complex64::new(0.5, 0.0)),
            0.6,
            EvolutionConfig::default(),
            // the widest probe block a guard band of degree + 2 allows
            12 - degree - 2,
        )
        .unwrap();
        let report = verify_hi_commutator(&sc, 0.2, 0.3).unwrap();
        assert!(
            report.residual_compressed <= 1e-10,
            "degree {degree}: residual {:.3e}",
            report.residual_compressed
        );
        details.push(format!("degree {degree}: {:.3e}", report.residual_compressed));
    }
    finish(
        started,
        10.0,
        "gate 5 interaction shift lemma",
        &format!("both ladder flavors <= 1e-10 ({})", details.join(", ")),
    );
}

#[test]
fn gate_6_exchange_theorem_holds_on_the_generic_scenario() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let sc = generic_scenario();

    let full = verify_exchange(&sc).unwrap();
    assert!(full.residual_compressed <= 1e-5, "exchange residual {:.3e}", full.residual_compressed);
    let special = verify_exchange_special(&sc).unwrap();
    assert!(
        special.residual_compressed <= 1e-5,
        "time-independent start residual {:.3e}",
        special.residual_compressed
    );

    // Halving the step count cuts the integrator-dominated part of the
    // right-hand kernel by roughly the fourth-order factor of sixteen;
    // the identity residual itself already sits on its truncation floor.
    let space = sc.space();
    let probes = ProbeSet::new(&space, sc.probe_cap, sc.seed);
    let kernel = |steps: usize| {
        let mut refined = sc.clone();
        refined.evolution.steps = steps;
        let family = refined
            .family(
                &space,
                vec![
                    ProfileTerm::forward(refined.f.clone(), refined.beta),
                    ProfileTerm::forward(refined.g.clone(), refined.beta),
                    ProfileTerm::backward(refined.h.clone(), refined.beta),
                ],
            )
            .unwrap();
        time_ordered_exp(&family, 0.0, refined.beta, &refined.evolution).unwrap()
    };
    let steps = [10usize, 20, 40, 80, 160];
    let deltas: Vec<f64> =
        steps.iter().map(|n| probe_residual(&kernel(*n), &kernel(2 * n), &probes)).collect();
    let mut ratios = Vec::new();
    for w in deltas.windows(2) {
        if w[1] < 1e-12 {
            break; // roundoff, not integration error
        }
        ratios.push(w[0] / w[1]);
    }
    assert!(ratios.len() >= 2, "need at least two usable halvings, got {ratios:?}");
    for ratio in &ratios {
        assert!(
            (10.0..=20.0).contains(ratio),
            "step-halving ratio {ratio:.1} outside [10, 20] in {ratios:?}"
        );
    }
    let mut coarse = sc.clone();
    coarse.evolution.steps = 100;
    let floor = verify_exchange(&coarse).unwrap();
    let drift = (floor.residual_compressed - full.residual_compressed).abs()
        / full.residual_compressed;
    assert!(drift <= 0.05, "residual moved {:.1}% between 100 and 400 steps", drift * 100.0);

    // Without an annihilation function the theorem degenerates to the
    // pull-through identity; both verifiers must then agree.
    let mut no_f = sc.clone();
    no_f.f = LatticeFunction::zeros(1);
    let reduced = verify_exchange(&no_f).unwrap();
    let pull = verify_pull_through(&no_f).unwrap();
    let probe_gap = (reduced.residual_probe - pull.residual_probe).abs();
    let compressed_gap = (reduced.residual_compressed - pull.residual_compressed).abs();
    assert!(probe_gap <= 1e-12 && compressed_gap <= 1e-12, "reduction gaps {probe_gap:.3e}, {compressed_gap:.3e}");

    finish(
        started,
        60.0,
        "gate 6 exchange theorem",
        &format!(
            "residual {:.3e} <= 1e-5 (special case {:.3e}), halving ratios {:?}, floor drift {:.2}%, pull-through gap {probe_gap:.3e}",
            full.residual_compressed,
            special.residual_compressed,
            ratios.iter().map(|r| format!("{r:.1}")).collect::<Vec<_>>(),
            drift * 100.0
        ),
    );
}

#[test]
fn gate_7_time_ordered_exponential_contracts_hold() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let sc = generic_scenario();
    let space = sc.space();

    // Constant generator: the ordered kernel is the matrix exponential.
    let constant = sc.family(&space, Vec::new()).unwrap();
    let beta = 0.1;
    let cfg = EvolutionConfig { steps: 200, method: Method::RungeKutta4 };
    let ordered = time_ordered_exp(&constant, 0.0, beta, &cfg).unwrap();
    let direct = matrix_exp(&(constant.evaluate(0.0).unwrap() * Complex64::new(-beta, 0.0)));
    let constant_gap = operator_norm(&(&ordered - &direct));
    assert!(constant_gap <= 1e-9, "constant-generator gap {constant_gap:.3e}");

    // Order-three iterated-integral truncation: the discrepancy carries a
    // fourth power of the horizon, so halving it divides by about sixteen.
    let driven = sc
        .family(
            &space,
            vec![
                ProfileTerm::forward(sc.f.clone(), sc.beta),
                ProfileTerm::backward(sc.h.clone(), sc.beta),
            ],
        )
        .unwrap();
    let fine = EvolutionConfig { steps: 400, method: Method::RungeKutta4 };
    let discrepancy = |horizon: f64| {
        let reference = time_ordered_exp(&driven, 0.0, horizon, &fine).unwrap();
        let partial = dyson_partial(&driven, 0.0, horizon, 3, 12).unwrap();
        operator_norm(&(&reference - &partial))
    };
    let ratio = discrepancy(0.05) / discrepancy(0.025);
    assert!((12.0..=20.0).contains(&ratio), "horizon-halving ratio {ratio:.1}");

    // Both defining differential equations, checked by central differences
    // with second-order step scaling.
    let mut ode_ratios = Vec::new();
    for residual in [right_ode_residual, left_ode_residual] {
        let coarse = residual(&driven, 0.06, 0.2, &fine, 4e-3).unwrap();
        let fine_r = residual(&driven, 0.06, 0.2, &fine, 2e-3).unwrap();
        let r = coarse / fine_r;
        assert!((3.2..4.8).contains(&r), "stencil halving ratio {r:.2}");
        ode_ratios.push(r);
    }

    finish(
        started,
        30.0,
        "gate 7 ordered-kernel contracts",
        &format!(
            "constant gap {constant_gap:.3e} <= 1e-9, series ratio {ratio:.1} in [12, 20], stencil ratios {:?}",
            ode_ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn gate_8_proof_mechanics_hold() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();

    // The interpolating kernel is flat in the split point.
    let mut flat_sc = generic_scenario();
    flat_sc.h = LatticeFunction::zeros(1);
    flat_sc.probe_cap = 3;
    flat_sc.validate().unwrap();
    let flat = verify_g_flatness(&flat_sc, 5).unwrap();
    assert!(flat.residual_compressed <= 1e-6, "flatness deviation {:.3e}", flat.residual_compressed);

    // The coherent-exponential derivative relation converges quadratically.
    let (spec, u) = single_mode(1, 0.1);
    let deriv_sc = Scenario::new(
        spec,
        12,
        quadratic(),
        LatticeFunction::zeros(1),
        u.clone(),
        LatticeFunction::zeros(1),
        LatticeFunction::zeros(1),
        1.0,
        EvolutionConfig::default(),
        4,
    )
    .unwrap();
    let coarse = verify_derivative_relation(&deriv_sc, 0.5, 2e-3).unwrap();
    let fine = verify_derivative_relation(&deriv_sc, 0.5, 1e-3).unwrap();
    let deriv_ratio = coarse / fine;
    assert!((3.2..4.8).contains(&deriv_ratio), "stencil ratio {deriv_ratio:.2}");
    let deriv_residual = verify_derivative_relation(&deriv_sc, 0.5, 1e-4).unwrap();
    assert!(deriv_residual <= 1e-9, "derivative residual {deriv_residual:.3e}");

    // The adjoint/anti-ordering chain behind the theorem's last step.
    let (spec, u) = single_mode(1, 0.1);
    let adjoint_sc = Scenario::new(
        spec,
        18,
        quartic(),
        LatticeFunction::from_real(&[0.1]),
        u.clone(),
        u.scale(Complex64::new(0.8, 0.6)),
        u.scale(Complex64::new(0.5, 0.0)),
        0.25,
        EvolutionConfig { steps: 300, method: Method::RungeKutta4 },
        3,
    )
    .unwrap();
    let chain = verify_adjoint_step(&adjoint_sc).unwrap();
    assert!(chain.residual_compressed <= 1e-8, "chain residual {:.3e}", chain.residual_compressed);

    finish(
        started,
        60.0,
        "gate 8 proof mechanics",
        &format!(
            "flatness {:.3e} <= 1e-6, derivative {deriv_residual:.3e} <= 1e-9 (ratio {deriv_ratio:.2}), adjoint chain {:.3e} <= 1e-8",
            flat.residual_compressed, chain.residual_compressed
        ),
    );
}

#[test]
fn gate_9_reports_are_byte_identical_across_runs() {
    let _g = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let sc = generic_scenario();
    let options = SuiteOptions {
        identities: vec![
            IdentityKind::FreeExchange,
            IdentityKind::HiCommutator,
            IdentityKind::Exchange,
            IdentityKind::WickConsistency,
        ],
        ..SuiteOptions::default()
    };
    let echo = ScenarioEcho::new(&sc);
    let first = run_suite(&sc, &options).unwrap();
    let second = run_suite(&sc, &options).unwrap();
    assert!(first.all_pass() && second.all_pass());
    assert_eq!(first.outcomes.len(), second.outcomes.len());
    for (a, b) in first.outcomes.iter().zip(second.outcomes.iter()) {
        assert_eq!(outcome_json(&echo, a), outcome_json(&echo, b), "{} differs", a.kind.name());
    }
    assert_eq!(suite_csv(&first), suite_csv(&second));
    finish(
        started,
        30.0,
        "gate 9 determinism",
        &format!("{} reports byte-identical across repeated runs", first.outcomes.len()),
    );
}
