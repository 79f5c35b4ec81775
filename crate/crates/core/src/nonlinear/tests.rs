use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::assembly::{assemble_mass, assemble_nonlocal_form, KernelQuadratureConfig, MagneticPotential};
use crate::geometry::{build_mesh, Domain};
use crate::spectral::{solve_eigs, Spectrum};
use crate::{CVector, Complex};

struct Fixture {
    k: crate::assembly::FormMatrix,
    m: crate::assembly::MassMatrix,
    spectrum: Spectrum,
}

fn fixture(n: usize) -> Fixture {
    let mesh = build_mesh(&Domain::interval(-1.0, 1.0), n).unwrap();
    let k = assemble_nonlocal_form(
        &mesh,
        0.4,
        &MagneticPotential::constant(vec![1.0]),
        &KernelQuadratureConfig::default(),
    )
    .unwrap();
    let m = assemble_mass(&mesh);
    let spectrum = solve_eigs(&k, &m, 5).unwrap();
    Fixture { k, m, spectrum }
}

fn problem(fx: &Fixture, beta_inf: f64, nl: Nonlinearity) -> ProblemSpec {
    ProblemSpec::new(&fx.k, &fx.m, beta_inf, nl, &fx.spectrum).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> CVector {
    CVector::from_fn(d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(re * scale, im * scale)
    })
}

#[test]
fn zero_is_critical() {
    let fx = fixture(12);
    let b = &fx.spectrum.eigenvalues;
    let spec = problem(&fx, 0.5 * (b[1] + b[2]), Nonlinearity::rational(-1.0));
    let z = CVector::zeros(spec.dim());
    assert_eq!(energy(&z, &spec), 0.0);
    assert!(gradient(&z, &spec).iter().all(|c| c.norm() == 0.0));
    assert_eq!(residual(&z, &spec), 0.0);
}

#[test]
fn energy_is_phase_invariant() {
    let fx = fixture(12);
    let spec = problem(&fx, 0.3 * fx.spectrum.eigenvalues[0], Nonlinearity::exponential(2.0));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let u = random_vec(&mut rng, spec.dim(), 0.7);
        let j = energy(&u, &spec);
        assert_eq!(energy(&(-&u), &spec), j);
        for theta in [0.3, 1.7, 3.0] {
            let v = &u * Complex::from_polar(1.0, theta);
            assert!((energy(&v, &spec) - j).abs() <= 1e-12 * j.abs().max(1.0));
        }
    }
}

#[test]
fn eigenvector_energy() {
    let fx = fixture(12);
    let spec = problem(&fx, 0.0, Nonlinearity::zero());
    let f1 = fx.spectrum.vector(0);
    let j = energy(&f1, &spec);
    assert!((j - 0.5 * fx.spectrum.eigenvalues[0]).abs() < 1e-10 * j);
}

#[test]
fn resonance_guard() {
    let fx = fixture(12);
    let b1 = fx.spectrum.eigenvalues[0];
    let err = ProblemSpec::new(&fx.k, &fx.m, b1 * (1.0 + 1e-8), Nonlinearity::zero(), &fx.spectrum).unwrap_err();
    assert!(matches!(err, crate::Error::Resonant { index: 1, .. }));
    let spec =
        ProblemSpec::new_resonant_unchecked(&fx.k, &fx.m, b1, Nonlinearity::zero(), &fx.spectrum).unwrap();
    assert!(residual(&fx.spectrum.vector(0), &spec) < 1e-8);
}

#[test]
fn gradient_matches_directional_differences() {
    let fx = fixture(12);
    let b = &fx.spectrum.eigenvalues;
    let spec = problem(&fx, 0.5 * (b[1] + b[2]), Nonlinearity::rational(-0.8 * b[0]));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let u = random_vec(&mut rng, spec.dim(), 0.5);
        let phi = random_vec(&mut rng, spec.dim(), 1.0);
        let eps = 1e-6;
        let fd = (energy(&(&u + &phi * Complex::new(eps, 0.0)), &spec)
            - energy(&(&u - &phi * Complex::new(eps, 0.0)), &spec))
            / (2.0 * eps);
        let exact = phi.dotc(&gradient(&u, &spec)).re;
        assert!((fd - exact).abs() <= 1e-5 * (1.0 + energy(&u, &spec).abs()), "{fd} vs {exact}");
    }
}

#[test]
fn hessian_matches_gradient_differences() {
    let fx = fixture(10);
    let spec = problem(&fx, 0.7 * fx.spectrum.eigenvalues[0], Nonlinearity::exponential(1.3));
    let d = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_vec(&mut rng, d, 0.8);
    let h = spec.hessian(&u);
    let eps = 1e-6;
    for col in 0..2 * d {
        let mut e = CVector::zeros(d);
        e[col % d] = if col < d { Complex::new(eps, 0.0) } else { Complex::new(0.0, eps) };
        let gp = gradient(&(&u + &e), &spec);
        let gm = gradient(&(&u - &e), &spec);
        for row in 0..d {
            let dg = (gp[row] - gm[row]) / (2.0 * eps);
            assert!((dg.re - h[(row, col)]).abs() < 1e-6 * (1.0 + h[(row, col)].abs()));
            assert!((dg.im - h[(row + d, col)]).abs() < 1e-6 * (1.0 + h[(row + d, col)].abs()));
        }
    }
    assert_eq!(h, h.transpose());
}

#[test]
fn residual_is_continuous() {
    let fx = fixture(10);
    let spec = problem(&fx, 0.5 * fx.spectrum.eigenvalues[0], Nonlinearity::rational(1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = random_vec(&mut rng, spec.dim(), 1.0);
    let v = random_vec(&mut rng, spec.dim(), 1.0);
    let r0 = residual(&u, &spec);
    let diffs: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|e| (residual(&(&u + &v * Complex::new(*e, 0.0)), &spec) - r0).abs())
        .collect();
    assert!(diffs[1] < 0.2 * diffs[0] && diffs[2] < 0.2 * diffs[1]);
}

#[test]
fn newton_zero_family_finds_only_trivial() {
    let fx = fixture(12);
    let b = &fx.spectrum.eigenvalues;
    let spec = problem(&fx, 0.5 * (b[1] + b[2]), Nonlinearity::zero());
    let starts = multistart_from_eigenspaces(&fx.spectrum, 1, 3, 0.5, 6, 7).unwrap();
    let set = newton_deflated(&spec, &starts, &NewtonOptions::default());
    assert_eq!(set.nontrivial_count(), 0);
    assert!(set.has_trivial());
    assert_eq!(set, newton_deflated(&spec, &starts, &NewtonOptions::default()));
}

#[test]
fn newton_finds_bifurcating_orbits() {
    let fx = fixture(16);
    let b = &fx.spectrum.eigenvalues;
    let beta_inf = 0.5 * (b[1] + b[2]);
    let spec = problem(&fx, beta_inf, Nonlinearity::rational((b[0] - beta_inf) - 0.1 * b[0]));
    let starts = multistart_from_eigenspaces(&fx.spectrum, 1, 2, 0.25, 6, 11).unwrap();
    let opts = NewtonOptions::default();
    let set = newton_deflated(&spec, &starts, &opts);
    assert!(set.nontrivial_count() >= 2, "{}", set.summary_csv());
    for c in &set.solutions {
        assert!(c.residual <= opts.tol);
    }
    let reps: Vec<&CriticalPoint> = set.nontrivial().collect();
    for i in 0..reps.len() {
        for j in 0..i {
            assert!(orbit_distance(&reps[i].u, &reps[j].u, &fx.m) > 1e-4);
        }
    }
}

#[test]
fn minimize_quadratic_goes_to_zero() {
    let fx = fixture(12);
    let spec = problem(&fx, 0.5 * fx.spectrum.eigenvalues[0], Nonlinearity::zero());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u0 = random_vec(&mut rng, spec.dim(), 1.0);
    let (c, trace) = minimize_with(&spec, &u0, &MinimizeOptions::default()).unwrap();
    assert!(c.trivial && c.energy.abs() < 1e-12);
    for w in trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-13 * (1.0 + w[0].abs()));
    }
}

#[test]
fn minimize_finds_negative_minimizer() {
    let fx = fixture(16);
    let b1 = fx.spectrum.eigenvalues[0];
    let spec = problem(&fx, 0.5 * b1, Nonlinearity::rational(2.0 * b1));
    let f1 = fx.spectrum.vector(0);
    let start = (1..40)
        .map(|i| &f1 * Complex::new(0.1 * i as f64, 0.0))
        .find(|u| energy(u, &spec) < 0.0)
        .expect("negative-energy start");
    let c = minimize(&spec, &start, 1e-10).unwrap();
    assert!(!c.trivial && c.energy < 0.0 && c.residual <= 1e-10);
    assert!(c.energy <= energy(&start, &spec));
}

#[test]
fn multistart_shape_and_norms() {
    let fx = fixture(12);
    for (h, k, extra) in [(1, 1, 0), (1, 2, 3), (2, 4, 5)] {
        let starts = multistart_from_eigenspaces(&fx.spectrum, h, k, 0.3, extra, 9).unwrap();
        let n = k - h + 1;
        assert_eq!(starts.len(), n + n * (n - 1) + 2 * n + extra);
        let spec = problem(&fx, 0.0, Nonlinearity::zero());
        for u in &starts[..n + n * (n - 1) + 2 * n] {
            assert!((spec.form_norm(u) - 0.3).abs() < 1e-10 * 0.3);
        }
    }
    assert!(multistart_from_eigenspaces(&fx.spectrum, 0, 2, 0.3, 0, 0).is_err());
    assert!(multistart_from_eigenspaces(&fx.spectrum, 2, 9, 0.3, 0, 0).is_err());
}

#[test]
fn linking_levels() {
    let fx = fixture(12);
    let b = &fx.spectrum.eigenvalues;
    let spec = problem(&fx, 0.5 * (b[1] + b[2]), Nonlinearity::zero());
    let r = linking_diagnostics(&spec, &fx.spectrum, 3, 3, 0.1, 50, 3).unwrap();
    assert!(r.c0_est > 0.0);
    let mut prev = f64::INFINITY;
    for n in [0, 5, 20, 80] {
        let c0 = linking_diagnostics(&spec, &fx.spectrum, 3, 3, 0.1, n, 3).unwrap().c0_est;
        assert!(c0 <= prev);
        prev = c0;
    }
}

#[test]
fn validation() {
    let grid = default_t_grid();
    let r = validate_nonlinearity(&Nonlinearity::rational(1.0), &grid).unwrap();
    assert!(r.eps_bounds.iter().all(|b| b.a_eps.unwrap() <= 0.5 + 1e-12));
    let z = validate_nonlinearity(&Nonlinearity::zero(), &grid).unwrap();
    assert!(z.eps_bounds.iter().all(|b| b.a_eps == Some(0.0)));
    let bad = Nonlinearity::new(NonlinearityFamily::Constant, 1.0);
    match validate_nonlinearity(&bad, &grid) {
        Err(crate::Error::ValidationFailed(rep)) => {
            assert!(rep.failures.iter().any(|f| f.contains("vanish")))
        }
        other => panic!("expected failure, got {other:?}"),
    }
    assert!(validate_nonlinearity(&Nonlinearity::rational(1.0), &[0.0, 1.0]).is_err());
}

#[test]
fn solution_set_roundtrips_json() {
    let fx = fixture(10);
    let spec = problem(&fx, 0.5 * fx.spectrum.eigenvalues[0], Nonlinearity::zero());
    let mut set = SolutionSet::new(1e-4);
    let u = fx.spectrum.vector(0);
    assert!(set.insert(CriticalPoint::from_iterate(u.clone(), &spec, 3), &spec));
    assert!(!set.insert(CriticalPoint::from_iterate(&u * Complex::from_polar(1.0, 2.0), &spec, 4), &spec));
    let back: SolutionSet = serde_json::from_value(set.to_json()).unwrap();
    assert_eq!(back, set);
    assert!(set.summary_csv().lines().count() == 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orbit_distance_is_a_pseudometric(seed in 0u64..10_000, theta in 0.0f64..6.3) {
        let mesh = build_mesh(&Domain::interval(0.0, 1.0), 6).unwrap();
        let m = assemble_mass(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = m.dim();
        let (u, v, w) = (random_vec(&mut rng, d, 1.0), random_vec(&mut rng, d, 1.0), random_vec(&mut rng, d, 1.0));
        let uv = orbit_distance(&u, &v, &m);
        prop_assert!(orbit_distance(&u, &(&u * Complex::from_polar(1.0, theta)), &m) < 1e-7);
        prop_assert!((uv - orbit_distance(&v, &u, &m)).abs() < 1e-12);
        prop_assert!(uv <= orbit_distance(&u, &w, &m) + orbit_distance(&w, &v, &m) + 1e-12);
    }

    #[test]
    fn energy_even(seed in 0u64..10_000) {
        let fx = FIXTURE.with(|f| f.clone());
        let spec = ProblemSpec::new(&fx.0, &fx.1, 0.2, Nonlinearity::rational(0.5), &fx.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_vec(&mut rng, spec.dim(), 2.0);
        prop_assert_eq!(energy(&u, &spec), energy(&(-&u), &spec));
    }
}

thread_local! {
    static FIXTURE: (crate::assembly::FormMatrix, crate::assembly::MassMatrix, Spectrum) = {
        let f = fixture(8);
        (f.k, f.m, f.spectrum)
    };
}
