use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fields::{Boundary, Grid, ScalarField, VectorField, WaveFunction};
use crate::fokker_planck::{stationarity_residual, weighted_residual_norm};
use crate::stats::convergence_orders;

fn harmonic(n: usize, half_width: f64) -> HamiltonianSpec {
    let g = Grid::line(n, -half_width, half_width, Boundary::DirichletZero).unwrap();
    let v = ScalarField::from_fn(&g, |x| 0.5 * x[0] * x[0]).unwrap();
    HamiltonianSpec::new(v, 1.0, 1.0)
}

fn hydrogen(n: usize, h: f64) -> HamiltonianSpec {
    let g = Grid::radial(n, h).unwrap();
    let v = ScalarField::from_fn(&g, |x| -1.0 / x[0]).unwrap();
    HamiltonianSpec::new(v, 1.0, 1.0)
}

fn gaussian(g: &Grid, x0: f64, sigma: f64, k: f64) -> WaveFunction {
    WaveFunction::from_fn(g, 1.0, 1.0, |x| {
        let d = x[0] - x0;
        Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), k * x[0])
    })
    .unwrap()
}

fn random_state(g: &Grid, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..g.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

#[test]
fn infinite_box_ground_state() {
    let n = 2000;
    let h = 1e-3;
    let g = Grid::new(vec![n], vec![h], vec![h], Boundary::DirichletZero).unwrap();
    let len = (n + 1) as f64 * h;
    let spec = HamiltonianSpec::new(ScalarField::zeros(&g), 1.0, 1.0);
    let sols = solve_stationary(&spec, 3).unwrap();
    for (j, s) in sols.iter().enumerate() {
        let m = (j + 1) as f64;
        let exact = m * m * PI * PI / (2.0 * len * len);
        let rel = (s.energy - exact).abs() / exact;
        assert!(rel < 1e-6 * m * m, "n={m}: {rel}");
        assert!(s.residual_norm <= EIGEN_RESIDUAL_TOLERANCE);
        assert!((s.psi.norm_squared() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn harmonic_ground_state_energy() {
    let sols = solve_stationary(&harmonic(8001, 8.0), 2).unwrap();
    assert!((sols[0].energy - 0.5).abs() / 0.5 < 1e-6, "{}", sols[0].energy);
    assert!((sols[1].energy - 1.5).abs() / 1.5 < 1e-5, "{}", sols[1].energy);
    assert!(sols[0].energy < sols[1].energy);
}

#[test]
fn hydrogen_ground_state_energy() {
    let sols = solve_stationary(&hydrogen(30_000, 1e-3), 1).unwrap();
    let rel = (sols[0].energy + 0.5).abs() / 0.5;
    assert!(rel < 1e-4, "{}", sols[0].energy);
}

#[test]
fn kinetic_term_shifts_reported_energy() {
    let base = solve_stationary(&harmonic(801, 8.0), 1).unwrap();
    let shifted = solve_stationary(&harmonic(801, 8.0).with_kinetic_energy(0.25), 1).unwrap();
    assert!((shifted[0].energy - base[0].energy - 0.25).abs() < 1e-12);
}

#[test]
fn subspace_solver_matches_separable_sums() {
    let n = 41;
    let g1 = Grid::line(n, -5.0, 5.0, Boundary::DirichletZero).unwrap();
    let v1 = ScalarField::from_fn(&g1, |x| 0.5 * x[0] * x[0]).unwrap();
    let e1 = solve_stationary(&HamiltonianSpec::new(v1, 1.0, 1.0), 2).unwrap();
    let h = g1.spacing()[0];
    let g2 = Grid::new(vec![n, n], vec![h, h], vec![-5.0, -5.0], Boundary::DirichletZero).unwrap();
    let v2 = ScalarField::from_fn(&g2, |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
    let e2 = solve_stationary(&HamiltonianSpec::new(v2, 1.0, 1.0), 3).unwrap();
    let expect = [2.0 * e1[0].energy, e1[0].energy + e1[1].energy, e1[0].energy + e1[1].energy];
    for (s, e) in e2.iter().zip(expect) {
        assert!((s.energy - e).abs() < 1e-9, "{} vs {e}", s.energy);
        assert!(s.residual_norm <= EIGEN_RESIDUAL_TOLERANCE);
    }
}

#[test]
fn periodic_free_spectrum() {
    let n = 64;
    let g = Grid::periodic_line(n, 0.0, 2.0 * PI).unwrap();
    let spec = HamiltonianSpec::new(ScalarField::zeros(&g), 1.0, 1.0);
    let sols = solve_stationary(&spec, 3).unwrap();
    let h = g.spacing()[0];
    let e1 = (1.0 - h.cos()) / (h * h);
    assert!(sols[0].energy.abs() < 1e-10);
    assert!((sols[1].energy - e1).abs() < 1e-9);
    assert!((sols[2].energy - e1).abs() < 1e-9);
}

#[test]
fn eigenvalue_converges_at_second_order() {
    let errors: Vec<f64> = [201, 401, 801]
        .iter()
        .map(|&n| {
            let e = solve_stationary(&harmonic(n, 8.0), 1).unwrap()[0].energy;
            (e - 0.5).abs()
        })
        .collect();
    for p in convergence_orders(&errors) {
        assert!(p >= 1.8, "order {p} from {errors:?}");
    }
}

#[test]
fn hermitian_for_every_variant() {
    let line = Grid::line(40, -2.0, 2.0, Boundary::DirichletZero).unwrap();
    let refl = Grid::line(40, -2.0, 2.0, Boundary::Reflecting).unwrap();
    let per = Grid::new(vec![12, 9], vec![0.3, 0.4], vec![0.0, 0.0], Boundary::Periodic).unwrap();
    let box2 = Grid::new(vec![10, 8], vec![0.3, 0.4], vec![0.0, 0.0], Boundary::DirichletZero).unwrap();
    let rad = Grid::radial(40, 0.1).unwrap();
    let pot = |g: &Grid| ScalarField::from_fn(g, |x| x[0].sin() + 0.3 * x[1]).unwrap();
    let a = |g: &Grid| VectorField::from_fn(g, |x| [x[1].cos(), 0.5 * x[0], 0.0]).unwrap();
    let specs = [
        HamiltonianSpec::new(pot(&line), 1.0, 1.0),
        HamiltonianSpec::new(pot(&refl), 2.0, 1.0),
        HamiltonianSpec::new(pot(&rad), 1.0, 1.0).with_kinetic_energy(0.3),
        HamiltonianSpec::new(pot(&line), 1.0, 1.0)
            .with_vector_potential(a(&line), 0.7)
            .with_scalar_potential(pot(&line), -1.0),
        HamiltonianSpec::new(pot(&per), 1.0, 1.0).with_vector_potential(a(&per), 1.3),
        HamiltonianSpec::new(pot(&box2), 1.0, 0.5).with_vector_potential(a(&box2), -0.4),
    ];
    for (case, spec) in specs.iter().enumerate() {
        let h = DiscreteHamiltonian::build(spec).unwrap();
        let g = spec.potential.grid();
        for seed in 0..5 {
            let phi = random_state(g, 2 * seed);
            let psi = random_state(g, 2 * seed + 1);
            let mut hphi = vec![Complex64::new(0.0, 0.0); g.len()];
            let mut hpsi = hphi.clone();
            h.apply(&phi, &mut hphi);
            h.apply(&psi, &mut hpsi);
            let lhs = h.inner(&phi, &hpsi);
            let rhs = h.inner(&hphi, &psi);
            let scale = h.norm(&hphi) * h.norm(&psi);
            assert!((lhs - rhs).norm() <= 1e-10 * scale, "case {case}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn eigenstate_evolution_keeps_overlap() {
    let spec = harmonic(801, 8.0);
    let ground = solve_stationary(&spec, 1).unwrap().remove(0);
    let dt = 0.01;
    let traj = evolve(&spec, &ground.psi, dt, 200).unwrap();
    for d in &traj.diagnostics {
        assert!((d.overlap - 1.0).abs() < 1e-8, "step {}: {}", d.step, d.overlap);
        assert!((d.energy - ground.energy).abs() < 1e-8 * ground.energy.abs());
    }
    let e = ground.energy;
    let phase = h_phase(traj.last(), &ground.psi);
    let expected = (-200.0 * 2.0 * (e * dt / 2.0).atan()).rem_euclid(2.0 * PI);
    let diff = crate::fields::ops::wrap_angle(phase - expected);
    assert!(diff.abs() < 1e-8, "phase {phase} vs {expected}");
}

fn h_phase(psi: &WaveFunction, reference: &WaveFunction) -> f64 {
    reference.inner(psi).unwrap().arg().rem_euclid(2.0 * PI)
}

#[test]
fn unitarity_over_many_steps() {
    let g = Grid::line(400, -10.0, 10.0, Boundary::DirichletZero).unwrap();
    let v = ScalarField::from_fn(&g, |x| 0.1 * x[0] * x[0]).unwrap();
    let spec = HamiltonianSpec::new(v, 1.0, 1.0);
    let psi0 = gaussian(&g, -2.0, 0.7, 1.5);
    let traj = evolve_strided(&spec, &psi0, 0.005, 10_000, 1000).unwrap();
    assert!(traj.max_step_norm_drift <= 1e-10, "{}", traj.max_step_norm_drift);
    let last = traj.diagnostics.last().unwrap();
    assert!((last.norm - 1.0).abs() <= 1e-7);
    let e0 = traj.diagnostics[0].energy;
    assert!((last.energy - e0).abs() <= 1e-8 * e0.abs());
}

#[test]
fn free_packet_spreading() {
    let g = Grid::line(4001, -40.0, 40.0, Boundary::DirichletZero).unwrap();
    let spec = HamiltonianSpec::new(ScalarField::zeros(&g), 1.0, 1.0);
    let sigma0 = 1.0;
    let psi0 = gaussian(&g, 0.0, sigma0, 0.0);
    let dt = 0.01;
    let steps = 400;
    let traj = evolve_strided(&spec, &psi0, dt, steps, 100).unwrap();
    for (state, d) in traj.states.iter().zip(&traj.diagnostics) {
        let rho: Vec<f64> = state.amplitudes().iter().map(|a| a.norm_sqr()).collect();
        let w = g.weights();
        let var: f64 = (0..g.len()).map(|i| w[i] * rho[i] * g.coord(i, 0).powi(2)).sum();
        let t = d.t;
        let expect = sigma0 * sigma0 * (1.0 + (t / (2.0 * sigma0 * sigma0)).powi(2));
        assert!((var - expect).abs() / expect < 0.01, "t={t}: {var} vs {expect}");
    }
}

#[test]
fn constant_kinetic_term_only_rotates_phase() {
    let g = Grid::line(300, -8.0, 8.0, Boundary::DirichletZero).unwrap();
    let v = ScalarField::from_fn(&g, |x| 0.2 * x[0] * x[0]).unwrap();
    let psi0 = gaussian(&g, 1.0, 0.8, 0.5);
    let base = HamiltonianSpec::new(v.clone(), 1.0, 1.0);
    let a = evolve(&base, &psi0, 0.01, 300).unwrap();
    let b = evolve(&base.clone().with_kinetic_energy(3.7), &psi0, 0.01, 300).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        for (p, q) in x.amplitudes().iter().zip(y.amplitudes()) {
            assert!((p.norm() - q.norm()).abs() < 1e-10);
        }
    }
    let da = &a.diagnostics.last().unwrap();
    let db = &b.diagnostics.last().unwrap();
    assert!((db.energy - da.energy - 3.7).abs() < 1e-10);
}

#[test]
fn zero_vector_potential_matches_plain_evolution() {
    let g = Grid::line(200, -6.0, 6.0, Boundary::DirichletZero).unwrap();
    let v = ScalarField::from_fn(&g, |x| 0.3 * x[0] * x[0]).unwrap();
    let psi0 = gaussian(&g, 0.5, 0.6, 2.0);
    let plain = HamiltonianSpec::new(v.clone(), 1.0, 1.0);
    let magnetic = plain.clone().with_vector_potential(VectorField::zeros(&g), 0.9);
    let a = evolve(&plain, &psi0, 0.01, 100).unwrap();
    let b = evolve_magnetic(&magnetic, &psi0, 0.01, 100).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        for (p, q) in x.amplitudes().iter().zip(y.amplitudes()) {
            assert!((p - q).norm() <= 1e-12);
        }
    }
    assert!(evolve_magnetic(&plain, &psi0, 0.01, 1).is_err());
}

#[test]
fn constant_vector_potential_plane_wave() {
    let n = 64;
    let len = 2.0 * PI;
    let g = Grid::periodic_line(n, 0.0, len).unwrap();
    let h = g.spacing()[0];
    let (kappa, a0) = (0.8, 1.25);
    let spec = HamiltonianSpec::new(ScalarField::zeros(&g), 1.0, 1.0)
        .with_vector_potential(VectorField::uniform(&g, &[a0]), kappa);
    let k = 3.0;
    let psi0 = WaveFunction::from_fn(&g, 1.0, 1.0, |x| Complex64::from_polar(1.0, k * x[0])).unwrap();
    let dt = 0.02;
    let steps = 50;
    let traj = evolve_magnetic(&spec, &psi0, dt, steps).unwrap();
    let e = (1.0 - (k * h + kappa * a0 * h).cos()) / (h * h);
    let expected = -2.0 * steps as f64 * (e * dt / 2.0).atan();
    let got = psi0.inner(traj.last()).unwrap().arg();
    assert!(crate::fields::ops::wrap_angle(got - expected).abs() < 1e-9, "{got} vs {expected}");
    assert!((traj.diagnostics.last().unwrap().overlap - 1.0).abs() < 1e-10);
    let p = canonical_momentum(traj.last(), 0).unwrap();
    assert!((p - (k * h).sin() / h).abs() < 1e-10);
}

#[test]
fn vector_potential_shifts_packet_velocity() {
    let n = 1024;
    let len = 80.0;
    let g = Grid::periodic_line(n, -len / 2.0, len).unwrap();
    let (kappa, a0, k0) = (1.0, 0.5, 1.0);
    let with_a = HamiltonianSpec::new(ScalarField::zeros(&g), 1.0, 1.0)
        .with_vector_potential(VectorField::uniform(&g, &[a0]), kappa);
    let psi0 = gaussian(&g, 0.0, 2.0, k0);
    let t = 4.0;
    let dt = 0.005;
    let traj = evolve_magnetic(&with_a, &psi0, dt, (t / dt) as usize).unwrap();
    let w = g.weights();
    let mean = |psi: &WaveFunction| -> f64 {
        psi.amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * w[i] * g.coord(i, 0))
            .sum()
    };
    let velocity = (mean(traj.last()) - mean(&psi0)) / t;
    // canonical momentum carried by a packet moving at v is m v - kappa A
    let canonical = canonical_momentum(&psi0, 0).unwrap();
    assert!((velocity - (canonical + kappa * a0)).abs() < 5e-3, "{velocity}");
    assert!((canonical - (velocity - kappa * a0)).abs() < 5e-3);
}

#[test]
fn gauge_transform_preserves_density() {
    let n = 300;
    let g = Grid::line(n, -6.0, 6.0, Boundary::DirichletZero).unwrap();
    let kappa = 1.0;
    let v = ScalarField::from_fn(&g, |x| 0.25 * x[0] * x[0]).unwrap();
    let a = VectorField::from_fn(&g, |x| [0.3 * x[0].sin(), 0.0, 0.0]).unwrap();
    let (c1, c2) = (0.4, -0.15);
    let chi = |x: f64| c1 * x + c2 * x * x;
    let grad_chi = VectorField::from_fn(&g, |x| [c1 + 2.0 * c2 * x[0], 0.0, 0.0]).unwrap();
    let a2 = a.axpy(1.0, &grad_chi).unwrap();
    let psi0 = gaussian(&g, -1.0, 0.7, 1.0);
    let psi0b = psi0.with_phase(|x| -kappa * chi(x[0]));
    let s1 = HamiltonianSpec::new(v.clone(), 1.0, 1.0).with_vector_potential(a, kappa);
    let s2 = HamiltonianSpec::new(v, 1.0, 1.0).with_vector_potential(a2, kappa);
    let t1 = evolve_magnetic(&s1, &psi0, 0.01, 300).unwrap();
    let t2 = evolve_magnetic(&s2, &psi0b, 0.01, 300).unwrap();
    for (x, y) in t1.states.iter().zip(&t2.states) {
        for (p, q) in x.amplitudes().iter().zip(y.amplitudes()) {
            assert!((p.norm() - q.norm()).abs() < 1e-8);
        }
    }
}

#[test]
fn functional_coupling_only_rotates_phase() {
    let g = Grid::line(200, -6.0, 6.0, Boundary::DirichletZero).unwrap();
    let v = ScalarField::from_fn(&g, |x| 0.3 * x[0] * x[0]).unwrap();
    let vol = VectorField::from_fn(&g, |x| [0.1 * x[0], 0.0, 0.0]).unwrap();
    let psi0 = gaussian(&g, 0.5, 0.6, 1.0);
    let base = HamiltonianSpec::new(v, 1.0, 1.0);
    let coupled = base.clone().with_coupling(CouplingTerm::Functional { v: vol.clone() });
    let a = evolve(&base, &psi0, 0.01, 50).unwrap();
    let b = evolve(&coupled, &psi0, 0.01, 50).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        for (p, q) in x.amplitudes().iter().zip(y.amplitudes()) {
            assert!((p.norm() - q.norm()).abs() < 1e-10);
        }
    }
    let c = coupling_functional(&psi0, &vol).unwrap();
    assert!(c > 0.0);
    assert!((b.diagnostics[0].energy - a.diagnostics[0].energy - c).abs() < 1e-12);
}

#[test]
fn instability_reports_step() {
    let g = Grid::line(50, -1.0, 1.0, Boundary::DirichletZero).unwrap();
    let v = ScalarField::constant(&g, f64::MAX / 4.0);
    let spec = HamiltonianSpec::new(v, 1.0, 1.0);
    let psi0 = gaussian(&g, 0.0, 0.2, 0.0);
    match evolve(&spec, &psi0, 1.0, 5) {
        Err(SchrodingerError::Unstable { step, .. }) => assert_eq!(step, 1),
        other => panic!("expected instability, got {other:?}"),
    }
    assert!(evolve(&spec, &psi0, -1.0, 5).is_err());
}

#[test]
fn madelung_of_harmonic_ground_state() {
    let g = Grid::line(801, -6.0, 6.0, Boundary::DirichletZero).unwrap();
    let omega = 1.0;
    let psi = WaveFunction::from_fn(&g, 1.0, 1.0, |x| Complex64::new((-0.5 * omega * x[0] * x[0]).exp(), 0.0))
        .unwrap();
    let f = madelung_fields(&psi, &VectorField::zeros(&g)).unwrap();
    for i in 1..g.len() - 1 {
        let x = g.coord(i, 0);
        assert!((f.u.component(0)[i] + omega * x).abs() < 1e-9);
        assert!(f.upsilon.component(0)[i].abs() < 1e-12);
        assert!((f.b.component(0)[i] + f.b_star.component(0)[i] - 0.0).abs() < 1e-12);
    }
}

#[test]
fn madelung_of_plane_wave() {
    let g = Grid::periodic_line(128, 0.0, 2.0 * PI).unwrap();
    let (m, hbar, k) = (2.0, 1.0, 5.0);
    let psi = WaveFunction::from_fn(&g, m, hbar, |x| Complex64::from_polar(1.0, k * x[0])).unwrap();
    let f = madelung_fields(&psi, &VectorField::zeros(&g)).unwrap();
    assert!(f.u.max_abs() < 1e-12);
    for &v in f.upsilon.component(0) {
        assert!((v - hbar * k / m).abs() < 1e-10);
    }
    let moving = madelung_fields(&psi, &VectorField::uniform(&g, &[hbar * k / m])).unwrap();
    assert!(moving.upsilon.max_abs() < 1e-10);
}

fn round_trip_residual(spec: &HamiltonianSpec) -> (f64, f64) {
    let sol = solve_stationary(spec, 1).unwrap().remove(0);
    let g = spec.potential.grid();
    let f = madelung_fields(&sol.psi, &VectorField::zeros(g)).unwrap();
    let r = stationarity_residual(&f.u, &spec.potential, sol.energy, spec.mass, spec.hbar).unwrap();
    (weighted_residual_norm(&r, &f.rho).unwrap(), sol.energy)
}

#[test]
fn harmonic_round_trip_stationarity() {
    let (res, e) = round_trip_residual(&harmonic(16_001, 8.0));
    assert!((e - 0.5).abs() / 0.5 < 1e-6);
    assert!(res < 1e-6, "{res}");
}

#[test]
fn hydrogen_round_trip_stationarity() {
    let (res, e) = round_trip_residual(&hydrogen(30_000, 1e-3));
    assert!((e + 0.5).abs() / 0.5 < 1e-4);
    assert!(res < 1e-6, "{res}");
}
