use dicke_core::classical::*;
use dicke_core::model::ModelParams;
use proptest::prelude::*;

fn model() -> impl Strategy<Value = ModelParams> {
    prop_oneof![
        (0.05f64..1.5).prop_map(|g| ModelParams::new(1.0, 1.0, g, 10.0, 1).unwrap()),
        (0.05f64..0.45).prop_map(|g| ModelParams::new(1.0, 2.0, g, 10.0, 2).unwrap()),
    ]
}

/// (q, p, Q, P) with the atomic point strictly inside the disk.
fn point() -> impl Strategy<Value = [f64; 4]> {
    (-2.0f64..2.0, -2.0f64..2.0, 0.0f64..1.9, 0.0f64..std::f64::consts::TAU)
        .prop_map(|(q, p, r, phi)| [q, p, r * phi.cos(), r * phi.sin()])
}

fn energy(x: &[f64; 4], p: &ModelParams) -> f64 {
    classical_hamiltonian(&ClassicalState::from_slice(x), p).unwrap()
}

fn flow(x: &[f64; 4], p: &ModelParams, t: f64) -> [f64; 4] {
    let tr = integrate_trajectory(&ClassicalState::from_slice(x), p, t, Tolerance::uniform(1e-13)).unwrap();
    assert!(!tr.truncated);
    tr.samples.last().unwrap().to_array()
}

/// A point on the section at scaled energy `eps`.
fn on_shell(eps: f64, qa: f64, pa: f64, p: &ModelParams) -> [f64; 4] {
    [bosonic_root_qplus(eps, qa, pa, p).unwrap(), 0.0, qa, pa]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn equations_of_motion_are_the_symplectic_gradient(p in model(), x in point()) {
        let v = equations_of_motion(&x, &p).unwrap();
        let h = 1e-6;
        let mut grad = [0.0; 4];
        for (i, g) in grad.iter_mut().enumerate() {
            let (mut a, mut b) = (x, x);
            a[i] += h;
            b[i] -= h;
            *g = (energy(&a, &p) - energy(&b, &p)) / (2.0 * h);
        }
        let expect = [grad[1], -grad[0], grad[3], -grad[2]];
        for i in 0..4 {
            prop_assert!((v[i] - expect[i]).abs() <= 1e-6 * expect[i].abs().max(1.0), "{i}: {} vs {}", v[i], expect[i]);
        }
    }

    #[test]
    fn finite_time_exponent_is_non_negative(p in model(), x in point()) {
        let cfg = LyapunovConfig { t_total: 30.0, ..Default::default() };
        if let Ok(lam) = max_lyapunov(&ClassicalState::from_slice(&x), &p, &cfg) {
            prop_assert!(lam >= 0.0);
        }
    }
}

#[test]
fn energy_is_conserved_over_long_orbits() {
    let cases = [
        (ModelParams::one_photon(10.0), 0.0),
        (ModelParams::one_photon(10.0), 3.0),
        (ModelParams::two_photon(10.0), 1.0),
    ];
    for (p, eps) in cases {
        let x = on_shell(eps, 0.3, 0.6, &p);
        let tr = integrate_trajectory(&ClassicalState::from_slice(&x), &p, 1e4, Tolerance::uniform(1e-12)).unwrap();
        assert!(!tr.truncated);
        assert!(tr.max_drift <= 1e-8 * eps.abs().max(1.0), "f = {} eps = {eps}: {:e}", p.f, tr.max_drift);
    }
}

#[test]
fn reversing_momenta_retraces_the_orbit() {
    for (p, eps) in [(ModelParams::one_photon(10.0), 0.0), (ModelParams::two_photon(10.0), 1.0)] {
        let x0 = on_shell(eps, -0.4, 0.7, &p);
        let x1 = flow(&x0, &p, 20.0);
        let back = flow(&[x1[0], -x1[1], x1[2], -x1[3]], &p, 20.0);
        let back = [back[0], -back[1], back[2], -back[3]];
        for i in 0..4 {
            assert!((back[i] - x0[i]).abs() < 1e-6, "f = {} component {i}: {:?} vs {:?}", p.f, back, x0);
        }
    }
}

fn det4(m: [[f64; 4]; 4]) -> f64 {
    let mut a = m;
    let mut det = 1.0;
    for c in 0..4 {
        let piv = (c..4).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..4 {
            let f = a[r][c] / a[c][c];
            for k in c..4 {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

#[test]
fn flow_map_preserves_phase_space_volume() {
    for (p, eps) in [(ModelParams::one_photon(10.0), 0.0), (ModelParams::two_photon(10.0), 1.0)] {
        let x0 = on_shell(eps, 0.5, -0.2, &p);
        let h = 1e-5;
        let mut jac = [[0.0; 4]; 4];
        for c in 0..4 {
            let (mut a, mut b) = (x0, x0);
            a[c] += h;
            b[c] -= h;
            let (fa, fb) = (flow(&a, &p, 2.0), flow(&b, &p, 2.0));
            for r in 0..4 {
                jac[r][c] = (fa[r] - fb[r]) / (2.0 * h);
            }
        }
        let d = det4(jac);
        assert!((d - 1.0).abs() < 1e-4, "f = {}: det = {d}", p.f);
    }
}

#[test]
fn exponent_decays_on_tori_and_settles_in_the_sea() {
    let p = ModelParams::one_photon(10.0);
    let lam = |x: [f64; 4], t: f64| {
        let cfg = LyapunovConfig { t_total: t, ..Default::default() };
        max_lyapunov(&ClassicalState::from_slice(&x), &p, &cfg).unwrap()
    };
    // near the ground state orbits are regular: λ_T ~ ln T / T
    let regular = on_shell(-0.9, 0.0, 0.0, &p);
    let (r1, r2) = (lam(regular, 1000.0), lam(regular, 2000.0));
    assert!(r2 < 0.75 * r1 && r2 < 0.005, "{r1} {r2}");
    let chaotic = on_shell(3.0, 0.0, 1.0, &p);
    let (c1, c2) = (lam(chaotic, 1000.0), lam(chaotic, 2000.0));
    assert!((c2 / c1 - 1.0).abs() < 0.2 && c2 > 0.05, "{c1} {c2}");
}

fn grid(eps: f64, p: &ModelParams, res: usize, t: f64) -> ClassicalityGrid {
    let cfg = GridConfig {
        resolution: res,
        lyapunov: LyapunovConfig { t_total: t, ..Default::default() },
        threshold: None,
    };
    classicality_grid(eps, p, &cfg).unwrap()
}

#[test]
fn chaos_fraction_limits_and_refinement() {
    let p = ModelParams::one_photon(10.0);
    let mu = |eps: f64, res: usize, t: f64| chaos_fraction(&grid(eps, &p, res, t)).unwrap().total;
    assert_eq!(mu(-0.95, 21, 5000.0), 0.0);
    // weakly chaotic layers appear first, so the fraction only grows with energy
    let low = mu(-0.9, 21, 5000.0);
    let hot = mu(3.0, 21, 5000.0);
    assert!(hot > 0.98, "{hot}");
    let coarse = mu(0.0, 41, 1000.0);
    let fine = mu(0.0, 81, 1000.0);
    assert!(low < coarse && coarse < hot, "{low} {coarse} {hot}");
    assert!((coarse - fine).abs() <= 0.02, "{coarse} vs {fine}");
}

#[test]
fn grid_is_mirror_symmetric_in_p() {
    let p = ModelParams::one_photon(10.0);
    let g = grid(0.0, &p, 21, 1000.0);
    let r = g.resolution();
    let mut mismatched = 0;
    for c in 0..g.len() {
        let mirror = (c / r) * r + (r - 1 - c % r);
        assert_eq!(g.accessible[c], g.accessible[mirror]);
        assert_eq!(g.weight[c], g.weight[mirror]);
        if g.chi[c] != g.chi[mirror] {
            mismatched += 1;
        }
    }
    // the mirror cell starts on the time-reversed orbit, so only finite-time effects differ
    let classified = g.classified().count();
    assert!(mismatched * 20 <= classified, "{mismatched} of {classified}");
}
