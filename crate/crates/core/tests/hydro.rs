use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use exphydro::hydro::*;
use exphydro::io::synth::synth_basin;

/// Straight transcription of the GR4J store equations for one step with
/// empty unit hydrographs, used to cross-check the optimized stepper.
fn reference_step(s: f64, r: f64, p: f64, e: f64, x: [f64; 4]) -> (f64, f64, f64) {
    let [x1, x2, x3, x4] = x;
    let (pn, en) = if p >= e { (p - e, 0.0) } else { (0.0, e - p) };
    let ps = x1 * (1.0 - (s / x1).powi(2)) * (pn / x1).tanh() / (1.0 + s / x1 * (pn / x1).tanh());
    let es = s * (2.0 - s / x1) * (en / x1).tanh() / (1.0 + (1.0 - s / x1) * (en / x1).tanh());
    let s1 = s + ps - es;
    let perc = s1 * (1.0 - (1.0 + (4.0 / 9.0 * s1 / x1).powi(4)).powf(-0.25));
    let s2 = s1 - perc;
    let pr = perc + pn - ps;
    let uh1_first = (1.0 / x4).min(1.0).powf(2.5);
    let uh2_first = if x4 >= 1.0 {
        0.5 * (1.0 / x4).powf(2.5)
    } else if 2.0 * x4 > 1.0 {
        1.0 - 0.5 * (2.0 - 1.0 / x4).powf(2.5)
    } else {
        1.0
    };
    let q9 = 0.9 * pr * uh1_first;
    let q1 = 0.1 * pr * uh2_first;
    let f = x2 * (r / x3).powf(3.5);
    let r1 = (r + q9 + f).max(0.0);
    let qr = r1 * (1.0 - (1.0 + (r1 / x3).powi(4)).powf(-0.25));
    let qd = (q1 + f).max(0.0);
    (qr + qd, s2, r1 - qr)
}

#[test]
fn single_step_matches_reference_equations() {
    let params = Gr4jParams::new(300.0, 0.0, 60.0, 2.0).unwrap();
    let state = Gr4jState {
        s: 150.0,
        r: 30.0,
        ..Gr4jState::empty()
    };
    let (next, q) = gr4j_step(&state, 10.0, 2.0, &params).unwrap();
    let (q_ref, s_ref, r_ref) = reference_step(150.0, 30.0, 10.0, 2.0, [300.0, 0.0, 60.0, 2.0]);
    assert_relative_eq!(q, q_ref, max_relative = 1e-12);
    assert_relative_eq!(next.s, s_ref, max_relative = 1e-12);
    assert_relative_eq!(next.r, r_ref, max_relative = 1e-12);
    // frozen from the reference
    assert!((q - 0.496_622_065_761_966_3).abs() < 1e-9);
    assert!((next.s - 155.808_888_936_283_07).abs() < 1e-9);
    assert!((next.r - 29.871_348_438_466_22).abs() < 1e-9);
}

#[test]
fn reference_agrees_on_random_first_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let x = [
            rng.random_range(10.0..3000.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(5.0..1000.0),
            rng.random_range(0.5..10.0),
        ];
        let params = Gr4jParams::new(x[0], x[1], x[2], x[3]).unwrap();
        let s = rng.random_range(0.0..x[0]);
        let r = rng.random_range(0.0..x[2]);
        let p = rng.random_range(0.0..60.0);
        let e = rng.random_range(0.0..8.0);
        let (next, q) = gr4j_step(
            &Gr4jState {
                s,
                r,
                ..Gr4jState::empty()
            },
            p,
            e,
            &params,
        )
        .unwrap();
        let (q_ref, s_ref, r_ref) = reference_step(s, r, p, e, x);
        assert!(
            (q - q_ref).abs() <= 1e-9 * (1.0 + q_ref),
            "{x:?} {s} {r} {p} {e}"
        );
        assert!((next.s - s_ref).abs() <= 1e-9 * (1.0 + s_ref));
        assert!((next.r - r_ref).abs() <= 1e-9 * (1.0 + r_ref));
    }
}

#[test]
fn water_balance_closes_without_exchange() {
    let b = synth_basin(4, 10).unwrap();
    let params = ModelParams::Gr4j(Gr4jParams::new(350.0, 0.0, 90.0, 1.7).unwrap());
    let t = simulate_trace(&params, &b.precip, &b.pet).unwrap();
    assert!(t.exchange.iter().all(|&x| x == 0.0));
    let p: f64 = b.precip.iter().sum();
    assert!(t.balance_residual(&b.precip).abs() <= 1e-6 * p);
}

#[test]
fn water_balance_closes_with_applied_exchange() {
    let b = synth_basin(4, 10).unwrap();
    for x2 in [-5.0, 3.0] {
        let params = ModelParams::Gr4j(Gr4jParams::new(200.0, x2, 40.0, 2.3).unwrap());
        let t = simulate_trace(&params, &b.precip, &b.pet).unwrap();
        let p: f64 = b.precip.iter().sum();
        assert!(t.balance_residual(&b.precip).abs() <= 1e-6 * p, "x2 = {x2}");
    }
}

#[test]
fn lr2_balance_closes() {
    let b = synth_basin(4, 10).unwrap();
    let params = ModelParams::Lr2(Lr2Params::new(300.0, 20.0).unwrap());
    let t = simulate_trace(&params, &b.precip, &b.pet).unwrap();
    let p: f64 = b.precip.iter().sum();
    assert!(t.balance_residual(&b.precip).abs() <= 1e-9 * p);
}

#[test]
fn stores_stay_in_bounds_under_random_forcing() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let params = Gr4jParams::new(
            rng.random_range(10.0..3000.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(5.0..1000.0),
            rng.random_range(0.5..10.0),
        )
        .unwrap();
        let model = Gr4j::new(params).unwrap();
        let mut st = model.initial_state();
        for _ in 0..1000 {
            let p = if rng.random::<f64>() < 0.4 {
                rng.random_range(0.0..150.0)
            } else {
                0.0
            };
            let e = rng.random_range(0.0..10.0);
            let fl = model.step(&mut st, p, e);
            assert!((0.0..=params.x1).contains(&st.s), "{params:?} s={}", st.s);
            assert!((0.0..=params.x3).contains(&st.r), "{params:?} r={}", st.r);
            assert!(fl.q >= 0.0 && fl.aet >= 0.0 && fl.aet <= p + e + 1e-12);
        }
    }
}

#[test]
fn recession_without_rain_is_non_increasing() {
    let params = Gr4jParams::new(350.0, 0.0, 90.0, 1.7).unwrap();
    let model = Gr4j::new(params).unwrap();
    let mut st = model.initial_state();
    for _ in 0..30 {
        model.step(&mut st, 20.0, 1.0);
    }
    let memory = (2.0 * params.x4).ceil() as usize;
    let q: Vec<f64> = (0..200).map(|_| model.step(&mut st, 0.0, 2.0).q).collect();
    assert!(q[memory..].windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn uh_ordinates_sum_to_one() {
    for x4 in [0.5, 1.0, 1.7, 2.0, 3.3, 7.25, 10.0] {
        let (a, b) = uh_ordinates(x4).unwrap();
        assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!((b.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert_eq!(a.len(), x4.ceil() as usize);
        assert_eq!(b.len(), (2.0 * x4).ceil() as usize);
    }
}

#[test]
fn pet_is_zero_below_minus_five() {
    for doy in [1, 100, 200, 365, 366] {
        assert_eq!(oudin_pet(-5.0, 0.7, doy).unwrap(), 0.0);
        assert!(oudin_pet(10.0, 0.7, doy).unwrap() > 0.0);
    }
}
