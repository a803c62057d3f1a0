use num::Zero;
use proptest::prelude::*;
use rasir::algebra::reduce;
use rasir::graph::Graph;
use rasir::model::Model;
use rasir::moments::{check_polynomial_jump_closure, derive_differential_operator, moment_odes, ClosureReport, DifferentialOperator, Freeze};
use rasir::rational::{q, to_f64, Q};
use rasir::state::{evaluate_observable, represent, State};
use std::collections::BTreeMap;

fn closed(m: &Model) -> ClosureReport {
    let obs: Vec<_> = m.observables.iter().map(|o| o.obs.clone()).collect();
    let r = check_polynomial_jump_closure(&m.hamiltonian().unwrap(), &obs, &m.identities, 6).unwrap();
    assert!(r.closed, "{}", r.pretty());
    r
}

fn operator(m: &Model, r: &ClosureReport, freeze: bool) -> DifferentialOperator {
    let fz = if freeze {
        let c = r.conserved();
        let values = m.initial_values(&c).unwrap();
        Freeze { indices: c, values }
    } else {
        Freeze::default()
    };
    let vars: Vec<String> = m.observables.iter().map(|o| o.variable.clone()).collect();
    derive_differential_operator(r, &vars, &fz).unwrap()
}

fn param(m: &Model, k: &str) -> f64 {
    to_f64(&m.params[k])
}

#[test]
fn birth_death_operator_solves_the_emgf() {
    let m = Model::open("birth-death").unwrap();
    let d = operator(&m, &closed(&m), false);
    let (beta, tau) = (param(&m, "β"), param(&m, "τ"));
    let n0 = 10.0;
    for &t in &[0.1, 0.5, 1.0, 2.0, 4.0] {
        for &l in &[-1.0, -0.5, -0.1, 0.0, 0.3, 0.7] {
            let (z, e) = (f64::exp(l), f64::exp(-tau * t));
            let a = beta / tau * (1.0 - e);
            let b = 1.0 + e * (z - 1.0);
            let mm = (a * (z - 1.0)).exp() * b.powf(n0);
            let dl = mm * (a * z + n0 * e * z / b);
            let dt = mm * (beta * e * (z - 1.0) - n0 * tau * e * (z - 1.0) / b);
            let deriv = |k: &[u32]| match k {
                [0] => mm,
                [1] => dl,
                _ => panic!("unexpected derivative order {k:?}"),
            };
            let dm = d.apply_at(&m.params, &[l], &deriv).unwrap();
            assert!((dt - dm).abs() < 1e-6, "t={t} λ={l}: {dt} vs {dm}");
        }
    }
}

#[test]
fn frozen_voter_operator_solves_the_edge_emgf() {
    let m = Model::open("voter-flip").unwrap();
    let r = closed(&m);
    let d = operator(&m, &r, true);
    assert_eq!(d.vars, ["λww", "λwb", "λbb"]);
    let init = m.initial_values(&[0, 1, 2, 3, 4]).unwrap();
    let [nw, nb, nww, nwb, nbb]: [f64; 5] = init.iter().map(to_f64).collect::<Vec<_>>().try_into().unwrap();
    let (k0, k1) = (param(&m, "κ0") * (nw - 1.0), param(&m, "κ1") * (nb - 1.0));
    let kk = k0 + k1;
    for &t in &[0.0, 0.2, 1.0, 5.0] {
        for lam in [[0.0f64, 0.0, 0.0], [0.3, -0.2, 0.1], [-0.5, 0.4, 0.2], [0.1, 0.1, -0.6]] {
            let e = (-kk * t).exp();
            let (xww, xwb, xbb) = (lam[0].exp(), lam[1].exp(), lam[2].exp());
            let f = e * xwb + (1.0 - e) * (k0 / kk * xww + k1 / kk * xbb);
            let mm = (lam[0] * nww + lam[2] * nbb).exp() * f.powf(nwb);
            let d_wb = mm * nwb * e * xwb / f;
            let d_t = mm * nwb * (-kk * e) * (xwb - k0 / kk * xww - k1 / kk * xbb) / f;
            let deriv = |k: &[u32]| match k {
                [0, 0, 0] => mm,
                [0, 1, 0] => d_wb,
                _ => panic!("unexpected derivative {k:?}"),
            };
            let dm = d.apply_at(&m.params, &lam, &deriv).unwrap();
            assert!((d_t - dm).abs() < 1e-6 * (1.0 + d_t.abs()), "t={t} λ={lam:?}: {d_t} vs {dm}");
        }
    }
}

#[test]
fn eigen_certificates_are_exact() {
    for name in ["birth-death", "voter-flip", "tmt"] {
        let m = Model::open(name).unwrap();
        let r = closed(&m);
        let mut n = 0;
        for j in &r.jumps {
            for c in &j.components {
                for (i, o) in m.observables.iter().enumerate() {
                    let lhs = reduce(&o.obs.element().commutator(&c.element).unwrap(), &m.constraint);
                    assert_eq!(lhs, c.element.scale(&c.eta[i]), "{name}: {} along {}", j.name, o.obs.name);
                    n += 1;
                }
            }
        }
        assert!(n > 0);
    }
}

/// States reachable from the model's initial graph in at most `depth` jumps,
/// starting from `seeds` when given.
fn reachable(m: &Model, seeds: Vec<Graph>, depth: usize, cap: usize) -> Vec<Graph> {
    let els: Vec<_> = m.rules.iter().map(|r| r.element()).collect();
    let mut seen = State::zero();
    let mut frontier = seeds;
    let mut out = vec![];
    for _ in 0..=depth {
        let mut next = vec![];
        for g in frontier {
            if !seen.weight(&g).is_zero() || out.len() >= cap {
                continue;
            }
            seen.add(q(1), &g);
            for e in &els {
                for (_, y) in represent(e, &State::pure(&g)).unwrap().terms() {
                    next.push(y.clone());
                }
            }
            out.push(g);
        }
        frontier = next;
    }
    out
}

fn small_voter_states(m: &Model) -> Vec<Graph> {
    let s = m.sig.clone();
    let mut seeds = vec![];
    for colors in 0u32..16 {
        for links in 0u32..64 {
            let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
            let mut es: Vec<(&str, u32, u32)> = (0..4).map(|v| (if colors >> v & 1 == 1 { "b" } else { "w" }, v, v)).collect();
            es.extend(pairs.iter().enumerate().filter(|(i, _)| links >> i & 1 == 1).map(|(_, &(a, b))| ("link", a, b)));
            seeds.push(Graph::from_parts(&s, &["v"; 4], &es));
        }
    }
    seeds
}

#[test]
fn first_order_odes_match_direct_generator_action() {
    for name in ["birth-death", "voter-flip", "tmt"] {
        let m = Model::open(name).unwrap();
        let r = closed(&m);
        let d = operator(&m, &r, false);
        let sys = moment_odes(&d, &m.params, 1).unwrap();
        let h = m.hamiltonian().unwrap();
        let states = match name {
            "voter-flip" => small_voter_states(&m),
            _ => reachable(&m, vec![m.initial_graph().unwrap().clone()], 3, 60),
        };
        assert!(states.len() > 5, "{name}");
        for x in &states {
            let vals: Vec<Q> = m.observables.iter().map(|o| evaluate_observable(&o.obs, x)).collect();
            let hx = h.apply(&State::pure(x)).unwrap();
            for (mi, rhs) in sys.moments.iter().zip(&sys.rhs) {
                let i = mi.iter().position(|&e| e == 1).unwrap();
                let direct = hx.terms().fold(Q::zero(), |a, (w, y)| a + w * evaluate_observable(&m.observables[i].obs, y));
                let via_ode = rhs.iter().fold(Q::zero(), |a, (e, c)| {
                    a + c * e.iter().zip(&vals).fold(Q::from_integer(1.into()), |p, (k, v)| p * num::pow(v.clone(), *k as usize))
                });
                assert_eq!(direct, via_ode, "{name}: d/dt {} on {}", m.observables[i].obs.name, x.describe());
            }
        }
    }
}

#[test]
fn conserved_observables_have_static_generating_function() {
    let m = Model::open("voter-flip").unwrap();
    let r = closed(&m);
    let cons = r.conserved();
    assert_eq!(cons, vec![0, 1]);
    let d = operator(&m, &r, false);
    let nvars = d.vars.len();
    for (_, mu, _) in d.numeric(&m.params).unwrap() {
        for &i in &cons {
            assert!(mu[i].is_zero());
        }
    }
    // λ supported on conserved coordinates only: every factor e^{μ·λ} − 1 vanishes
    for lam in [[0.4, -0.3], [-1.0, 2.0]] {
        let mut full = vec![0.0; nvars];
        full[cons[0]] = lam[0];
        full[cons[1]] = lam[1];
        let v = d.apply_at(&m.params, &full, &|_| 1.0).unwrap();
        assert_eq!(v, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn birth_death_moment_odes_integrate_to_oracle_mean(beta in 0.1f64..5.0, tau in 0.1f64..3.0, n0 in 0u32..30) {
        let m = Model::open("birth-death").unwrap();
        let d = operator(&m, &closed(&m), false);
        let mut params = BTreeMap::new();
        params.insert("β".to_string(), rasir::rational::from_f64(beta).unwrap());
        params.insert("τ".to_string(), rasir::rational::from_f64(tau).unwrap());
        let sys = moment_odes(&d, &params, 1).unwrap();
        prop_assert!(sys.closed);
        let grid = [0.0, 0.5, 1.0];
        let sol = sys.integrate(&sys.initial_from_values(&[n0 as f64]), &grid, 1e-3).unwrap();
        for (t, row) in grid.iter().zip(&sol) {
            let want = beta / tau + (n0 as f64 - beta / tau) * (-tau * t).exp();
            prop_assert!((row[0] - want).abs() < 1e-8 * (1.0 + want.abs()), "{} vs {}", row[0], want);
        }
    }
}
