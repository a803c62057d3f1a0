use proptest::prelude::*;
use rasir::bisim::{check_dmb, simulate, simulate_path, Crn, SsaConfig, TrajectoryBatch};
use rasir::model::Model;
use rasir::moments::{check_polynomial_jump_closure, Freeze};
use rasir::rational::to_f64;
use rasir::graph::Graph;
use rasir::sampler::simulate_graph;
use rasir::state::evaluate_observable;

fn voter_crn(m: &Model) -> Crn {
    let obs: Vec<_> = m.observables.iter().map(|o| o.obs.clone()).collect();
    let r = check_polynomial_jump_closure(&m.hamiltonian().unwrap(), &obs, &m.identities, 6).unwrap();
    let c = r.conserved();
    let fz = Freeze { values: m.initial_values(&c).unwrap(), indices: c };
    let species: Vec<String> = m.observables.iter().map(|o| o.species.clone()).collect();
    let rep = check_dmb(&r, &fz, &species).unwrap();
    assert!(rep.diagnostics.is_empty(), "{:?}", rep.diagnostics);
    rep.crn.unwrap()
}

fn initial_counts(m: &Model, c: &Crn) -> Vec<u64> {
    c.species
        .iter()
        .map(|s| {
            let i = m.observables.iter().position(|o| &o.species == s).unwrap();
            to_f64(&m.initial_values(&[i]).unwrap()[0]) as u64
        })
        .collect()
}

fn log_factorial(n: u64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Independent units, each still `D` with probability `e^{-Kt}` and otherwise
/// `W` or `B` in proportion to the two flip channels.
fn multinomial_pmf(n: u64, p: [f64; 3], k: [u64; 3]) -> f64 {
    let mut l = log_factorial(n);
    for i in 0..3 {
        if p[i] == 0.0 {
            if k[i] > 0 {
                return 0.0;
            }
            continue;
        }
        l += k[i] as f64 * p[i].ln() - log_factorial(k[i]);
    }
    l.exp()
}

fn total_variation(b: &TrajectoryBatch, gi: usize, n: u64, p: [f64; 3], order: [usize; 3]) -> f64 {
    let h = b.joint_histogram(gi);
    let total = b.len() as f64;
    let mut tv = 0.0;
    let mut covered = 0.0;
    for w in 0..=n {
        for d in 0..=(n - w) {
            let bb = n - w - d;
            let mut key = vec![0i64; 3];
            key[order[0]] = w as i64;
            key[order[1]] = d as i64;
            key[order[2]] = bb as i64;
            let emp = h.get(&key).copied().unwrap_or(0) as f64 / total;
            covered += emp;
            tv += (emp - multinomial_pmf(n, p, [w, d, bb])).abs();
        }
    }
    // mass outside the simplex counts fully
    0.5 * (tv + (1.0 - covered))
}

#[test]
fn voter_edge_counts_are_multinomial() {
    let m = Model::open("voter-flip").unwrap();
    let c = voter_crn(&m);
    let pos = |s: &str| c.species.iter().position(|x| x == s).unwrap();
    let order = [pos("W"), pos("D"), pos("B")];
    let x0 = initial_counts(&m, &c);
    let n = x0[order[1]];
    assert_eq!((x0[order[0]], x0[order[2]]), (0, 0));
    let nw = to_f64(&m.initial_values(&[0]).unwrap()[0]);
    let nb = to_f64(&m.initial_values(&[1]).unwrap()[0]);
    let k0 = to_f64(&m.params["κ0"]) * (nw - 1.0);
    let k1 = to_f64(&m.params["κ1"]) * (nb - 1.0);
    let kk = k0 + k1;
    let cfg = SsaConfig { seed: 11, t_max: 20.0, n_trajectories: 100_000, record_grid: vec![1.0, 5.0, 20.0], parallel: true };
    let b = simulate(&c, &x0, &cfg).unwrap();
    for (gi, &t) in cfg.record_grid.iter().enumerate() {
        let e = (-kk * t).exp();
        let p = [(1.0 - e) * k0 / kk, e, (1.0 - e) * k1 / kk];
        let tv = total_variation(&b, gi, n, p, order);
        assert!(tv < 0.02, "t={t}: TV {tv}");
    }
}

#[test]
fn edge_total_is_conserved_along_paths() {
    let m = Model::open("voter-flip").unwrap();
    let c = voter_crn(&m);
    let x0 = initial_counts(&m, &c);
    let total: u64 = x0.iter().sum();
    for i in 0..200 {
        let path = simulate_path(&c, &x0, 30.0, 5, i).unwrap();
        assert!(path.len() > 1);
        for (_, x) in &path {
            assert_eq!(x.iter().sum::<u64>(), total);
        }
    }
}

/// Three white and eight black vertices, each white linked to five blacks.
fn small_voter_graph(m: &Model) -> Graph {
    let mut es: Vec<(&str, u32, u32)> = (0..11).map(|v| (if v < 3 { "w" } else { "b" }, v, v)).collect();
    for w in 0..3 {
        for k in 0..5 {
            es.push(("link", w, 3 + (w + k) % 8));
        }
    }
    Graph::from_parts(&m.sig, &["v"; 11], &es)
}

#[test]
fn graph_dynamics_and_reaction_network_agree() {
    let m = Model::open("voter-flip").unwrap();
    let g = small_voter_graph(&m);
    assert!(g.m() <= 60);
    let obs: Vec<_> = m.observables.iter().map(|o| o.obs.clone()).collect();
    let r = check_polynomial_jump_closure(&m.hamiltonian().unwrap(), &obs, &m.identities, 6).unwrap();
    let cons = r.conserved();
    let values = cons.iter().map(|&i| evaluate_observable(&obs[i], &g)).collect();
    let species: Vec<String> = m.observables.iter().map(|o| o.species.clone()).collect();
    let c = check_dmb(&r, &Freeze { indices: cons, values }, &species).unwrap().crn.unwrap();
    let kept: Vec<_> = c.species.iter().map(|s| obs[species.iter().position(|x| x == s).unwrap()].clone()).collect();
    let x0: Vec<u64> = kept.iter().map(|o| to_f64(&evaluate_observable(o, &g)) as u64).collect();
    assert_eq!(x0.iter().sum::<u64>(), 15);
    let grid = vec![0.5, 2.0, 6.0];
    let n = 10_000;
    let cfg = SsaConfig { seed: 21, t_max: 6.0, n_trajectories: n, record_grid: grid.clone(), parallel: true };
    let crn = simulate(&c, &x0, &cfg).unwrap();
    let gr = simulate_graph(&m.hamiltonian().unwrap(), &g, &kept, &SsaConfig { seed: 22, ..cfg.clone() }).unwrap();
    for gi in 0..grid.len() {
        for s in 0..c.species.len() {
            let (a, b) = (crn.mean(gi, s), gr.mean(gi, s));
            let se = ((crn.variance(gi, s) + gr.variance(gi, s)) / n as f64).sqrt();
            assert!((a - b).abs() <= 3.0 * se.max(1e-12), "t={} {}: {a} vs {b} (se {se})", grid[gi], c.species[s]);
            let sq = unit(s, c.species.len(), 2);
            let (a2, b2) = (crn.raw_moment(gi, &sq), gr.raw_moment(gi, &sq));
            let v2 = |bt: &TrajectoryBatch| {
                let xs: Vec<f64> = bt.counts.iter().map(|tr| (tr[gi][s] as f64).powi(2)).collect();
                let mu = xs.iter().sum::<f64>() / xs.len() as f64;
                xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
            };
            let se2 = ((v2(&crn) + v2(&gr)) / n as f64).sqrt();
            assert!((a2 - b2).abs() <= 3.0 * se2.max(1e-12), "t={} {} squared: {a2} vs {b2}", grid[gi], c.species[s]);
        }
    }
}

fn unit(i: usize, n: usize, k: u32) -> Vec<u32> {
    let mut e = vec![0; n];
    e[i] = k;
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn identical_configs_give_identical_bytes(seed in any::<u64>(), trajectories in 1usize..60) {
        let m = Model::open("voter-flip").unwrap();
        let c = voter_crn(&m);
        let x0 = initial_counts(&m, &c);
        let cfg = SsaConfig { seed, t_max: 3.0, n_trajectories: trajectories, record_grid: vec![0.0, 1.0, 3.0], parallel: true };
        let bytes = |b: &TrajectoryBatch| {
            let mut v = vec![];
            b.write_csv(&mut v).unwrap();
            v
        };
        let a = simulate(&c, &x0, &cfg).unwrap();
        let b = simulate(&c, &x0, &cfg).unwrap();
        let s = simulate(&c, &x0, &SsaConfig { parallel: false, ..cfg.clone() }).unwrap();
        prop_assert_eq!(bytes(&a), bytes(&b));
        prop_assert_eq!(bytes(&a), bytes(&s));
    }
}
