//! Graph-level CTMC sampler used to validate bisimulations: Gillespie's
//! direct method run on concrete graphs, one event per admissible match.

use crate::bisim::{choose, trajectory_rng, waiting_time, SsaConfig, TrajectoryBatch};
use crate::dpo::{apply_unchecked, LinearRule};
use crate::graph::{count_admissible, for_each_mono, Graph, HostIndex, Morphism};
use crate::rational::to_f64;
use crate::state::{evaluate_observable, Hamiltonian, Observable};
use crate::{Error, Result};
use num::Signed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Channel {
    rate: f64,
    rule: LinearRule,
    keep: Vec<bool>,
}

fn channels(h: &Hamiltonian) -> Result<Vec<Channel>> {
    let mut out = vec![];
    for j in &h.jumps {
        for (_, t) in j.element.terms() {
            if !t.coeff.is_positive() {
                return Err(Error::Validation(vec![format!(
                    "jump term {} has a non-positive coefficient and cannot be sampled",
                    j.name
                )]));
            }
            out.push(Channel { rate: to_f64(&(&j.rate.value * &t.coeff)), keep: t.rule.kept_input_vertices(), rule: t.rule.clone() });
        }
    }
    Ok(out)
}

/// The `u`-th admissible match of `c` in `x`, in enumeration order.
fn nth_admissible(c: &Channel, idx: &HostIndex, u: u64) -> Option<Morphism> {
    let mut seen = 0u64;
    let mut hit = None;
    for_each_mono(&c.rule.input, idx, &mut |m| {
        let ok = c.keep.iter().enumerate().all(|(v, &k)| k || idx.degree(m.v[v]) as usize == c.rule.input.degree(v as u32));
        if ok {
            if seen == u {
                hit = Some(m.clone());
                return false;
            }
            seen += 1;
        }
        true
    });
    hit
}

fn values(obs: &[Observable], x: &Graph) -> Result<Vec<i64>> {
    obs.iter()
        .map(|o| {
            let v = evaluate_observable(o, x);
            if !v.is_integer() {
                return Err(Error::Validation(vec![format!("observable {} is not integer valued", o.name)]));
            }
            i64::try_from(v.to_integer()).map_err(|_| Error::Other("observable value overflow".into()))
        })
        .collect()
}

fn run(chs: &[Channel], init: &Graph, obs: &[Observable], cfg: &SsaConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<i64>>> {
    let mut x = init.clone();
    let mut t = 0.0;
    let mut rec = vec![];
    let mut gi = 0;
    loop {
        let idx = HostIndex::new(&x);
        let counts: Vec<u64> = chs.iter().map(|c| count_admissible(&c.rule.input, &c.keep, &idx)).collect();
        let a: Vec<f64> = chs.iter().zip(&counts).map(|(c, &n)| c.rate * n as f64).collect();
        let a0: f64 = a.iter().sum();
        let next = if a0 > 0.0 { t + waiting_time(rng, a0) } else { f64::INFINITY };
        if gi < cfg.record_grid.len() && cfg.record_grid[gi] < next {
            let v = values(obs, &x)?;
            while gi < cfg.record_grid.len() && cfg.record_grid[gi] < next {
                rec.push(v.clone());
                gi += 1;
            }
        }
        if next > cfg.t_max {
            return Ok(rec);
        }
        t = next;
        let r = choose(rng, &a, a0);
        let u = rng.gen_range(0..counts[r]);
        let m = nth_admissible(&chs[r], &idx, u).ok_or_else(|| Error::Other("admissible match vanished".into()))?;
        let y = apply_unchecked(&chs[r].rule, &x, &m).ok_or_else(|| Error::Other("admissible match failed to apply".into()))?;
        x = y;
    }
}

/// Observable values along `cfg.n_trajectories` graph-level trajectories.
pub fn simulate_graph(h: &Hamiltonian, init: &Graph, obs: &[Observable], cfg: &SsaConfig) -> Result<TrajectoryBatch> {
    cfg.check()?;
    let chs = channels(h)?;
    let one = |i: usize| run(&chs, init, obs, cfg, &mut trajectory_rng(cfg.seed, i as u64));
    let counts: Vec<Vec<Vec<i64>>> = if cfg.parallel {
        (0..cfg.n_trajectories).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..cfg.n_trajectories).map(one).collect::<Result<_>>()?
    };
    Ok(TrajectoryBatch { species: obs.iter().map(|o| o.name.clone()).collect(), grid: cfg.record_grid.clone(), counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ConstraintSet, RuleAlgebraElement};
    use crate::graph::Signature;
    use crate::rational::q;
    use crate::state::{JumpTerm, Rate};

    #[test]
    fn pure_death_on_vertices() {
        let s = Signature::build(&["x"], &[]);
        let h = Hamiltonian::new(
            vec![JumpTerm { name: "d".into(), rate: Rate::literal(q(1)), element: RuleAlgebraElement::basis(&LinearRule::discrete(&s, 0, 0, 1)) }],
            ConstraintSet::default(),
        )
        .unwrap();
        let v = Graph::from_parts(&s, &["x"], &[]);
        let n = Observable::pattern("n", q(1), &v, &[0], &[]).unwrap();
        let init = Graph::from_parts(&s, &["x"; 30], &[]);
        let cfg = SsaConfig { seed: 3, t_max: 1.0, n_trajectories: 2000, record_grid: vec![0.0, 1.0], parallel: true };
        let b = simulate_graph(&h, &init, &[n], &cfg).unwrap();
        assert_eq!(b.mean(0, 0), 30.0);
        let want = 30.0 * (-1.0f64).exp();
        let se = (b.variance(1, 0) / b.len() as f64).sqrt();
        assert!((b.mean(1, 0) - want).abs() < 4.0 * se, "{} vs {want}", b.mean(1, 0));
    }
}
