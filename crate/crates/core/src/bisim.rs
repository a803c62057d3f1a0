//! Discrete moment bisimulation: reaction networks read off a closed
//! operator, mass-action propensities and Gillespie's direct method.

use crate::moments::{fmt_sym, frozen_components, ClosureReport, Freeze, SymCoeff};
use crate::poly::Poly;
use crate::rational::{fmt_q, stirling2_table, to_f64, Q};
use crate::{Error, Result};
use num::{BigInt, Integer, One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub input: Vec<u32>,
    pub output: Vec<u32>,
    pub rate: f64,
    /// Symbolic rate, e.g. `4κ0`.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    /// Jump term the reaction was read off from.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Crn {
    pub species: Vec<String>,
    pub reactions: Vec<Reaction>,
}

impl Crn {
    pub fn new(species: Vec<String>, reactions: Vec<Reaction>) -> Result<Self> {
        let c = Crn { species, reactions };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        let n = self.species.len();
        let mut errs = vec![];
        for (j, r) in self.reactions.iter().enumerate() {
            if r.input.len() != n || r.output.len() != n {
                errs.push(format!("reaction {j}: stoichiometry length differs from species count {n}"));
            }
            if !(r.rate.is_finite() && r.rate > 0.0) {
                errs.push(format!("reaction {j}: rate must be positive and finite"));
            }
        }
        let mut names = self.species.clone();
        names.sort();
        names.dedup();
        if names.len() != n || self.species.iter().any(|s| s.is_empty()) {
            errs.push("species names must be unique and non-empty".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    fn side(&self, v: &[u32]) -> String {
        let parts: Vec<String> = v
            .iter()
            .zip(&self.species)
            .filter(|(k, _)| **k > 0)
            .map(|(k, s)| if *k == 1 { s.clone() } else { format!("{k} {s}") })
            .collect();
        if parts.is_empty() {
            "∅".into()
        } else {
            parts.join(" + ")
        }
    }

    /// One `2 A + B -> 3 A @ 0.5` line per reaction.
    pub fn to_arrows(&self) -> String {
        self.reactions
            .iter()
            .map(|r| format!("{} -> {} @ {}", self.side(&r.input), self.side(&r.output), r.rate))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Crn = serde_json::from_str(s).map_err(|e| Error::Parse(format!("line {}: {e}", e.line())))?;
        c.check()?;
        Ok(c)
    }

    pub fn export(&self, format: &str) -> Result<String> {
        match format {
            "json" => Ok(self.to_json()),
            "arrows" | "text" => Ok(self.to_arrows()),
            f => Err(Error::Validation(vec![format!("unknown export format {f:?} (expected json or arrows)")])),
        }
    }
}

/// `(n)_k = n (n−1) ⋯ (n−k+1)`.
pub fn falling_factorial(n: u64, k: u32) -> f64 {
    if (k as u64) > n {
        return 0.0;
    }
    (0..k as u64).map(|i| (n - i) as f64).product()
}

/// Mass-action propensity `κ_j Π_c (n_c)_{k_jc}`.
pub fn propensity(c: &Crn, j: usize, n: &[u64]) -> f64 {
    let r = &c.reactions[j];
    r.input.iter().zip(n).fold(r.rate, |a, (&k, &x)| a * falling_factorial(x, k))
}

/// Falling-factorial expansion `x^e = Σ_m S2(e,m) (x)_m` applied to every
/// variable of `p`; returns `k ↦ α_k` over `nvars` variables.
pub fn falling_factorial_basis(p: &Poly, nvars: usize) -> BTreeMap<Vec<u32>, Q> {
    let maxdeg = p.terms.keys().flat_map(|m| m.iter().map(|x| x.1)).max().unwrap_or(0) as usize;
    let s2 = stirling2_table(maxdeg);
    let mut out: BTreeMap<Vec<u32>, Q> = BTreeMap::new();
    for (m, c) in &p.terms {
        let mut acc: Vec<(Vec<u32>, Q)> = vec![(vec![0; nvars], c.clone())];
        for &(v, e) in m {
            let mut next = vec![];
            for (k, a) in &acc {
                for j in 1..=e as usize {
                    let s = &s2[e as usize][j];
                    if s.is_zero() {
                        continue;
                    }
                    let mut k2 = k.clone();
                    k2[v] = j as u32;
                    next.push((k2, a * Q::from_integer(s.clone())));
                }
            }
            acc = next;
        }
        for (k, a) in acc {
            let e = out.entry(k.clone()).or_insert_with(Q::zero);
            *e += a;
            if e.is_zero() {
                out.remove(&k);
            }
        }
    }
    out
}

/// Outcome of the discrete moment bisimulation check.
#[derive(Clone, Debug)]
pub struct DmbReport {
    pub crn: Option<Crn>,
    /// Violated conditions, one line each.
    pub diagnostics: Vec<String>,
    pub warnings: Vec<String>,
    /// Components with `η = 0`; they leave every count unchanged.
    pub omitted: Vec<String>,
}

fn rational_gcd(xs: &[Q]) -> Q {
    let mut n = BigInt::zero();
    let mut d = BigInt::one();
    for x in xs.iter().filter(|x| !x.is_zero()) {
        n = n.gcd(x.numer());
        d = d.lcm(x.denom());
    }
    Q::new(n, d)
}

/// Reads a reaction network off a closed report: each component with integer
/// `η` and polynomial `Σ α_k (O)_k`, `α_k > 0`, yields `k → k + η` at rate `κ·α_k`.
pub fn check_dmb(report: &ClosureReport, freeze: &Freeze, species: &[String]) -> Result<DmbReport> {
    let (kept, comps) = match frozen_components(report, freeze) {
        Ok(x) => x,
        Err(Error::NotClosed(why)) => {
            return Ok(DmbReport {
                crn: None,
                diagnostics: vec![format!("condition (i) fails: operator not closed: {why}")],
                warnings: vec![],
                omitted: vec![],
            })
        }
        Err(e) => return Err(e),
    };
    let names: Vec<String> = kept.iter().map(|&i| species[i].clone()).collect();
    let mut diagnostics = vec![];
    let mut warnings = vec![];
    let mut omitted = vec![];
    let mut reactions = vec![];
    for (i, name) in names.iter().enumerate() {
        let col: Vec<Q> = comps.iter().map(|c| c.1[i].clone()).collect();
        if col.iter().any(|x| !x.is_integer()) {
            let g = rational_gcd(&col);
            if !g.is_zero() && col.iter().all(|x| (x / &g).is_integer()) {
                warnings.push(format!("all η for {name} are integer multiples of {}; rescaling λ_{name} by that factor would give integer η", fmt_q(&g)));
            }
        }
    }
    for (j, eta, p) in &comps {
        let jr = &report.jumps[*j];
        if let Some(bad) = eta.iter().position(|x| !x.is_integer()) {
            diagnostics.push(format!("{}: condition (i) fails: η for {} is {}, not an integer", jr.name, names[bad], fmt_q(&eta[bad])));
            continue;
        }
        if eta.iter().all(|x| x.is_zero()) {
            omitted.push(format!("{}: η = 0", jr.name));
            continue;
        }
        for (k, a) in falling_factorial_basis(p, names.len()) {
            let term = names
                .iter()
                .zip(&k)
                .filter(|(_, e)| **e > 0)
                .map(|(n, e)| format!("({n})_{e}"))
                .collect::<Vec<_>>()
                .join("·");
            let term = if term.is_empty() { "1".into() } else { term };
            if a.is_negative() {
                diagnostics.push(format!("{}: condition (ii) fails: coefficient {} of {term} is negative", jr.name, fmt_q(&a)));
                continue;
            }
            let out: Vec<i64> = k
                .iter()
                .zip(eta)
                .map(|(x, e)| *x as i64 + e.to_integer().try_into().unwrap_or(i64::MIN / 2))
                .collect();
            if let Some(bad) = out.iter().position(|x| *x < 0) {
                diagnostics.push(format!(
                    "{}: condition (ii) fails: term {term} would consume more {} than it requires",
                    jr.name, names[bad]
                ));
                continue;
            }
            let mut sym = SymCoeff::new();
            sym.insert(jr.rate.params.clone(), &jr.rate.coeff * &a);
            reactions.push(Reaction {
                input: k.clone(),
                output: out.iter().map(|&x| x as u32).collect(),
                rate: to_f64(&(&jr.rate.value * &a)),
                label: fmt_sym(&sym),
                source: jr.name.clone(),
            });
        }
    }
    let crn = if diagnostics.is_empty() { Some(Crn::new(names, reactions)?) } else { None };
    Ok(DmbReport { crn, diagnostics, warnings, omitted })
}

#[derive(Clone, Debug)]
pub struct SsaConfig {
    pub seed: u64,
    pub t_max: f64,
    pub n_trajectories: usize,
    pub record_grid: Vec<f64>,
    pub parallel: bool,
}

impl SsaConfig {
    pub fn check(&self) -> Result<()> {
        let g = &self.record_grid;
        let ok = self.t_max.is_finite()
            && self.t_max >= 0.0
            && g.iter().all(|t| t.is_finite() && *t >= 0.0 && *t <= self.t_max)
            && g.windows(2).all(|w| w[0] < w[1]);
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(vec!["record grid must be increasing within [0, t_max]".into()]))
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// ChaCha8 stream of trajectory `index`, seeded by `splitmix64(seed ⊕ splitmix64(index))`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index)))
}

/// Exponential waiting time with total rate `a0`.
pub fn waiting_time(rng: &mut ChaCha8Rng, a0: f64) -> f64 {
    // 1 − U lies in (0, 1]
    -(1.0 - rng.gen::<f64>()).ln() / a0
}

/// Index `j` with `Σ_{i<j} w_i ≤ u·Σw < Σ_{i≤j} w_i`.
pub fn choose(rng: &mut ChaCha8Rng, w: &[f64], total: f64) -> usize {
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (j, x) in w.iter().enumerate() {
        acc += x;
        if target < acc && *x > 0.0 {
            return j;
        }
    }
    w.iter().rposition(|x| *x > 0.0).unwrap_or(0)
}

/// Direct method on one trajectory; `on_event` sees every jump.
fn run_ssa(
    c: &Crn,
    init: &[u64],
    grid: &[f64],
    t_max: f64,
    rng: &mut ChaCha8Rng,
    on_event: &mut dyn FnMut(f64, &[u64]),
) -> Result<Vec<Vec<i64>>> {
    let mut n = init.to_vec();
    let mut t = 0.0;
    let mut rec = vec![];
    let mut gi = 0;
    let mut a = vec![0.0; c.reactions.len()];
    loop {
        for (j, x) in a.iter_mut().enumerate() {
            *x = propensity(c, j, &n);
        }
        let a0: f64 = a.iter().sum();
        if !a0.is_finite() {
            return Err(Error::Other(format!("propensity overflow at t = {t}")));
        }
        let next = if a0 > 0.0 { t + waiting_time(rng, a0) } else { f64::INFINITY };
        while gi < grid.len() && grid[gi] < next {
            rec.push(n.iter().map(|&x| x as i64).collect());
            gi += 1;
        }
        if next > t_max {
            return Ok(rec);
        }
        t = next;
        let r = &c.reactions[choose(rng, &a, a0)];
        for (s, x) in n.iter_mut().enumerate() {
            *x = *x - r.input[s] as u64 + r.output[s] as u64;
        }
        on_event(t, &n);
    }
}

/// Event-resolved path `(t, counts)` of one trajectory, starting at `t = 0`.
pub fn simulate_path(c: &Crn, init: &[u64], t_max: f64, seed: u64, index: u64) -> Result<Vec<(f64, Vec<u64>)>> {
    let mut rng = trajectory_rng(seed, index);
    let mut path = vec![(0.0, init.to_vec())];
    run_ssa(c, init, &[], t_max, &mut rng, &mut |t, n| path.push((t, n.to_vec())))?;
    Ok(path)
}

/// Gillespie direct method over `cfg.n_trajectories` independent streams.
pub fn simulate(c: &Crn, init: &[u64], cfg: &SsaConfig) -> Result<TrajectoryBatch> {
    cfg.check()?;
    c.check()?;
    if init.len() != c.species.len() {
        return Err(Error::Validation(vec![format!("initial state has {} counts for {} species", init.len(), c.species.len())]));
    }
    let one = |i: usize| {
        let mut rng = trajectory_rng(cfg.seed, i as u64);
        run_ssa(c, init, &cfg.record_grid, cfg.t_max, &mut rng, &mut |_, _| {})
    };
    let counts: Vec<Vec<Vec<i64>>> = if cfg.parallel {
        (0..cfg.n_trajectories).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..cfg.n_trajectories).map(one).collect::<Result<_>>()?
    };
    Ok(TrajectoryBatch { species: c.species.clone(), grid: cfg.record_grid.clone(), counts })
}

/// Integer observations `counts[trajectory][grid point][species]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryBatch {
    pub species: Vec<String>,
    pub grid: Vec<f64>,
    pub counts: Vec<Vec<Vec<i64>>>,
}

impl TrajectoryBatch {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn grid_index(&self, t: f64) -> Result<usize> {
        self.grid
            .iter()
            .position(|g| (g - t).abs() <= 1e-9 * (1.0 + t.abs()))
            .ok_or_else(|| Error::Validation(vec![format!("time {t} is not on the record grid")]))
    }

    fn column(&self, gi: usize, s: usize) -> impl Iterator<Item = f64> + '_ {
        self.counts.iter().map(move |tr| tr[gi][s] as f64)
    }

    pub fn mean(&self, gi: usize, s: usize) -> f64 {
        self.column(gi, s).sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self, gi: usize, a: usize, b: usize) -> f64 {
        let (ma, mb) = (self.mean(gi, a), self.mean(gi, b));
        let n = self.len() as f64;
        self.counts.iter().map(|tr| (tr[gi][a] as f64 - ma) * (tr[gi][b] as f64 - mb)).sum::<f64>() / (n - 1.0)
    }

    pub fn variance(&self, gi: usize, s: usize) -> f64 {
        self.covariance(gi, s, s)
    }

    /// Sample raw moment `⟨Π_s n_s^{e_s}⟩`.
    pub fn raw_moment(&self, gi: usize, e: &[u32]) -> f64 {
        self.counts
            .iter()
            .map(|tr| tr[gi].iter().zip(e).map(|(&x, &k)| (x as f64).powi(k as i32)).product::<f64>())
            .sum::<f64>()
            / self.len() as f64
    }

    /// Raw moments of total order `1..=order` at every grid point.
    pub fn moments(&self, order: u32) -> Vec<(Vec<u32>, Vec<f64>)> {
        let mut idx = vec![];
        fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if i == cur.len() {
                if cur.iter().sum::<u32>() > 0 {
                    out.push(cur.clone());
                }
                return;
            }
            for e in 0..=left {
                cur[i] = e;
                rec(i + 1, left - e, cur, out);
            }
            cur[i] = 0;
        }
        rec(0, order, &mut vec![0; self.species.len()], &mut idx);
        idx.sort_by(|a, b| a.iter().sum::<u32>().cmp(&b.iter().sum::<u32>()).then(b.cmp(a)));
        idx.into_iter()
            .map(|e| {
                let v = (0..self.grid.len()).map(|g| self.raw_moment(g, &e)).collect();
                (e, v)
            })
            .collect()
    }

    /// Exact integer histogram of one species.
    pub fn histogram(&self, gi: usize, s: usize) -> BTreeMap<i64, usize> {
        let mut h = BTreeMap::new();
        for tr in &self.counts {
            *h.entry(tr[gi][s]).or_insert(0) += 1;
        }
        h
    }

    /// Histogram of the full count vector.
    pub fn joint_histogram(&self, gi: usize) -> BTreeMap<Vec<i64>, usize> {
        let mut h = BTreeMap::new();
        for tr in &self.counts {
            *h.entry(tr[gi].clone()).or_insert(0) += 1;
        }
        h
    }

    /// `⟨e^{λ·n(t)}⟩` with its jackknife standard error.
    pub fn estimate_emgf(&self, t: f64, lambda: &[f64]) -> Result<(f64, f64)> {
        let gi = self.grid_index(t)?;
        if lambda.len() != self.species.len() {
            return Err(Error::Validation(vec![format!("λ has {} entries for {} species", lambda.len(), self.species.len())]));
        }
        if self.len() < 2 {
            return Err(Error::Validation(vec!["need at least two trajectories".into()]));
        }
        let xs: Vec<f64> = self
            .counts
            .iter()
            .map(|tr| tr[gi].iter().zip(lambda).map(|(&c, l)| l * c as f64).sum::<f64>().exp())
            .collect();
        let n = xs.len() as f64;
        let total: f64 = xs.iter().sum();
        let mean = total / n;
        // leave-one-out means
        let loo: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1.0)).collect();
        let lbar = loo.iter().sum::<f64>() / n;
        let var = (n - 1.0) / n * loo.iter().map(|l| (l - lbar).powi(2)).sum::<f64>();
        Ok((mean, var.sqrt()))
    }

    /// Columns `t, species...`, one row per grid point per trajectory.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Other(e.to_string());
        let mut head = vec!["t".to_string()];
        head.extend(self.species.iter().cloned());
        out.write_record(&head).map_err(io)?;
        for tr in &self.counts {
            for (t, row) in self.grid.iter().zip(tr) {
                let mut rec = vec![t.to_string()];
                rec.extend(row.iter().map(|x| x.to_string()));
                out.write_record(&rec).map_err(io)?;
            }
        }
        out.flush().map_err(|e| Error::Other(e.to_string()))
    }

    /// Columns `t, mean_*, var_*, cov_*_*`.
    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Other(e.to_string());
        let s = &self.species;
        let mut head = vec!["t".to_string()];
        head.extend(s.iter().map(|x| format!("mean_{x}")));
        head.extend(s.iter().map(|x| format!("var_{x}")));
        let mut pairs = vec![];
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                head.push(format!("cov_{}_{}", s[a], s[b]));
                pairs.push((a, b));
            }
        }
        out.write_record(&head).map_err(io)?;
        for (gi, t) in self.grid.iter().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend((0..s.len()).map(|i| self.mean(gi, i).to_string()));
            rec.extend((0..s.len()).map(|i| self.variance(gi, i).to_string()));
            rec.extend(pairs.iter().map(|&(a, b)| self.covariance(gi, a, b).to_string()));
            out.write_record(&rec).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Other(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn death(tau: f64) -> Crn {
        Crn::new(vec!["X".into()], vec![Reaction { input: vec![1], output: vec![0], rate: tau, label: String::new(), source: String::new() }])
            .unwrap()
    }

    #[test]
    fn propensities() {
        let c = Crn::new(
            vec!["A".into()],
            vec![
                Reaction { input: vec![2], output: vec![0], rate: 1.0, label: String::new(), source: String::new() },
                Reaction { input: vec![0], output: vec![1], rate: 0.5, label: String::new(), source: String::new() },
            ],
        )
        .unwrap();
        assert_eq!(propensity(&c, 0, &[5]), 20.0);
        assert_eq!(propensity(&c, 1, &[5]), 0.5);
        assert_eq!(propensity(&c, 0, &[1]), 0.0);
        assert_eq!(c.to_arrows(), "2 A -> ∅ @ 1\n∅ -> A @ 0.5");
    }

    #[test]
    fn falling_basis() {
        // x^2 = (x)_2 + (x)_1
        let x = Poly::var(0);
        let ff = falling_factorial_basis(&x.mul(&x), 1);
        assert_eq!(ff.get(&vec![2]), Some(&q(1)));
        assert_eq!(ff.get(&vec![1]), Some(&q(1)));
        // x y − y = (x)_1 (y)_1 − (y)_1
        let y = Poly::var(1);
        let ff = falling_factorial_basis(&x.mul(&y).sub(&y), 2);
        assert_eq!(ff.get(&vec![1, 1]), Some(&q(1)));
        assert_eq!(ff.get(&vec![0, 1]), Some(&q(-1)));
    }

    #[test]
    fn seeded_and_parallel_agree() {
        let c = death(1.0);
        let mut cfg = SsaConfig { seed: 7, t_max: 2.0, n_trajectories: 64, record_grid: vec![0.0, 1.0, 2.0], parallel: true };
        let a = simulate(&c, &[20], &cfg).unwrap();
        cfg.parallel = false;
        let b = simulate(&c, &[20], &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.counts.iter().all(|tr| tr[0] == vec![20]));
        let (m, se) = a.estimate_emgf(1.0, &[0.0]).unwrap();
        assert_eq!((m, se), (1.0, 0.0));
        assert!(a.estimate_emgf(0.5, &[0.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = death(0.25);
        assert_eq!(Crn::from_json(&c.to_json()).unwrap(), c);
        assert!(c.export("kappa").is_err());
        let e = Crn::default();
        assert_eq!(e.to_arrows(), "");
    }
}
