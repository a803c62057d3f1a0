//! Property checks run against one loaded model: certificate invariance,
//! the representation homomorphism, jump closure, generator normalization,
//! constraint reduction and identity soundness on small probe graphs.

use crate::algebra::{reduce, RuleAlgebraElement};
use crate::dpo::{rule_canonical_form, LinearRule, RuleJson};
use crate::graph::Graph;
use crate::model::Model;
use crate::rational::fmt_q;
use crate::state::{evaluate_observable, jump_closure, represent, State};
use crate::Result;
use num::{Signed, Zero};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

impl Check {
    pub fn line(&self) -> String {
        let tag = if self.passed { "ok  " } else { "FAIL" };
        if self.detail.is_empty() {
            format!("{tag} {} ({} cases)", self.name, self.cases)
        } else {
            format!("{tag} {} ({} cases): {}", self.name, self.cases, self.detail)
        }
    }
}

const MAX_PROBE_VERTICES: usize = 8;

fn reversed(r: &LinearRule) -> Result<LinearRule> {
    let mut j = RuleJson::encode(r, "");
    for g in [&mut j.output, &mut j.context, &mut j.input] {
        g.vertices.reverse();
        g.edges.reverse();
    }
    j.decode(r.sig(), "relabeled")
}

fn probes(m: &Model) -> Vec<Graph> {
    let mut out: Vec<Graph> = vec![];
    let mut small = vec![];
    for r in &m.rules {
        for (_, t) in &r.terms {
            small.push(t.input.clone());
            small.push(t.output.clone());
        }
    }
    if let Some(g) = m.initial_graph() {
        small.push(g.clone());
    }
    let base = small.clone();
    for (i, a) in base.iter().enumerate() {
        for b in &base[i..] {
            if let Ok((u, _, _)) = a.disjoint_union(b) {
                small.push(u);
            }
        }
    }
    for g in small {
        if g.n() <= MAX_PROBE_VERTICES && m.constraint.violated_by(&g).is_none() && !out.iter().any(|x| x.identical(&g)) {
            out.push(g);
        }
    }
    out
}

fn elements(m: &Model) -> Vec<(String, RuleAlgebraElement)> {
    let mut out: Vec<_> = m.rules.iter().map(|r| (r.name.clone(), r.element())).collect();
    out.extend(m.observables.iter().map(|o| (o.obs.name.clone(), o.obs.element())));
    out
}

fn run(name: &str, f: impl FnOnce(&mut usize) -> Result<Option<String>>) -> Check {
    let mut cases = 0;
    match f(&mut cases) {
        Ok(None) => Check { name: name.into(), passed: true, cases, detail: String::new() },
        Ok(Some(d)) => Check { name: name.into(), passed: false, cases, detail: d },
        Err(e) => Check { name: name.into(), passed: false, cases, detail: e.to_string() },
    }
}

/// Runs every check; a failing check does not stop the others.
pub fn validate_model(m: &Model) -> Vec<Check> {
    let xs = probes(m);
    let els = elements(m);
    let mut out = vec![];

    out.push(run("certificates invariant under relabeling", |n| {
        let mut rules: Vec<&LinearRule> = m.rules.iter().flat_map(|r| r.terms.iter().map(|(_, t)| t)).collect();
        rules.extend(m.observables.iter().flat_map(|o| o.obs.terms.iter().map(|(_, t)| t)));
        for r in rules {
            *n += 1;
            if rule_canonical_form(r) != rule_canonical_form(&reversed(r)?) {
                return Ok(Some(format!("certificate of {} depends on labels", r.describe())));
            }
        }
        Ok(None)
    }));

    out.push(run("representation homomorphism", |n| {
        for (an, a) in &els {
            for (bn, b) in &els {
                let ab = a.product(b)?;
                for x in &xs {
                    *n += 1;
                    let s = State::pure(x);
                    if represent(&ab, &s)? != represent(a, &represent(b, &s)?)? {
                        return Ok(Some(format!("{an} * {bn} on {}", x.describe())));
                    }
                }
            }
        }
        Ok(None)
    }));

    out.push(run("jump closure", |n| {
        for (an, a) in &els {
            let o = jump_closure(a);
            for x in &xs {
                *n += 1;
                let lhs = represent(a, &State::pure(x))?.project();
                let rhs = evaluate_observable(&o, x);
                if lhs != rhs {
                    return Ok(Some(format!("{an} on {}: {} vs {}", x.describe(), fmt_q(&lhs), fmt_q(&rhs))));
                }
            }
        }
        Ok(None)
    }));

    out.push(run("generator annihilated by projection", |n| {
        let h = m.hamiltonian()?;
        for x in &xs {
            *n += 1;
            let p = h.apply(&State::pure(x))?.project();
            if !p.is_zero() {
                return Ok(Some(format!("⟨|H|{}⟩ = {}", x.describe(), fmt_q(&p))));
            }
        }
        Ok(None)
    }));

    out.push(run("constraint reduction", |n| {
        if m.constraint.is_empty() {
            return Ok(None);
        }
        for o in &m.observables {
            for r in &m.rules {
                let c = o.obs.element().commutator(&r.element())?;
                let red = reduce(&c, &m.constraint);
                for x in &xs {
                    *n += 1;
                    let s = State::pure(x);
                    if represent(&c, &s)? != represent(&red, &s)? {
                        return Ok(Some(format!("[{}, {}] on {}", o.obs.name, r.name, x.describe())));
                    }
                }
            }
        }
        Ok(None)
    }));

    out.push(run("identities vanish", |n| {
        for i in &m.identities {
            for x in &xs {
                *n += 1;
                let v = evaluate_observable(i, x);
                if !v.is_zero() {
                    return Ok(Some(format!("{} = {} on {}", i.name, fmt_q(&v), x.describe())));
                }
            }
        }
        Ok(None)
    }));

    out.push(run("initial state", |n| {
        let Some(g) = m.initial_graph() else {
            return Ok(None);
        };
        *n += 1;
        if let Some(p) = m.constraint.violated_by(g) {
            return Ok(Some(format!("initial graph contains forbidden pattern {p}")));
        }
        for o in &m.observables {
            *n += 1;
            let v = evaluate_observable(&o.obs, g);
            if !v.is_integer() || v.is_negative() {
                return Ok(Some(format!("observable {} = {}", o.obs.name, fmt_q(&v))));
            }
        }
        Ok(None)
    }));
    out
}
