//! Graph states, the canonical representation, observables and the
//! decomposition of observables into connected ones.

use crate::algebra::{reduce, ConstraintSet, RuleAlgebraElement};
use crate::dpo::{apply_unchecked, canonicalize_graph, canonicalize_rule, LinearRule};
use crate::graph::{count_admissible, for_each_mono, CanonicalForm, Graph, HostIndex};
use crate::poly::{solve_linear, Poly};
use crate::rational::{fmt_q, Q};
use crate::{term_budget, Error, Result};
use num::{One, Signed, Zero};
use std::collections::{BTreeMap, HashMap};

/// Formal combination of graph isomorphism classes.
#[derive(Clone, Debug, Default)]
pub struct State {
    terms: BTreeMap<CanonicalForm, (Q, Graph)>,
}

impl PartialEq for State {
    fn eq(&self, o: &Self) -> bool {
        self.terms.len() == o.terms.len() && self.terms.iter().all(|(k, (w, _))| o.terms.get(k).is_some_and(|x| &x.0 == w))
    }
}

impl State {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn pure(g: &Graph) -> Self {
        let mut s = Self::zero();
        s.add(Q::one(), g);
        s
    }

    pub fn add(&mut self, w: Q, g: &Graph) {
        let (cf, rep) = canonicalize_graph(g);
        self.add_canonical(w, cf, rep);
    }

    fn add_canonical(&mut self, w: Q, cf: CanonicalForm, g: Graph) {
        if w.is_zero() {
            return;
        }
        let e = self.terms.entry(cf.clone()).or_insert_with(|| (Q::zero(), g));
        e.0 += w;
        if e.0.is_zero() {
            self.terms.remove(&cf);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Q, &Graph)> {
        self.terms.values().map(|(w, g)| (w, g))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn weight(&self, g: &Graph) -> Q {
        let (cf, _) = canonicalize_graph(g);
        self.terms.get(&cf).map(|x| x.0.clone()).unwrap_or_else(Q::zero)
    }

    /// `⟨|`: sum of all weights.
    pub fn project(&self) -> Q {
        self.terms.values().fold(Q::zero(), |a, (w, _)| a + w)
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero();
        for (cf, (w, g)) in &self.terms {
            out.add_canonical(w * c, cf.clone(), g.clone());
        }
        out
    }
}

/// `ρ(a)|s⟩`: every term applied along every admissible match.
pub fn represent(a: &RuleAlgebraElement, s: &State) -> Result<State> {
    let budget = term_budget();
    let mut count = 0usize;
    let mut out = State::zero();
    for (_, t) in a.terms() {
        for (w, x) in s.terms() {
            t.rule.input.check_signature(x)?;
            let idx = HostIndex::new(x);
            let mut err = None;
            for_each_mono(&t.rule.input, &idx, &mut |m| {
                count += 1;
                if count > budget {
                    err = Some(Error::BudgetExceeded { what: "representation".into(), budget });
                    return false;
                }
                if let Some(y) = apply_unchecked(&t.rule, x, m) {
                    let (cf, rep) = canonicalize_graph(&y);
                    out.add_canonical(&t.coeff * w, cf, rep);
                }
                true
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok(out)
}

/// Signed combination of diagonal rules `P <- K -> P`.
#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub terms: Vec<(Q, LinearRule)>,
}

impl Observable {
    pub fn new(name: &str, terms: Vec<(Q, LinearRule)>) -> Self {
        Observable { name: name.to_string(), terms }
    }

    /// Single pattern with the given core.
    pub fn pattern(name: &str, coeff: Q, pattern: &Graph, core_v: &[u32], core_e: &[u32]) -> Result<Self> {
        Ok(Self::new(name, vec![(coeff, LinearRule::diagonal(pattern, core_v, core_e)?)]))
    }

    pub fn element(&self) -> RuleAlgebraElement {
        RuleAlgebraElement::from_terms(self.terms.iter().map(|(c, r)| (c.clone(), r)))
    }

    pub fn is_connected(&self) -> bool {
        self.terms.iter().all(|(_, r)| r.input.is_connected())
    }
}

/// `Σ c · #{admissible matches of P into x}`.
pub fn evaluate_observable(obs: &Observable, x: &Graph) -> Q {
    let idx = HostIndex::new(x);
    obs.terms.iter().fold(Q::zero(), |acc, (c, r)| {
        acc + c * Q::from_integer(count_admissible(&r.input, &r.kept_input_vertices(), &idx).into())
    })
}

pub fn evaluate_rule_count(r: &LinearRule, x: &Graph) -> u64 {
    count_admissible(&r.input, &r.kept_input_vertices(), &HostIndex::new(x))
}

/// `𝕆(a)` as an observable.
pub fn jump_closure(a: &RuleAlgebraElement) -> Observable {
    let j = a.jump_closure();
    Observable::new("𝕆", j.terms().map(|(_, t)| (t.coeff.clone(), t.rule.clone())).collect())
}

/// Rate as rational coefficient times a product of named parameters,
/// together with its numeric value.
#[derive(Clone, Debug, PartialEq)]
pub struct Rate {
    pub coeff: Q,
    pub params: Vec<String>,
    pub value: Q,
}

impl Rate {
    pub fn literal(v: Q) -> Self {
        Rate { coeff: v.clone(), params: vec![], value: v }
    }

    /// Parses `"0.5"`, `"κ0"`, `"2*κ0"`, `"1/2*a*b"` against parameter values.
    pub fn parse(expr: &str, params: &BTreeMap<String, Q>) -> Result<Self> {
        let mut coeff = Q::one();
        let mut names = vec![];
        let mut value = Q::one();
        for f in expr.split('*').map(str::trim) {
            if f.is_empty() {
                return Err(Error::Parse(format!("empty factor in rate {expr:?}")));
            }
            if let Some(c) = crate::rational::parse_q(f) {
                coeff *= &c;
                value *= c;
            } else if let Some(v) = params.get(f) {
                names.push(f.to_string());
                value *= v;
            } else {
                return Err(Error::Validation(vec![format!("rate {expr:?} references unknown parameter {f:?}")]));
            }
        }
        names.sort();
        Ok(Rate { coeff, params: names, value })
    }
}

#[derive(Clone, Debug)]
pub struct JumpTerm {
    pub name: String,
    pub rate: Rate,
    pub element: RuleAlgebraElement,
}

#[derive(Clone, Debug, Default)]
pub struct Hamiltonian {
    pub jumps: Vec<JumpTerm>,
    pub constraint: ConstraintSet,
}

impl Hamiltonian {
    pub fn new(jumps: Vec<JumpTerm>, constraint: ConstraintSet) -> Result<Self> {
        for j in &jumps {
            if !j.rate.value.is_positive() {
                return Err(Error::Validation(vec![format!("rate of {} must be positive", j.name)]));
            }
        }
        Ok(Hamiltonian { jumps, constraint })
    }

    /// `h = Σ κ_j h_j`.
    pub fn h(&self) -> RuleAlgebraElement {
        let mut h = RuleAlgebraElement::zero();
        for j in &self.jumps {
            h.add_assign_scaled(&j.element, &j.rate.value);
        }
        h
    }

    /// `H = ρ(h) − 𝕆(h)` applied to a state.
    pub fn apply(&self, s: &State) -> Result<State> {
        let h = self.h();
        let mut out = represent(&h, s)?;
        let o = jump_closure(&h);
        for (w, x) in s.terms() {
            let v = evaluate_observable(&o, x);
            out.add(-(w * v), x);
        }
        Ok(out)
    }
}

/// Splits diagonal observable terms into polynomials over a growing basis of
/// connected diagonal rules, memoized by certificate.
pub struct Decomposer<'a> {
    constraint: Option<&'a ConstraintSet>,
    pub basis: Vec<LinearRule>,
    index: HashMap<CanonicalForm, usize>,
    memo: HashMap<CanonicalForm, Poly>,
    steps: usize,
}

fn sub_diagonal(r: &LinearRule, vs: &[u32]) -> LinearRule {
    let inside = |v: u32| vs.contains(&v);
    let es: Vec<u32> = (0..r.input.m() as u32)
        .filter(|&e| inside(r.input.edge(e).src))
        .collect();
    let (p, incl) = r.input.subgraph(vs, &es);
    let (iv, ie) = incl.inverse(r.input.n(), r.input.m());
    let kv: Vec<u32> = r.i_embed.v.iter().filter_map(|&v| iv[v as usize]).collect();
    let ke: Vec<u32> = r.i_embed.e.iter().filter_map(|&e| ie[e as usize]).collect();
    LinearRule::diagonal(&p, &kv, &ke).expect("restriction of a diagonal rule")
}

impl<'a> Decomposer<'a> {
    pub fn new(constraint: Option<&'a ConstraintSet>) -> Self {
        Decomposer { constraint, basis: vec![], index: HashMap::new(), memo: HashMap::new(), steps: 0 }
    }

    /// Basis index of a connected diagonal rule, registering it if new.
    pub fn basis_index(&mut self, r: &LinearRule) -> usize {
        let (cf, rep) = canonicalize_rule(&r.jump_closure());
        if let Some(&i) = self.index.get(&cf) {
            return i;
        }
        self.basis.push(rep);
        self.index.insert(cf, self.basis.len() - 1);
        self.basis.len() - 1
    }

    pub fn decompose_rule(&mut self, r: &LinearRule) -> Result<Poly> {
        let (cf, rep) = canonicalize_rule(&r.jump_closure());
        if let Some(p) = self.memo.get(&cf) {
            return Ok(p.clone());
        }
        self.steps += 1;
        let budget = term_budget();
        if self.steps > budget {
            return Err(Error::BudgetExceeded { what: format!("decomposition of {}", rep.describe()), budget });
        }
        let res = self.decompose_fresh(&cf, &rep)?;
        self.memo.insert(cf, res.clone());
        Ok(res)
    }

    fn decompose_fresh(&mut self, cf: &CanonicalForm, rep: &LinearRule) -> Result<Poly> {
        if rep.input.is_empty() {
            return Ok(Poly::one());
        }
        if let Some(cs) = self.constraint {
            if cs.violated_by(&rep.input).is_some() {
                return Ok(Poly::zero());
            }
        }
        let comps = rep.input.connected_components();
        if comps.len() == 1 {
            return Ok(Poly::var(self.basis_index(rep)));
        }
        // peel the smallest component, ties broken by certificate
        let mut parts: Vec<(usize, CanonicalForm, Vec<u32>)> = comps
            .iter()
            .map(|(g, incl)| {
                let d = sub_diagonal(rep, &incl.v);
                (g.n(), crate::dpo::rule_canonical_form(&d), incl.v.clone())
            })
            .collect();
        parts.sort();
        let first = parts[0].2.clone();
        let rest: Vec<u32> = {
            let mut r: Vec<u32> = parts[1..].iter().flat_map(|p| p.2.iter().copied()).collect();
            r.sort_unstable();
            r
        };
        let c1 = sub_diagonal(rep, &first);
        let cr = sub_diagonal(rep, &rest);
        let mut prod = RuleAlgebraElement::basis(&c1).product(&RuleAlgebraElement::basis(&cr))?;
        if let Some(cs) = self.constraint {
            prod = reduce(&prod, cs);
        }
        let mut out = Poly::var(self.basis_index(&c1)).mul(&self.decompose_rule(&cr)?);
        for (tcf, t) in prod.terms() {
            if tcf == cf {
                continue;
            }
            let p = self.decompose_rule(&t.rule)?;
            out = out.sub(&p.scale(&t.coeff));
        }
        // the trivial composite must carry coefficient one
        debug_assert!(prod.coeff(cf).is_one() || self.constraint.is_some());
        Ok(out)
    }

    pub fn decompose(&mut self, obs: &Observable) -> Result<Poly> {
        let mut p = Poly::zero();
        for (c, r) in &obs.terms {
            p = p.add(&self.decompose_rule(r)?.scale(c));
        }
        Ok(p)
    }

    pub fn basis_name(&self, i: usize) -> String {
        format!("O{}", self.basis[i].input.describe())
    }
}

/// Decomposition with a fresh basis; returns the polynomial and the basis.
pub fn connected_decomposition(obs: &Observable, constraint: Option<&ConstraintSet>) -> Result<(Poly, Vec<LinearRule>)> {
    let mut d = Decomposer::new(constraint);
    let p = d.decompose(obs)?;
    Ok((p, d.basis))
}

/// Basis variables expressed through declared observables, modulo identities.
pub struct Expresser {
    declared: Vec<BTreeMap<usize, Q>>,
    identities: Vec<BTreeMap<usize, Q>>,
}

impl Expresser {
    /// `declared[d]` and `identities[z]` are linear forms over basis indices.
    pub fn new(declared: Vec<BTreeMap<usize, Q>>, identities: Vec<BTreeMap<usize, Q>>) -> Self {
        Expresser { declared, identities }
    }

    fn express_var(&self, b: usize) -> Option<Poly> {
        let rows: Vec<&BTreeMap<usize, Q>> = self.declared.iter().chain(&self.identities).collect();
        let mut cols: Vec<usize> = rows.iter().flat_map(|r| r.keys().copied()).chain([b]).collect();
        cols.sort_unstable();
        cols.dedup();
        // A^T y = e_b, one equation per basis column
        let a: Vec<Vec<Q>> = cols
            .iter()
            .map(|c| rows.iter().map(|r| r.get(c).cloned().unwrap_or_else(Q::zero)).collect())
            .collect();
        let rhs: Vec<Q> = cols.iter().map(|&c| if c == b { Q::one() } else { Q::zero() }).collect();
        let y = solve_linear(&a, &rhs, rows.len())?;
        let mut p = Poly::zero();
        for (d, yd) in y.iter().enumerate().take(self.declared.len()) {
            p.add_term(vec![(d, 1)], yd.clone());
        }
        Some(p)
    }

    /// Rewrites `p` over declared indices, or lists the basis variables that
    /// are not expressible.
    pub fn express(&self, p: &Poly) -> std::result::Result<Poly, Vec<usize>> {
        let mut subs = BTreeMap::new();
        let mut bad = vec![];
        for v in p.variables() {
            match self.express_var(v) {
                Some(x) => {
                    subs.insert(v, x);
                }
                None => bad.push(v),
            }
        }
        if bad.is_empty() {
            Ok(p.substitute(&subs))
        } else {
            Err(bad)
        }
    }
}

pub fn fmt_state(s: &State) -> String {
    if s.is_empty() {
        return "0".into();
    }
    s.terms()
        .map(|(w, g)| format!("{} · |{}⟩", fmt_q(w), if g.is_empty() { "∅".into() } else { g.describe() }))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Signature;
    use crate::rational::q;

    fn n_vertices(s: &std::sync::Arc<Signature>, n: usize) -> Graph {
        Graph::from_parts(s, &vec!["x"; n], &[])
    }

    #[test]
    fn hw_representation() {
        let s = Signature::build(&["x"], &[("d", true)]);
        let x = RuleAlgebraElement::basis(&LinearRule::discrete(&s, 0, 0, 1));
        let xd = RuleAlgebraElement::basis(&LinearRule::discrete(&s, 0, 1, 0));
        let st = State::pure(&n_vertices(&s, 3));
        assert_eq!(represent(&xd, &st).unwrap(), State::pure(&n_vertices(&s, 4)));
        assert_eq!(represent(&x, &st).unwrap(), State::pure(&n_vertices(&s, 2)).scale(&q(3)));
        let edge = Graph::from_parts(&s, &["x", "x"], &[("d", 0, 1)]);
        assert!(represent(&x, &State::pure(&edge)).unwrap().is_empty());
    }

    #[test]
    fn pair_observable_decomposes() {
        let s = Signature::build(&["x"], &[]);
        let two = n_vertices(&s, 2);
        let o = Observable::pattern("xx", q(1), &two, &[0, 1], &[]).unwrap();
        let (p, basis) = connected_decomposition(&o, None).unwrap();
        assert_eq!(basis.len(), 1);
        let v = Poly::var(0);
        assert_eq!(p, v.mul(&v).sub(&v));
    }

    #[test]
    fn hamiltonian_annihilated_by_projection() {
        let s = Signature::build(&["x"], &[]);
        let h = Hamiltonian::new(
            vec![
                JumpTerm { name: "b".into(), rate: Rate::literal(q(2)), element: RuleAlgebraElement::basis(&LinearRule::discrete(&s, 0, 1, 0)) },
                JumpTerm { name: "d".into(), rate: Rate::literal(q(1)), element: RuleAlgebraElement::basis(&LinearRule::discrete(&s, 0, 0, 1)) },
            ],
            ConstraintSet::default(),
        )
        .unwrap();
        let st = State::pure(&n_vertices(&s, 4));
        assert!(h.apply(&st).unwrap().project().is_zero());
    }

    #[test]
    fn rate_parsing() {
        let mut p = BTreeMap::new();
        p.insert("κ0".to_string(), q(1) / q(2));
        let r = Rate::parse("2*κ0", &p).unwrap();
        assert_eq!(r.value, q(1));
        assert_eq!(r.params, vec!["κ0".to_string()]);
        assert!(Rate::parse("k9", &p).is_err());
    }
}
