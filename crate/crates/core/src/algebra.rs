//! Formal rational combinations of rule isomorphism classes.

use crate::dpo::{canonicalize_rule, for_each_composite, parallel, LinearRule, RuleJson};
use crate::graph::{for_each_mono, CanonicalForm, Graph, HostIndex};
use crate::rational::{fmt_q, parse_q, Q};
use crate::{term_budget, Error, Result};
use num::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

#[derive(Clone, Debug)]
pub struct Term {
    pub coeff: Q,
    pub rule: LinearRule,
}

/// Terms keyed by rule certificate; zero coefficients never stored.
#[derive(Clone, Debug, Default)]
pub struct RuleAlgebraElement {
    terms: BTreeMap<CanonicalForm, Term>,
}

impl PartialEq for RuleAlgebraElement {
    fn eq(&self, other: &Self) -> bool {
        self.terms.len() == other.terms.len()
            && self.terms.iter().all(|(k, t)| other.terms.get(k).is_some_and(|u| u.coeff == t.coeff))
    }
}

impl RuleAlgebraElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `δ(r)`.
    pub fn basis(r: &LinearRule) -> Self {
        let mut a = Self::zero();
        a.add_rule(Q::one(), r);
        a
    }

    pub fn from_terms<'a>(terms: impl IntoIterator<Item = (Q, &'a LinearRule)>) -> Self {
        let mut a = Self::zero();
        for (c, r) in terms {
            a.add_rule(c, r);
        }
        a
    }

    pub fn add_rule(&mut self, c: Q, r: &LinearRule) {
        if c.is_zero() {
            return;
        }
        let (cf, rep) = canonicalize_rule(r);
        self.add_canonical(c, cf, rep);
    }

    fn add_canonical(&mut self, c: Q, cf: CanonicalForm, rep: LinearRule) {
        use std::collections::btree_map::Entry;
        if c.is_zero() {
            return;
        }
        match self.terms.entry(cf) {
            Entry::Vacant(v) => {
                v.insert(Term { coeff: c, rule: rep });
            }
            Entry::Occupied(mut o) => {
                o.get_mut().coeff += c;
                if o.get().coeff.is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CanonicalForm, &Term)> {
        self.terms.iter()
    }

    pub fn coeff(&self, cf: &CanonicalForm) -> Q {
        self.terms.get(cf).map(|t| t.coeff.clone()).unwrap_or_else(Q::zero)
    }

    pub fn coeff_of(&self, r: &LinearRule) -> Q {
        self.coeff(&crate::dpo::rule_canonical_form(r))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign_scaled(other, &Q::one());
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign_scaled(other, &-Q::one());
        out
    }

    pub fn add_assign_scaled(&mut self, other: &Self, c: &Q) {
        for (cf, t) in &other.terms {
            self.add_canonical(&t.coeff * c, cf.clone(), t.rule.clone());
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero();
        out.add_assign_scaled(self, c);
        out
    }

    /// Bilinear extension of `δ(r1) ∗ δ(r2) = Σ_μ δ(r1 ◁μ▷ r2)`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.combine(other, false)
    }

    /// Trivial-match compositions only.
    pub fn superposition(&self, other: &Self) -> Result<Self> {
        self.combine(other, true)
    }

    fn combine(&self, other: &Self, trivial_only: bool) -> Result<Self> {
        let budget = term_budget();
        let produced = AtomicUsize::new(0);
        let pairs: Vec<(&Term, &Term)> =
            self.terms.values().flat_map(|a| other.terms.values().map(move |b| (a, b))).collect();
        let parts: Vec<Result<Vec<(Q, CanonicalForm, LinearRule)>>> = pairs
            .par_iter()
            .map(|(a, b)| {
                let c = &a.coeff * &b.coeff;
                let mut out = vec![];
                let mut push = |r: LinearRule| -> Result<()> {
                    if produced.fetch_add(1, Ordering::Relaxed) >= budget {
                        return Err(Error::BudgetExceeded { what: "rule product".into(), budget });
                    }
                    let (cf, rep) = canonicalize_rule(&r);
                    out.push((c.clone(), cf, rep));
                    Ok(())
                };
                if trivial_only {
                    push(parallel(&a.rule, &b.rule)?)?;
                } else {
                    for_each_composite(&a.rule, &b.rule, &mut push)?;
                }
                Ok(out)
            })
            .collect();
        let mut res = Self::zero();
        for p in parts {
            for (c, cf, rep) in p? {
                res.add_canonical(c, cf, rep);
            }
        }
        Ok(res)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(self.product(other)?.sub(&other.product(self)?))
    }

    /// `𝕆`: each term's output leg replaced by its input leg.
    pub fn jump_closure(&self) -> Self {
        let mut out = Self::zero();
        for t in self.terms.values() {
            out.add_rule(t.coeff.clone(), &t.rule.jump_closure());
        }
        out
    }

    /// One `coeff · [O←K→I]` line per term, in certificate order; `0` when empty.
    pub fn pretty(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .values()
            .map(|t| format!("{} · {}", fmt_q(&t.coeff), t.rule.describe()))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn to_json(&self) -> Vec<TermJson> {
        self.terms
            .values()
            .map(|t| TermJson { coeff: fmt_q(&t.coeff), rule: RuleJson::encode(&t.rule, "") })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: String,
    pub rule: RuleJson,
}

impl TermJson {
    pub fn coeff_q(&self) -> Result<Q> {
        parse_q(&self.coeff).ok_or_else(|| Error::Parse(format!("bad coefficient {:?}", self.coeff)))
    }
}

/// Forbidden connected patterns; a rule whose input contains one acts as zero
/// on the states of interest.
#[derive(Clone, Debug, Default)]
pub struct ConstraintSet {
    pub forbidden: Vec<Graph>,
}

/// One term removed by [`reduce_logged`].
#[derive(Clone, Debug)]
pub struct Drop {
    pub coeff: Q,
    pub rule: String,
    pub pattern: usize,
}

impl ConstraintSet {
    pub fn new(forbidden: Vec<Graph>) -> Result<Self> {
        for (i, p) in forbidden.iter().enumerate() {
            if !p.is_connected() {
                return Err(Error::InvalidGraph(format!("forbidden pattern {i} must be connected and non-empty")));
            }
        }
        Ok(ConstraintSet { forbidden })
    }

    pub fn is_empty(&self) -> bool {
        self.forbidden.is_empty()
    }

    /// Index of the first forbidden pattern embedding into `g`.
    pub fn violated_by(&self, g: &Graph) -> Option<usize> {
        let idx = HostIndex::new(g);
        self.forbidden.iter().position(|p| {
            let mut found = false;
            for_each_mono(p, &idx, &mut |_| {
                found = true;
                false
            });
            found
        })
    }
}

pub fn reduce(a: &RuleAlgebraElement, s: &ConstraintSet) -> RuleAlgebraElement {
    reduce_logged(a, s).0
}

/// Drops every term whose input embeds a forbidden pattern, recording each drop.
pub fn reduce_logged(a: &RuleAlgebraElement, s: &ConstraintSet) -> (RuleAlgebraElement, Vec<Drop>) {
    if s.is_empty() {
        return (a.clone(), vec![]);
    }
    let mut out = RuleAlgebraElement::zero();
    let mut log = vec![];
    for (cf, t) in &a.terms {
        match s.violated_by(&t.rule.input) {
            Some(p) => log.push(Drop { coeff: t.coeff.clone(), rule: t.rule.describe(), pattern: p }),
            None => {
                out.terms.insert(cf.clone(), t.clone());
            }
        }
    }
    (out, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Signature;
    use crate::rational::q;

    #[test]
    fn hw_commutator() {
        let s = Signature::build(&["x"], &[]);
        let x = RuleAlgebraElement::basis(&LinearRule::discrete(&s, 0, 0, 1));
        let xd = RuleAlgebraElement::basis(&LinearRule::discrete(&s, 0, 1, 0));
        let c = x.commutator(&xd).unwrap();
        assert_eq!(c, RuleAlgebraElement::basis(&LinearRule::trivial(&s)));
        assert_eq!(c.pretty(), "1 · [∅←∅→∅]");
    }

    #[test]
    fn unit_law() {
        let s = Signature::build(&["x"], &[]);
        let r = RuleAlgebraElement::basis(&LinearRule::discrete(&s, 0, 2, 1));
        let e = RuleAlgebraElement::basis(&LinearRule::trivial(&s));
        assert_eq!(r.product(&e).unwrap(), r);
        assert_eq!(e.product(&r).unwrap(), r);
        assert_eq!(r.superposition(&e).unwrap(), r);
    }

    #[test]
    fn reduce_drops_forbidden() {
        let s = Signature::build(&["x"], &[("u", false)]);
        let p = Graph::from_parts(&s, &["x", "x"], &[("u", 0, 1)]);
        let cs = ConstraintSet::new(vec![p.clone()]).unwrap();
        let a = RuleAlgebraElement::basis(&LinearRule::diagonal(&p, &[0, 1], &[0]).unwrap())
            .add(&RuleAlgebraElement::basis(&LinearRule::discrete(&s, 0, 0, 1)).scale(&q(3)));
        let (r, log) = reduce_logged(&a, &cs);
        assert_eq!(r.len(), 1);
        assert_eq!(log.len(), 1);
        assert_eq!(reduce(&r, &cs), r);
    }
}
