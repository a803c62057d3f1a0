//! Adjoint action of observables on jump terms, polynomial jump-closure
//! reports, the EMGF evolution operator and moment equations.

use crate::algebra::{reduce, RuleAlgebraElement};
use crate::dpo::{canonicalize_graph, LinearRule};
use crate::graph::CanonicalForm;
use crate::poly::{solve_linear, Poly};
use crate::rational::{binom, fmt_coeff_prefix, fmt_q, to_f64, Q};
use crate::state::{jump_closure, Decomposer, Expresser, Hamiltonian, Observable, Rate};
use crate::{Error, Result};
use num::{BigInt, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// `ℓ(λ) = Σ η_i λ_i`, one coefficient per declared observable.
pub type LinearForm = Vec<Q>;

#[derive(Clone, Debug)]
pub enum JumpAnalysis {
    /// `h_j` splits into joint eigenvectors of every `ad_{O_i}`.
    Eigen { components: Vec<(LinearForm, RuleAlgebraElement)> },
    /// No finite eigen-splitting within the depth limit.
    NonEigen { observable: usize, generated: Vec<RuleAlgebraElement>, offending: Vec<LinearRule> },
}

#[derive(Clone, Debug)]
pub struct AdjointAnalysis {
    pub jumps: Vec<JumpAnalysis>,
}

fn ad(o: &RuleAlgebraElement, x: &RuleAlgebraElement, h: &Hamiltonian) -> Result<RuleAlgebraElement> {
    Ok(reduce(&o.commutator(x)?, &h.constraint))
}

/// Coordinates of `w` in the span of `vs`, if it lies there.
fn in_span(vs: &[RuleAlgebraElement], w: &RuleAlgebraElement) -> Option<Vec<Q>> {
    let mut certs: BTreeSet<&CanonicalForm> = BTreeSet::new();
    for v in vs.iter().chain([w]) {
        certs.extend(v.terms().map(|(c, _)| c));
    }
    let a: Vec<Vec<Q>> = certs.iter().map(|c| vs.iter().map(|v| v.coeff(c)).collect()).collect();
    let b: Vec<Q> = certs.iter().map(|c| w.coeff(c)).collect();
    solve_linear(&a, &b, vs.len())
}

fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.abs().to_u64()?;
    if n > 1 << 40 {
        return None;
    }
    let mut d = vec![];
    let mut i = 1u64;
    while i * i <= n {
        if n % i == 0 {
            d.push(BigInt::from(i));
            if i * i != n {
                d.push(BigInt::from(n / i));
            }
        }
        i += 1;
    }
    Some(d)
}

fn eval_poly(c: &[Q], x: &Q) -> Q {
    c.iter().rev().fold(Q::zero(), |acc, a| acc * x + a)
}

/// Distinct rational roots of `Σ c_m x^m` when it splits into them, else `None`.
fn distinct_rational_roots(c: &[Q]) -> Option<Vec<Q>> {
    let mut c: Vec<Q> = c.to_vec();
    while c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    let deg = c.len().checked_sub(1)?;
    let mut roots = vec![];
    // strip the zero roots
    while c.len() > 1 && c[0].is_zero() {
        roots.push(Q::zero());
        c.remove(0);
    }
    if c.len() > 1 {
        let lcm = c.iter().fold(BigInt::one(), |l, x| num::integer::lcm(l, x.denom().clone()));
        let ints: Vec<BigInt> = c.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
        let ps = divisors(&ints[0])?;
        let qs = divisors(ints.last().unwrap())?;
        let mut cand: Vec<Q> = vec![];
        for p in &ps {
            for q in &qs {
                cand.push(Q::new(p.clone(), q.clone()));
                cand.push(-Q::new(p.clone(), q.clone()));
            }
        }
        cand.sort();
        cand.dedup();
        for r in cand {
            if eval_poly(&c, &r).is_zero() {
                roots.push(r);
            }
        }
    }
    roots.sort();
    roots.dedup();
    (roots.len() == deg).then_some(roots)
}

/// Coefficients of `Π_{s≠r} (x − s)/(r − s)`.
fn lagrange(roots: &[Q], r: &Q) -> Vec<Q> {
    let mut p = vec![Q::one()];
    for s in roots.iter().filter(|s| *s != r) {
        let d = r - s;
        let mut n = vec![Q::zero(); p.len() + 1];
        for (m, a) in p.iter().enumerate() {
            n[m + 1] += a / &d;
            n[m] -= a * s / &d;
        }
        p = n;
    }
    p
}

enum Split {
    Parts(Vec<(Q, RuleAlgebraElement)>),
    Fail(Vec<RuleAlgebraElement>, Vec<LinearRule>),
}

fn new_terms(base: &RuleAlgebraElement, x: &RuleAlgebraElement) -> Vec<LinearRule> {
    x.terms().filter(|(c, _)| base.coeff(c).is_zero()).map(|(_, t)| t.rule.clone()).collect()
}

/// Eigen-splitting of `c` under `ad_o` via its Krylov sequence.
fn split(o: &RuleAlgebraElement, c: &RuleAlgebraElement, h: &Hamiltonian, depth: usize) -> Result<Split> {
    let mut vs = vec![c.clone()];
    loop {
        let w = ad(o, vs.last().unwrap(), h)?;
        if let Some(a) = in_span(&vs, &w) {
            // minimal polynomial x^d − Σ a_m x^m
            let mut coeffs: Vec<Q> = a.iter().map(|x| -x).collect();
            coeffs.push(Q::one());
            let Some(roots) = distinct_rational_roots(&coeffs) else {
                let off = if vs.len() > 1 { new_terms(c, &vs[1]) } else { vec![] };
                return Ok(Split::Fail(vs, off));
            };
            let mut parts = vec![];
            for r in &roots {
                let q = lagrange(&roots, r);
                let mut comp = RuleAlgebraElement::zero();
                for (m, qm) in q.iter().enumerate() {
                    comp.add_assign_scaled(&vs[m], qm);
                }
                if !comp.is_zero() {
                    parts.push((r.clone(), comp));
                }
            }
            return Ok(Split::Parts(parts));
        }
        if vs.len() > depth {
            let off = new_terms(c, &vs[1]);
            vs.push(w);
            return Ok(Split::Fail(vs, off));
        }
        vs.push(w);
    }
}

/// Joint eigen-splitting of every jump term under the observables' adjoint
/// actions, after reduction by the Hamiltonian's constraint set.
pub fn analyze_adjoint(h: &Hamiltonian, obs: &[Observable], depth_limit: usize) -> Result<AdjointAnalysis> {
    let oe: Vec<RuleAlgebraElement> = obs.iter().map(|o| o.element()).collect();
    let mut jumps = vec![];
    'jump: for j in &h.jumps {
        let start = reduce(&j.element, &h.constraint);
        let mut comps: Vec<(LinearForm, RuleAlgebraElement)> = vec![(vec![Q::zero(); obs.len()], start)];
        for (i, o) in oe.iter().enumerate() {
            let mut next = vec![];
            for (l, c) in comps {
                match split(o, &c, h, depth_limit)? {
                    Split::Parts(ps) => {
                        for (eta, p) in ps {
                            let mut l2 = l.clone();
                            l2[i] = eta;
                            next.push((l2, p));
                        }
                    }
                    Split::Fail(generated, offending) => {
                        jumps.push(JumpAnalysis::NonEigen { observable: i, generated, offending });
                        continue 'jump;
                    }
                }
            }
            comps = next;
        }
        // exact certificate: every component is a joint eigenvector
        for (l, c) in &comps {
            for (i, o) in oe.iter().enumerate() {
                let w = ad(o, c, h)?;
                let diff = w.sub(&c.scale(&l[i]));
                if !diff.is_zero() {
                    jumps.push(JumpAnalysis::NonEigen { observable: i, offending: new_terms(c, &w), generated: vec![c.clone(), w] });
                    continue 'jump;
                }
            }
        }
        jumps.push(JumpAnalysis::Eigen { components: comps });
    }
    Ok(AdjointAnalysis { jumps })
}

#[derive(Clone, Debug)]
pub struct ComponentReport {
    pub eta: LinearForm,
    pub element: RuleAlgebraElement,
    /// `𝕆(component)` over the connected basis.
    pub basis_poly: Poly,
    /// The same over the declared observables, when expressible.
    pub poly: Option<Poly>,
}

#[derive(Clone, Debug)]
pub struct JumpReport {
    pub name: String,
    pub rate: Rate,
    pub eigen: bool,
    pub components: Vec<ComponentReport>,
}

/// Outcome of the polynomial jump-closure check.
#[derive(Clone, Debug)]
pub struct ClosureReport {
    pub closed: bool,
    pub observables: Vec<String>,
    pub jumps: Vec<JumpReport>,
    pub analysis: AdjointAnalysis,
    /// Human-readable reasons for failure, one per offending observable or term.
    pub offenders: Vec<String>,
    /// Connected basis used by the decompositions.
    pub basis: Vec<LinearRule>,
}

/// Checks eigen-splitting of every jump term and that every `𝕆(component)`
/// is a polynomial in the declared observables (modulo `identities`).
pub fn check_polynomial_jump_closure(
    h: &Hamiltonian,
    obs: &[Observable],
    identities: &[Observable],
    depth_limit: usize,
) -> Result<ClosureReport> {
    let analysis = analyze_adjoint(h, obs, depth_limit)?;
    let cs = if h.constraint.is_empty() { None } else { Some(&h.constraint) };
    let mut dec = Decomposer::new(cs);
    let linear = |o: &Observable, dec: &mut Decomposer| -> Result<BTreeMap<usize, Q>> {
        dec.decompose(o)?
            .as_linear()
            .ok_or_else(|| Error::Validation(vec![format!("observable {} is not linear in connected observables", o.name)]))
    };
    let declared: Vec<BTreeMap<usize, Q>> = obs.iter().map(|o| linear(o, &mut dec)).collect::<Result<_>>()?;
    let ids: Vec<BTreeMap<usize, Q>> = identities.iter().map(|o| linear(o, &mut dec)).collect::<Result<_>>()?;
    let ex = Expresser::new(declared, ids);
    let mut offenders = vec![];
    let mut jumps = vec![];
    for (j, a) in h.jumps.iter().zip(&analysis.jumps) {
        match a {
            JumpAnalysis::NonEigen { observable, offending, .. } => {
                offenders.push(format!("{}: not an eigen-element under ad of {}", j.name, obs[*observable].name));
                for r in offending {
                    offenders.push(format!(
                        "{}: growing motif {} produced by {}",
                        j.name,
                        canonicalize_graph(&r.output).1.describe(),
                        r.describe()
                    ));
                }
                jumps.push(JumpReport { name: j.name.clone(), rate: j.rate.clone(), eigen: false, components: vec![] });
            }
            JumpAnalysis::Eigen { components } => {
                let mut comps = vec![];
                for (eta, el) in components {
                    let bp = dec.decompose(&jump_closure(el))?;
                    let poly = match ex.express(&bp) {
                        Ok(p) => Some(p),
                        Err(bad) => {
                            for b in bad {
                                offenders.push(format!(
                                    "{}: connected observable {} is not among the declared ones",
                                    j.name,
                                    dec.basis[b].input.describe()
                                ));
                            }
                            None
                        }
                    };
                    comps.push(ComponentReport { eta: eta.clone(), element: el.clone(), basis_poly: bp, poly });
                }
                jumps.push(JumpReport { name: j.name.clone(), rate: j.rate.clone(), eigen: true, components: comps });
            }
        }
    }
    Ok(ClosureReport {
        closed: offenders.is_empty(),
        observables: obs.iter().map(|o| o.name.clone()).collect(),
        jumps,
        analysis,
        offenders,
        basis: dec.basis,
    })
}

impl ClosureReport {
    /// Indices of observables with `η = 0` in every component of every jump.
    pub fn conserved(&self) -> Vec<usize> {
        (0..self.observables.len())
            .filter(|&i| self.jumps.iter().all(|j| j.components.iter().all(|c| c.eta[i].is_zero())))
            .collect()
    }

    pub fn pretty(&self) -> String {
        let mut out = vec![format!("closed: {}", self.closed)];
        let name = |i: usize| self.observables[i].clone();
        for j in &self.jumps {
            if !j.eigen {
                out.push(format!("{}: no eigen-splitting", j.name));
                continue;
            }
            for c in &j.components {
                let eta: Vec<String> = c
                    .eta
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(i, x)| format!("{}:{}", name(i), fmt_q(x)))
                    .collect();
                let p = c.poly.as_ref().map(|p| p.pretty(&name)).unwrap_or_else(|| "(not expressible)".into());
                out.push(format!("{}: η = {{{}}}  𝕆 = {}", j.name, eta.join(", "), p));
            }
        }
        for o in &self.offenders {
            out.push(format!("offender: {o}"));
        }
        out.join("\n")
    }
}

/// Polynomial in rate parameters: sorted parameter names to coefficient.
pub type SymCoeff = BTreeMap<Vec<String>, Q>;

fn sym_add(a: &mut SymCoeff, m: &[String], c: &Q) {
    let e = a.entry(m.to_vec()).or_insert_with(Q::zero);
    *e += c;
    if e.is_zero() {
        a.remove(m);
    }
}

pub fn sym_value(c: &SymCoeff, params: &BTreeMap<String, Q>) -> Result<Q> {
    let mut s = Q::zero();
    for (m, x) in c {
        let mut t = x.clone();
        for p in m {
            t *= params.get(p).ok_or_else(|| Error::Validation(vec![format!("unknown parameter {p}")]))?;
        }
        s += t;
    }
    Ok(s)
}

pub fn fmt_sym(c: &SymCoeff) -> String {
    let mono = |m: &Vec<String>, x: &Q| -> String {
        if m.is_empty() {
            fmt_q(x)
        } else {
            format!("{}{}", fmt_coeff_prefix(x), m.join("·"))
        }
    };
    let parts: Vec<String> = c.iter().map(|(m, x)| mono(m, x)).collect();
    if parts.len() == 1 {
        parts[0].clone()
    } else {
        format!("({})", parts.join(" + ").replace("+ −", "− "))
    }
}

/// `coeff · (e^{μ·λ} − 1) · ∂^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct DTerm {
    pub coeff: SymCoeff,
    pub mu: Vec<Q>,
    pub k: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct DifferentialOperator {
    /// Formal variable names, one per observable kept in the operator.
    pub vars: Vec<String>,
    pub terms: Vec<DTerm>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DTermJson {
    pub coeff: String,
    pub mu: Vec<String>,
    pub k: Vec<u32>,
}

/// Which observables to replace by constants inside the operator.
#[derive(Clone, Debug, Default)]
pub struct Freeze {
    pub indices: Vec<usize>,
    pub values: Vec<Q>,
}

/// Per-component data after freezing: `(rate, η, polynomial)` over the kept
/// observables.
pub fn frozen_components(report: &ClosureReport, freeze: &Freeze) -> Result<(Vec<usize>, Vec<(usize, LinearForm, Poly)>)> {
    if !report.closed {
        return Err(Error::NotClosed(report.offenders.join("; ")));
    }
    let n = report.observables.len();
    for &i in &freeze.indices {
        if report.jumps.iter().any(|j| j.components.iter().any(|c| !c.eta[i].is_zero())) {
            return Err(Error::Validation(vec![format!("observable {} is not conserved", report.observables[i])]));
        }
    }
    let kept: Vec<usize> = (0..n).filter(|i| !freeze.indices.contains(i)).collect();
    let mut subs = BTreeMap::new();
    for (i, v) in freeze.indices.iter().zip(&freeze.values) {
        subs.insert(*i, Poly::constant(v.clone()));
    }
    for (new, &old) in kept.iter().enumerate() {
        subs.insert(old, Poly::var(new));
    }
    let mut out = vec![];
    for (j, jr) in report.jumps.iter().enumerate() {
        for c in &jr.components {
            let p = c.poly.as_ref().expect("closed report").substitute(&subs);
            let eta: LinearForm = kept.iter().map(|&i| c.eta[i].clone()).collect();
            out.push((j, eta, p));
        }
    }
    Ok((kept, out))
}

/// `D = Σ_j κ_j Σ_r (e^{ℓ_jr·λ} − 1) P_jr(∂λ)`, collected by `(μ, k)`.
pub fn derive_differential_operator(report: &ClosureReport, vars: &[String], freeze: &Freeze) -> Result<DifferentialOperator> {
    let (kept, comps) = frozen_components(report, freeze)?;
    let mut terms: Vec<DTerm> = vec![];
    for (j, eta, p) in comps {
        if eta.iter().all(|x| x.is_zero()) {
            continue;
        }
        let rate = &report.jumps[j].rate;
        for (m, c) in &p.terms {
            let mut k = vec![0u32; kept.len()];
            for &(v, e) in m {
                k[v] = e;
            }
            let coeff = &rate.coeff * c;
            match terms.iter_mut().find(|t| t.mu == eta && t.k == k) {
                Some(t) => sym_add(&mut t.coeff, &rate.params, &coeff),
                None => {
                    let mut s = SymCoeff::new();
                    sym_add(&mut s, &rate.params, &coeff);
                    terms.push(DTerm { coeff: s, mu: eta.clone(), k });
                }
            }
        }
    }
    terms.retain(|t| !t.coeff.is_empty());
    // by derivative order, then first appearance
    let mut idx: Vec<usize> = (0..terms.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ka, kb) = (&terms[a].k, &terms[b].k);
        let (da, db): (u32, u32) = (ka.iter().sum(), kb.iter().sum());
        da.cmp(&db).then(kb.cmp(ka)).then(a.cmp(&b))
    });
    let terms = idx.into_iter().map(|i| terms[i].clone()).collect();
    Ok(DifferentialOperator { vars: kept.iter().map(|&i| vars[i].clone()).collect(), terms })
}

fn fmt_exponent(mu: &[Q], vars: &[String], latex: bool) -> String {
    let mut s = String::new();
    for (q, v) in mu.iter().zip(vars) {
        if q.is_zero() {
            continue;
        }
        let neg = q.is_negative();
        if neg {
            s.push_str(if latex { "-" } else { "−" });
        } else if !s.is_empty() {
            s.push('+');
        }
        let a = q.abs();
        if !a.is_one() {
            s.push_str(&fmt_q(&a));
        }
        s.push_str(v);
    }
    s
}

const GREEK: [(&str, &str); 14] = [
    ("α", "alpha"),
    ("β", "beta"),
    ("γ", "gamma"),
    ("δ", "delta"),
    ("ε", "varepsilon"),
    ("η", "eta"),
    ("κ", "kappa"),
    ("λ", "lambda"),
    ("μ", "mu"),
    ("ν", "nu"),
    ("ρ", "rho"),
    ("σ", "sigma"),
    ("τ", "tau"),
    ("ω", "omega"),
];

/// `κ0` to `\kappa_{0}`, `λww` to `\lambda_{ww}`.
pub fn latex_name(s: &str) -> String {
    let mut chars = s.chars();
    let Some(first) = chars.next() else { return String::new() };
    let rest: String = chars.collect::<String>().trim_start_matches('_').to_string();
    let head = GREEK
        .iter()
        .find(|(g, _)| g.starts_with(first))
        .map(|(_, n)| format!("\\{n}"))
        .unwrap_or_else(|| first.to_string());
    if rest.is_empty() {
        head
    } else {
        format!("{head}_{{{rest}}}")
    }
}

impl DifferentialOperator {
    fn render(&self, latex: bool) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let vars: Vec<String> = if latex { self.vars.iter().map(|v| latex_name(v)).collect() } else { self.vars.clone() };
        let mut out = String::new();
        for (n, t) in self.terms.iter().enumerate() {
            let mut coeff = t.coeff.clone();
            // pull a global sign out of single-monomial coefficients
            let neg = coeff.len() == 1 && coeff.values().next().unwrap().is_negative();
            if neg {
                for v in coeff.values_mut() {
                    *v = -v.clone();
                }
            }
            if n > 0 {
                out.push_str(if neg { if latex { " - " } else { " − " } } else { " + " });
            } else if neg {
                out.push_str(if latex { "-" } else { "−" });
            }
            let mut c = if latex { latex_coeff(&coeff) } else { fmt_sym(&coeff) };
            if c == "1" {
                c.clear();
            }
            out.push_str(&c);
            let e = fmt_exponent(&t.mu, &vars, latex);
            if latex {
                out.push_str(&format!("(e^{{{e}}}-1)"));
            } else if e.chars().count() == 1 {
                out.push_str(&format!("(e^{e}−1)"));
            } else {
                out.push_str(&format!("(e^{{{e}}}−1)"));
            }
            for (v, &k) in vars.iter().zip(&t.k) {
                match (k, latex) {
                    (0, _) => {}
                    (1, false) => out.push_str(&format!("∂{v}")),
                    (k, false) => out.push_str(&format!("(∂{v})^{k}")),
                    (1, true) => out.push_str(&format!("\\partial_{{{v}}}")),
                    (k, true) => out.push_str(&format!("\\partial_{{{v}}}^{{{k}}}")),
                }
            }
        }
        out
    }

    /// Plain text, e.g. `β(e^λ−1) + τ(e^{−λ}−1)∂λ`.
    pub fn text(&self) -> String {
        self.render(false)
    }

    pub fn latex(&self) -> String {
        self.render(true)
    }

    /// Expanded `c · e^{μ·λ} · ∂^k` terms (the `−1` parts become `μ = 0` terms).
    pub fn expanded(&self) -> Vec<(SymCoeff, Vec<Q>, Vec<u32>)> {
        let mut out: Vec<(SymCoeff, Vec<Q>, Vec<u32>)> = vec![];
        let zero = vec![Q::zero(); self.vars.len()];
        for t in &self.terms {
            for (mu, sign) in [(t.mu.clone(), Q::one()), (zero.clone(), -Q::one())] {
                match out.iter_mut().find(|x| x.1 == mu && x.2 == t.k) {
                    Some(x) => {
                        for (m, c) in &t.coeff {
                            sym_add(&mut x.0, m, &(c * &sign));
                        }
                    }
                    None => {
                        let mut s = SymCoeff::new();
                        for (m, c) in &t.coeff {
                            sym_add(&mut s, m, &(c * &sign));
                        }
                        out.push((s, mu, t.k.clone()));
                    }
                }
            }
        }
        out.retain(|x| !x.0.is_empty());
        out
    }

    pub fn to_json(&self) -> Vec<DTermJson> {
        self.expanded()
            .into_iter()
            .map(|(c, mu, k)| DTermJson { coeff: fmt_sym(&c), mu: mu.iter().map(fmt_q).collect(), k })
            .collect()
    }

    /// Numeric `(c, μ, k)` triples of the expanded operator.
    pub fn numeric(&self, params: &BTreeMap<String, Q>) -> Result<Vec<(Q, Vec<Q>, Vec<u32>)>> {
        self.expanded().into_iter().map(|(c, mu, k)| Ok((sym_value(&c, params)?, mu, k))).collect()
    }

    /// `(D f)(λ)` for `f` given through its partial derivatives.
    pub fn apply_at(
        &self,
        params: &BTreeMap<String, Q>,
        lambda: &[f64],
        deriv: &dyn Fn(&[u32]) -> f64,
    ) -> Result<f64> {
        let mut s = 0.0;
        for (c, mu, k) in self.numeric(params)? {
            let e: f64 = mu.iter().zip(lambda).map(|(m, l)| to_f64(m) * l).sum();
            s += to_f64(&c) * e.exp() * deriv(&k);
        }
        Ok(s)
    }
}

fn latex_coeff(c: &SymCoeff) -> String {
    let mono = |m: &Vec<String>, x: &Q| -> String {
        let names: Vec<String> = m.iter().map(|p| latex_name(p)).collect();
        let a = x.abs();
        let num = if a.is_one() && !m.is_empty() {
            String::new()
        } else if a.is_integer() {
            a.numer().to_string()
        } else {
            format!("\\tfrac{{{}}}{{{}}}", a.numer(), a.denom())
        };
        let sign = if x.is_negative() { "-" } else { "" };
        format!("{sign}{num}{}", names.join(" "))
    };
    let parts: Vec<String> = c.iter().map(|(m, x)| mono(m, x)).collect();
    let s = if parts.len() == 1 { parts[0].clone() } else { format!("({})", parts.join(" + ").replace("+ -", "- ")) };
    if s == "1" {
        String::new()
    } else {
        s
    }
}

/// Linear ODEs `d/dt ⟨O^n⟩ = Σ c ⟨O^m⟩` for `1 ≤ |n| ≤ order`.
#[derive(Clone, Debug)]
pub struct MomentOdeSystem {
    pub moments: Vec<Vec<u32>>,
    pub rhs: Vec<BTreeMap<Vec<u32>, Q>>,
    pub closed: bool,
}

fn multi_indices(n: usize, order: u32) -> Vec<Vec<u32>> {
    let mut out = vec![];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, order, &mut vec![0; n], &mut out);
    out.retain(|m| m.iter().sum::<u32>() >= 1);
    out.sort_by(|a, b| a.iter().sum::<u32>().cmp(&b.iter().sum::<u32>()).then(b.cmp(a)));
    out
}

/// Differentiates `∂_t M = D M` at `λ = 0`.
pub fn moment_odes(d: &DifferentialOperator, params: &BTreeMap<String, Q>, order: u32) -> Result<MomentOdeSystem> {
    let num = d.numeric(params)?;
    let moments = multi_indices(d.vars.len(), order);
    let mut rhs = vec![];
    let mut closed = true;
    for n in &moments {
        let mut r: BTreeMap<Vec<u32>, Q> = BTreeMap::new();
        for (c, mu, k) in &num {
            // Σ_{j ≤ n} Π C(n_i, j_i) μ_i^{n_i − j_i} ⟨O^{j + k}⟩
            for j in multi_indices(n.len(), n.iter().sum()).into_iter().chain([vec![0; n.len()]]) {
                if j.iter().zip(n).any(|(a, b)| a > b) {
                    continue;
                }
                let mut f = c.clone();
                for i in 0..n.len() {
                    f *= Q::from_integer(binom(n[i], j[i])) * num::pow(mu[i].clone(), (n[i] - j[i]) as usize);
                }
                if f.is_zero() {
                    continue;
                }
                let m: Vec<u32> = j.iter().zip(k).map(|(a, b)| a + b).collect();
                let e = r.entry(m.clone()).or_insert_with(Q::zero);
                *e += f;
                if e.is_zero() {
                    r.remove(&m);
                }
            }
        }
        if r.keys().any(|m| m.iter().sum::<u32>() > order) {
            closed = false;
        }
        rhs.push(r);
    }
    Ok(MomentOdeSystem { moments, rhs, closed })
}

impl MomentOdeSystem {
    /// Initial moments of a pure state with observable values `v`.
    pub fn initial_from_values(&self, v: &[f64]) -> Vec<f64> {
        self.moments.iter().map(|n| n.iter().zip(v).map(|(&e, x)| x.powi(e as i32)).product()).collect()
    }

    fn deriv(&self, y: &[f64], pos: &BTreeMap<Vec<u32>, usize>) -> Vec<f64> {
        self.rhs
            .iter()
            .map(|r| {
                r.iter()
                    .map(|(m, c)| {
                        let val = if m.iter().all(|&x| x == 0) { 1.0 } else { y[pos[m]] };
                        to_f64(c) * val
                    })
                    .sum()
            })
            .collect()
    }

    /// Fixed-step RK4; returns the moment vector at every grid time.
    pub fn integrate(&self, init: &[f64], grid: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
        if !self.closed {
            return Err(Error::NotClosed("moment hierarchy references higher moments".into()));
        }
        let pos: BTreeMap<Vec<u32>, usize> = self.moments.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut y = init.to_vec();
        let mut t = 0.0;
        let mut out = vec![];
        let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> { y.iter().zip(k).map(|(p, q)| p + a * q).collect() };
        for &target in grid {
            while t < target - 1e-12 {
                let dt = h.min(target - t);
                let k1 = self.deriv(&y, &pos);
                let k2 = self.deriv(&axpy(&y, &k1, dt / 2.0), &pos);
                let k3 = self.deriv(&axpy(&y, &k2, dt / 2.0), &pos);
                let k4 = self.deriv(&axpy(&y, &k3, dt), &pos);
                for i in 0..y.len() {
                    y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                t += dt;
            }
            out.push(y.clone());
        }
        Ok(out)
    }

    pub fn pretty(&self, vars: &[String]) -> String {
        let name = |m: &Vec<u32>| -> String {
            if m.iter().all(|&x| x == 0) {
                return "1".into();
            }
            let parts: Vec<String> = m
                .iter()
                .zip(vars)
                .filter(|(e, _)| **e > 0)
                .map(|(e, v)| if *e == 1 { format!("O[{v}]") } else { format!("O[{v}]^{e}") })
                .collect();
            format!("⟨{}⟩", parts.join(""))
        };
        let mut lines = vec![];
        for (n, r) in self.moments.iter().zip(&self.rhs) {
            let mut p = Poly::zero();
            let keys: Vec<&Vec<u32>> = r.keys().collect();
            for (i, c) in r.values().enumerate() {
                if keys[i].iter().all(|&x| x == 0) {
                    p.add_term(vec![], c.clone());
                } else {
                    p.add_term(vec![(i, 1)], c.clone());
                }
            }
            lines.push(format!("d/dt {} = {}", name(n), p.pretty(&|i| name(keys[i]))));
        }
        lines.push(format!("closed: {}", self.closed));
        lines.join("\n")
    }
}

/// Closed-form EMGF/PGF solutions of the solvable examples.
#[derive(Clone, Debug, PartialEq)]
pub enum ClosedFormOracle {
    /// Probability generating function `P(t; x)` from `N` particles.
    BirthDeathPgf { beta: f64, tau: f64, n0: u32 },
    /// `M(t; λ)` from `N` particles.
    BirthDeathEmgf { beta: f64, tau: f64, n0: u32 },
    /// Edge-count EMGF of the flip-only voter model, `λ = (λww, λwb, λbb)`.
    VoterEdgeEmgf { kappa0: f64, kappa1: f64, nw: u32, nb: u32, nww: u32, nwb: u32, nbb: u32 },
}

impl ClosedFormOracle {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::BirthDeathPgf { beta, tau, .. } | Self::BirthDeathEmgf { beta, tau, .. } => *tau > 0.0 && *beta >= 0.0,
            Self::VoterEdgeEmgf { kappa0, kappa1, nw, nb, .. } => {
                *kappa0 >= 0.0 && *kappa1 >= 0.0 && self.voter_k() > 0.0 && *nw >= 1 && *nb >= 1
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(vec!["invalid oracle parameters".into()]))
        }
    }

    fn voter_k(&self) -> f64 {
        match self {
            Self::VoterEdgeEmgf { kappa0, kappa1, nw, nb, .. } => kappa0 * (*nw as f64 - 1.0) + kappa1 * (*nb as f64 - 1.0),
            _ => f64::NAN,
        }
    }

    /// `(K, κ̄0, κ̄1)` of the voter closed form.
    pub fn voter_constants(&self) -> Option<(f64, f64, f64)> {
        match self {
            Self::VoterEdgeEmgf { kappa0, kappa1, nw, nb, .. } => {
                let k = self.voter_k();
                Some((k, kappa0 * (*nw as f64 - 1.0) / k, kappa1 * (*nb as f64 - 1.0) / k))
            }
            _ => None,
        }
    }

    pub fn eval(&self, t: f64, lambda: &[f64]) -> f64 {
        match self {
            Self::BirthDeathPgf { beta, tau, n0 } => {
                let x = lambda[0];
                let e = (-tau * t).exp();
                (beta / tau * (1.0 - e) * (x - 1.0)).exp() * (1.0 + e * (x - 1.0)).powi(*n0 as i32)
            }
            Self::BirthDeathEmgf { beta, tau, n0 } => {
                let z = lambda[0].exp();
                let e = (-tau * t).exp();
                (beta / tau * (1.0 - e) * (z - 1.0)).exp() * (1.0 + e * (z - 1.0)).powi(*n0 as i32)
            }
            Self::VoterEdgeEmgf { nww, nwb, nbb, .. } => {
                let (k, k0, k1) = self.voter_constants().unwrap();
                let e = (-k * t).exp();
                let (lww, lwb, lbb) = (lambda[0], lambda[1], lambda[2]);
                (lww * *nww as f64 + lbb * *nbb as f64).exp()
                    * (e * lwb.exp() + (1.0 - e) * (k0 * lww.exp() + k1 * lbb.exp())).powi(*nwb as i32)
            }
        }
    }

    pub fn names() -> &'static [&'static str] {
        &["birth-death-pgf", "birth-death-emgf", "voter-edge-emgf"]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};

    #[test]
    fn roots_and_projectors() {
        // (x − 1)(x + 2) = x² + x − 2
        let r = distinct_rational_roots(&[q(-2), q(1), q(1)]).unwrap();
        assert_eq!(r, vec![q(-2), q(1)]);
        assert!(distinct_rational_roots(&[q(1), q(0), q(1)]).is_none());
        assert!(distinct_rational_roots(&[q(0), q(0), q(1)]).is_none());
        let l = lagrange(&r, &q(1));
        assert_eq!(eval_poly(&l, &q(1)), q(1));
        assert_eq!(eval_poly(&l, &q(-2)), q(0));
        assert_eq!(distinct_rational_roots(&[qf(-1, 2), q(1)]).unwrap(), vec![qf(1, 2)]);
    }

    #[test]
    fn birth_death_text_and_odes() {
        let mut c1 = SymCoeff::new();
        c1.insert(vec!["β".into()], q(1));
        let mut c2 = SymCoeff::new();
        c2.insert(vec!["τ".into()], q(1));
        let d = DifferentialOperator {
            vars: vec!["λ".into()],
            terms: vec![DTerm { coeff: c1, mu: vec![q(1)], k: vec![0] }, DTerm { coeff: c2, mu: vec![q(-1)], k: vec![1] }],
        };
        assert_eq!(d.text(), "β(e^λ−1) + τ(e^{−λ}−1)∂λ");
        assert_eq!(d.latex(), "\\beta(e^{\\lambda}-1) + \\tau(e^{-\\lambda}-1)\\partial_{\\lambda}");
        let mut p = BTreeMap::new();
        p.insert("β".to_string(), q(2));
        p.insert("τ".to_string(), q(1));
        let sys = moment_odes(&d, &p, 1).unwrap();
        assert!(sys.closed);
        let mut want = BTreeMap::new();
        want.insert(vec![0], q(2));
        want.insert(vec![1], q(-1));
        assert_eq!(sys.rhs[0], want);
        let sys2 = moment_odes(&d, &p, 2).unwrap();
        assert!(sys2.closed);
    }

    #[test]
    fn oracle_normalization() {
        let o = ClosedFormOracle::BirthDeathEmgf { beta: 2.0, tau: 1.0, n0: 10 };
        assert!((o.eval(0.7, &[0.0]) - 1.0).abs() < 1e-15);
        assert!((o.eval(0.0, &[0.3]) - (3.0f64).exp()).abs() < 1e-9);
    }
}
