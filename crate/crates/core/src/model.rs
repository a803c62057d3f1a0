//! Self-describing JSON model files: signature, parameters, rules with rates,
//! observables, identities, forbidden patterns and an initial state.

use crate::algebra::{ConstraintSet, RuleAlgebraElement};
use crate::dpo::{LinearRule, RuleJson};
use crate::graph::{EdgeSort, Graph, GraphJson, Signature};
use crate::rational::{parse_q, q, Q};
use crate::state::{evaluate_observable, Hamiltonian, JumpTerm, Observable, Rate};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::Arc;

pub const SCHEMA: &str = "rasir-model/1";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureJson {
    pub vertex_colors: Vec<String>,
    #[serde(default)]
    pub edge_sorts: Vec<EdgeSort>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SignedRuleJson {
    pub coeff: String,
    #[serde(flatten)]
    pub rule: RuleJson,
}

/// A rule, or a signed combination of rules sharing one rate.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRuleJson {
    pub name: String,
    #[serde(default)]
    pub rate: Option<String>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub output: Option<GraphJson>,
    #[serde(default)]
    pub context: Option<GraphJson>,
    #[serde(default)]
    pub input: Option<GraphJson>,
    #[serde(default)]
    pub o_map: Option<BTreeMap<String, String>>,
    #[serde(default)]
    pub i_map: Option<BTreeMap<String, String>>,
    #[serde(default)]
    pub terms: Option<Vec<SignedRuleJson>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableTermJson {
    pub coeff: String,
    pub pattern: GraphJson,
    #[serde(default)]
    pub core_vertices: Vec<String>,
    #[serde(default)]
    pub core_edges: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableJson {
    pub name: String,
    /// Formal variable of the EMGF, defaults to `λ_<name>`.
    #[serde(default)]
    pub variable: Option<String>,
    /// Species name in a synthesized reaction network, defaults to the name.
    #[serde(default)]
    pub species: Option<String>,
    #[serde(default)]
    pub description: String,
    pub terms: Vec<ObservableTermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialJson {
    #[serde(default)]
    pub graph: Option<GraphJson>,
    #[serde(default)]
    pub counts: Option<BTreeMap<String, u64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    #[serde(rename = "$schema")]
    pub schema: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub signature: SignatureJson,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
    #[serde(default)]
    pub rules: Vec<ModelRuleJson>,
    #[serde(default)]
    pub observables: Vec<ObservableJson>,
    /// Observables that vanish on every reachable state.
    #[serde(default)]
    pub observable_identities: Vec<ObservableJson>,
    #[serde(default)]
    pub forbidden_patterns: Vec<GraphJson>,
    #[serde(default)]
    pub initial_state: Option<InitialJson>,
}

#[derive(Clone, Debug)]
pub struct ModelRule {
    pub name: String,
    pub rate: Rate,
    pub terms: Vec<(Q, LinearRule)>,
}

impl ModelRule {
    pub fn element(&self) -> RuleAlgebraElement {
        RuleAlgebraElement::from_terms(self.terms.iter().map(|(c, r)| (c.clone(), r)))
    }
}

#[derive(Clone, Debug)]
pub struct ModelObservable {
    pub obs: Observable,
    pub variable: String,
    pub species: String,
}

#[derive(Clone, Debug)]
pub enum InitialState {
    Graph(Graph),
    Counts(BTreeMap<String, u64>),
}

#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub sig: Arc<Signature>,
    pub params: BTreeMap<String, Q>,
    pub rules: Vec<ModelRule>,
    pub observables: Vec<ModelObservable>,
    pub identities: Vec<Observable>,
    pub constraint: ConstraintSet,
    pub initial: Option<InitialState>,
}

/// Bundled case-study models by name.
pub const BUNDLED: [(&str, &str); 5] = [
    ("hw", include_str!("../models/hw.json")),
    ("birth-death", include_str!("../models/birth-death.json")),
    ("voter", include_str!("../models/voter.json")),
    ("voter-flip", include_str!("../models/voter-flip.json")),
    ("tmt", include_str!("../models/tmt.json")),
];

fn identity_map(k: &GraphJson) -> BTreeMap<String, String> {
    k.vertices.iter().map(|v| v.id.clone()).chain(k.edges.iter().map(|e| e.id.clone())).map(|x| (x.clone(), x)).collect()
}

fn decode_rule(r: &RuleJson, o_map: Option<&BTreeMap<String, String>>, i_map: Option<&BTreeMap<String, String>>, sig: &Arc<Signature>, ctx: &str) -> Result<LinearRule> {
    // absent maps send every context id to the same id
    let mut r = r.clone();
    r.o_map = o_map.cloned().unwrap_or_else(|| identity_map(&r.context));
    r.i_map = i_map.cloned().unwrap_or_else(|| identity_map(&r.context));
    r.decode(sig, ctx)
}

fn decode_observable(o: &ObservableJson, sig: &Arc<Signature>, ctx: &str, errs: &mut Vec<String>) -> Option<Observable> {
    let mut terms = vec![];
    for (i, t) in o.terms.iter().enumerate() {
        let ctx = format!("{ctx}.terms[{i}]");
        let Some(c) = parse_q(&t.coeff) else {
            errs.push(format!("{ctx}: bad coefficient {:?}", t.coeff));
            continue;
        };
        match t.pattern.decode(sig, &ctx) {
            Ok((p, ids)) => {
                let mut cv = vec![];
                let mut ce = vec![];
                for v in &t.core_vertices {
                    match ids.vertices.get(v) {
                        Some(&x) => cv.push(x),
                        None => errs.push(format!("{ctx}: unknown core vertex {v:?}")),
                    }
                }
                for e in &t.core_edges {
                    match ids.edges.get(e) {
                        Some(&x) => ce.push(x),
                        None => errs.push(format!("{ctx}: unknown core edge {e:?}")),
                    }
                }
                match LinearRule::diagonal(&p, &cv, &ce) {
                    Ok(r) => terms.push((c, r)),
                    Err(e) => errs.push(format!("{ctx}: {e}")),
                }
            }
            Err(Error::Validation(e)) => errs.extend(e),
            Err(e) => errs.push(e.to_string()),
        }
    }
    (terms.len() == o.terms.len()).then(|| Observable::new(&o.name, terms))
}

impl Model {
    pub fn from_json_str(text: &str) -> Result<Model> {
        let j: ModelJson = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
        Model::from_json(&j)
    }

    pub fn load(path: &Path) -> Result<Model> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Model::from_json_str(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// A bundled model by name, or a model file path.
    pub fn open(name_or_path: &str) -> Result<Model> {
        match BUNDLED.iter().find(|(n, _)| *n == name_or_path) {
            Some((_, text)) => Model::from_json_str(text),
            None => Model::load(Path::new(name_or_path)),
        }
    }

    pub fn from_json(j: &ModelJson) -> Result<Model> {
        let mut errs = vec![];
        if j.schema != SCHEMA {
            errs.push(format!("$schema must be {SCHEMA:?}, found {:?}", j.schema));
        }
        let sig = Signature::new(j.signature.vertex_colors.clone(), j.signature.edge_sorts.clone())?;
        let mut params = BTreeMap::new();
        for (k, v) in &j.parameters {
            match parse_q(v) {
                Some(x) if x > q(0) => {
                    params.insert(k.clone(), x);
                }
                _ => errs.push(format!("parameter {k}: value {v:?} must be a positive rational")),
            }
        }
        let mut rules = vec![];
        let mut seen = HashSet::new();
        for (i, r) in j.rules.iter().enumerate() {
            let ctx = format!("rules[{i}] ({})", r.name);
            if !seen.insert(r.name.clone()) {
                errs.push(format!("{ctx}: duplicate rule name"));
            }
            let rate = match Rate::parse(r.rate.as_deref().unwrap_or("1"), &params) {
                Ok(x) if x.value > q(0) => Some(x),
                Ok(_) => {
                    errs.push(format!("{ctx}: rate must be positive"));
                    None
                }
                Err(Error::Validation(e)) => {
                    errs.extend(e.into_iter().map(|m| format!("{ctx}: {m}")));
                    None
                }
                Err(e) => {
                    errs.push(format!("{ctx}: {e}"));
                    None
                }
            };
            let mut terms = vec![];
            let mut ok = true;
            let mut push = |res: Result<LinearRule>, c: Q, errs: &mut Vec<String>| match res {
                Ok(x) => terms.push((c, x)),
                Err(Error::Validation(e)) => {
                    errs.extend(e);
                    ok = false;
                }
                Err(e) => {
                    errs.push(format!("{ctx}: {e}"));
                    ok = false;
                }
            };
            match (&r.terms, &r.input) {
                (Some(ts), None) => {
                    for (t, s) in ts.iter().enumerate() {
                        let c = parse_q(&s.coeff).unwrap_or_else(|| {
                            errs.push(format!("{ctx}.terms[{t}]: bad coefficient {:?}", s.coeff));
                            q(0)
                        });
                        let om = (!s.rule.o_map.is_empty()).then_some(&s.rule.o_map);
                        let im = (!s.rule.i_map.is_empty()).then_some(&s.rule.i_map);
                        push(decode_rule(&s.rule, om, im, &sig, &format!("{ctx}.terms[{t}]")), c, &mut errs);
                    }
                }
                (None, _) => {
                    let rj = RuleJson {
                        name: r.name.clone(),
                        output: r.output.clone().unwrap_or_default(),
                        context: r.context.clone().unwrap_or_default(),
                        input: r.input.clone().unwrap_or_default(),
                        ..Default::default()
                    };
                    push(decode_rule(&rj, r.o_map.as_ref(), r.i_map.as_ref(), &sig, &ctx), q(1), &mut errs);
                }
                (Some(_), Some(_)) => errs.push(format!("{ctx}: give either terms or output/context/input, not both")),
            }
            if let (Some(rate), true) = (rate, ok) {
                rules.push(ModelRule { name: r.name.clone(), rate, terms });
            }
        }
        let mut observables = vec![];
        let mut seen = HashSet::new();
        for (i, o) in j.observables.iter().enumerate() {
            let ctx = format!("observables[{i}] ({})", o.name);
            if !seen.insert(o.name.clone()) {
                errs.push(format!("{ctx}: duplicate observable name"));
            }
            if let Some(obs) = decode_observable(o, &sig, &ctx, &mut errs) {
                observables.push(ModelObservable {
                    obs,
                    variable: o.variable.clone().unwrap_or_else(|| format!("λ_{}", o.name)),
                    species: o.species.clone().unwrap_or_else(|| o.name.clone()),
                });
            }
        }
        let mut identities = vec![];
        for (i, o) in j.observable_identities.iter().enumerate() {
            if let Some(x) = decode_observable(o, &sig, &format!("observable_identities[{i}] ({})", o.name), &mut errs) {
                identities.push(x);
            }
        }
        let mut forbidden = vec![];
        for (i, g) in j.forbidden_patterns.iter().enumerate() {
            match g.decode(&sig, &format!("forbidden_patterns[{i}]")) {
                Ok((g, _)) if g.is_connected() => forbidden.push(g),
                Ok(_) => errs.push(format!("forbidden_patterns[{i}]: must be connected and non-empty")),
                Err(Error::Validation(e)) => errs.extend(e),
                Err(e) => errs.push(e.to_string()),
            }
        }
        let initial = match &j.initial_state {
            None => None,
            Some(InitialJson { graph: Some(g), counts: None }) => match g.decode(&sig, "initial_state.graph") {
                Ok((g, _)) => Some(InitialState::Graph(g)),
                Err(Error::Validation(e)) => {
                    errs.extend(e);
                    None
                }
                Err(e) => {
                    errs.push(e.to_string());
                    None
                }
            },
            Some(InitialJson { graph: None, counts: Some(c) }) => {
                for k in c.keys() {
                    if !observables.iter().any(|o| &o.species == k) {
                        errs.push(format!("initial_state.counts: unknown species {k:?}"));
                    }
                }
                Some(InitialState::Counts(c.clone()))
            }
            Some(_) => {
                errs.push("initial_state: give exactly one of graph or counts".into());
                None
            }
        };
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        Ok(Model {
            name: j.name.clone(),
            sig,
            params,
            rules,
            observables,
            identities,
            constraint: ConstraintSet::new(forbidden)?,
            initial,
        })
    }

    pub fn rule(&self, name: &str) -> Result<&ModelRule> {
        self.rules
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::Validation(vec![format!("unknown rule {name:?}")]))
    }

    pub fn hamiltonian(&self) -> Result<Hamiltonian> {
        let jumps = self
            .rules
            .iter()
            .map(|r| JumpTerm { name: r.name.clone(), rate: r.rate.clone(), element: r.element() })
            .collect();
        Hamiltonian::new(jumps, self.constraint.clone())
    }

    /// Observable indices by name; `None` selects all of them.
    pub fn select(&self, names: Option<&[String]>) -> Result<Vec<usize>> {
        match names {
            None => Ok((0..self.observables.len()).collect()),
            Some(ns) => {
                let mut out = vec![];
                let mut errs = vec![];
                for n in ns {
                    match self.observables.iter().position(|o| &o.obs.name == n) {
                        Some(i) => out.push(i),
                        None => errs.push(format!("unknown observable {n:?}")),
                    }
                }
                if errs.is_empty() {
                    Ok(out)
                } else {
                    Err(Error::Validation(errs))
                }
            }
        }
    }

    pub fn initial_graph(&self) -> Option<&Graph> {
        match &self.initial {
            Some(InitialState::Graph(g)) => Some(g),
            _ => None,
        }
    }

    /// Observable values in the initial state (evaluated on the initial graph,
    /// or read off the species counts).
    pub fn initial_values(&self, idx: &[usize]) -> Result<Vec<Q>> {
        match &self.initial {
            Some(InitialState::Graph(g)) => Ok(idx.iter().map(|&i| evaluate_observable(&self.observables[i].obs, g)).collect()),
            Some(InitialState::Counts(c)) => idx
                .iter()
                .map(|&i| {
                    let s = &self.observables[i].species;
                    c.get(s)
                        .map(|&n| Q::from_integer(n.into()))
                        .ok_or_else(|| Error::Validation(vec![format!("initial_state.counts lacks {s:?}")]))
                })
                .collect(),
            None => Err(Error::Validation(vec!["model has no initial_state".into()])),
        }
    }
}
