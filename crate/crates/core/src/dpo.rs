//! Linear rules, direct derivations and sequential composition.
//!
//! Composition follows the convention `r1 ∗ r2`: `r2` acts first, a match is a
//! partial injection from `I1` into `O2`.

use crate::graph::{canonical_labeling_raw, CanonicalForm, Edge, Graph, GraphJson, Morphism, RawGraph, Signature};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Span `O <-o- K -i-> I` of monomorphisms.
#[derive(Clone, Debug)]
pub struct LinearRule {
    pub output: Graph,
    pub context: Graph,
    pub input: Graph,
    pub o_embed: Morphism,
    pub i_embed: Morphism,
}

impl LinearRule {
    pub fn new(output: Graph, context: Graph, input: Graph, o_embed: Morphism, i_embed: Morphism) -> Result<Self> {
        output.check_signature(&context)?;
        input.check_signature(&context)?;
        if !o_embed.is_mono(&context, &output) {
            return Err(Error::NotMono("K -> O".into()));
        }
        if !i_embed.is_mono(&context, &input) {
            return Err(Error::NotMono("K -> I".into()));
        }
        Ok(LinearRule { output, context, input, o_embed, i_embed })
    }

    /// `∅ <- ∅ -> ∅`.
    pub fn trivial(sig: &Arc<Signature>) -> Self {
        let e = Graph::empty(sig);
        LinearRule { output: e.clone(), context: e.clone(), input: e, o_embed: Morphism::empty(), i_embed: Morphism::empty() }
    }

    /// Discrete rule creating `p` and deleting `q` vertices of one color.
    pub fn discrete(sig: &Arc<Signature>, color: u16, p: usize, q: usize) -> Self {
        let mut o = Graph::empty(sig);
        let mut i = Graph::empty(sig);
        for _ in 0..p {
            o.add_vertex(color);
        }
        for _ in 0..q {
            i.add_vertex(color);
        }
        LinearRule { output: o, context: Graph::empty(sig), input: i, o_embed: Morphism::empty(), i_embed: Morphism::empty() }
    }

    /// `P <- K -> P` with `K` the subgraph on the given vertices and edges.
    pub fn diagonal(pattern: &Graph, core_vertices: &[u32], core_edges: &[u32]) -> Result<Self> {
        for &e in core_edges {
            let ed = pattern.edge(e);
            if !core_vertices.contains(&ed.src) || !core_vertices.contains(&ed.tgt) {
                return Err(Error::InvalidGraph(format!("core edge {e} leaves the core vertices")));
            }
        }
        let (k, emb) = pattern.subgraph(core_vertices, core_edges);
        if !emb.is_injective() {
            return Err(Error::NotMono("core has repeated elements".into()));
        }
        Ok(LinearRule { output: pattern.clone(), context: k, input: pattern.clone(), o_embed: emb.clone(), i_embed: emb })
    }

    pub fn sig(&self) -> &Arc<Signature> {
        self.input.sig()
    }

    pub fn is_trivial(&self) -> bool {
        self.output.is_empty() && self.input.is_empty()
    }

    /// Output leg replaced by a copy of the input leg.
    pub fn jump_closure(&self) -> LinearRule {
        LinearRule {
            output: self.input.clone(),
            context: self.context.clone(),
            input: self.input.clone(),
            o_embed: self.i_embed.clone(),
            i_embed: self.i_embed.clone(),
        }
    }

    /// Core vertices of the input (images of `K`).
    pub fn kept_input_vertices(&self) -> Vec<bool> {
        let mut keep = vec![false; self.input.n()];
        for &v in &self.i_embed.v {
            keep[v as usize] = true;
        }
        keep
    }

    pub fn describe(&self) -> String {
        fn g(x: &Graph) -> String {
            if x.is_empty() {
                "∅".into()
            } else {
                x.describe()
            }
        }
        let mut s = format!("[{}←{}→{}]", g(&self.output), g(&self.context), g(&self.input));
        if self.context.n() > 0 {
            let m = |f: &Morphism| f.v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            s.push_str(&format!(" o=({}) i=({})", m(&self.o_embed), m(&self.i_embed)));
        }
        s
    }
}

/// File encoding of a rule; `o_map`/`i_map` send context ids to output/input ids.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RuleJson {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub output: GraphJson,
    #[serde(default)]
    pub context: GraphJson,
    #[serde(default)]
    pub input: GraphJson,
    #[serde(default)]
    pub o_map: BTreeMap<String, String>,
    #[serde(default)]
    pub i_map: BTreeMap<String, String>,
}

impl RuleJson {
    pub fn decode(&self, sig: &Arc<Signature>, ctx: &str) -> Result<LinearRule> {
        let mut errs = vec![];
        let mut part = |g: &GraphJson, leg: &str| match g.decode(sig, &format!("{ctx}.{leg}")) {
            Ok(x) => Some(x),
            Err(Error::Validation(e)) => {
                errs.extend(e);
                None
            }
            Err(e) => {
                errs.push(e.to_string());
                None
            }
        };
        let o = part(&self.output, "output");
        let k = part(&self.context, "context");
        let i = part(&self.input, "input");
        let (Some((o, oid)), Some((k, kid)), Some((i, iid))) = (o, k, i) else {
            return Err(Error::Validation(errs));
        };
        let mut leg = |map: &BTreeMap<String, String>, tgt: &Graph, tid: &crate::graph::IdMaps, name: &str| {
            let mut m = Morphism { v: vec![u32::MAX; k.n()], e: vec![u32::MAX; k.m()] };
            for (a, b) in map {
                match (kid.vertices.get(a), tid.vertices.get(b), kid.edges.get(a), tid.edges.get(b)) {
                    (Some(&x), Some(&y), _, _) => m.v[x as usize] = y,
                    (_, _, Some(&x), Some(&y)) => m.e[x as usize] = y,
                    _ => errs.push(format!("{ctx}.{name}: cannot map {a:?} to {b:?}")),
                }
            }
            if m.v.contains(&u32::MAX) || m.e.contains(&u32::MAX) {
                errs.push(format!("{ctx}.{name}: every context vertex and edge must be mapped"));
            } else if !m.is_mono(&k, tgt) {
                errs.push(format!("{ctx}.{name}: not an injective structure-preserving map"));
            }
            m
        };
        let om = leg(&self.o_map, &o, &oid, "o_map");
        let im = leg(&self.i_map, &i, &iid, "i_map");
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        LinearRule::new(o, k, i, om, im)
    }

    pub fn encode(r: &LinearRule, name: &str) -> RuleJson {
        let mut o_map = BTreeMap::new();
        let mut i_map = BTreeMap::new();
        for (kv, (&a, &b)) in r.o_embed.v.iter().zip(&r.i_embed.v).enumerate() {
            o_map.insert(format!("v{kv}"), format!("v{a}"));
            i_map.insert(format!("v{kv}"), format!("v{b}"));
        }
        for (ke, (&a, &b)) in r.o_embed.e.iter().zip(&r.i_embed.e).enumerate() {
            o_map.insert(format!("e{ke}"), format!("e{a}"));
            i_map.insert(format!("e{ke}"), format!("e{b}"));
        }
        RuleJson {
            name: name.to_string(),
            output: GraphJson::encode(&r.output),
            context: GraphJson::encode(&r.context),
            input: GraphJson::encode(&r.input),
            o_map,
            i_map,
        }
    }
}

/// Pushout complement of `K -> I -> X`: `(X', K -> X', X' -> X)`, or `None`
/// when an edge outside the match dangles on a deleted vertex.
pub fn pushout_complement(
    k: &Graph,
    k_to_i: &Morphism,
    i_to_x: &Morphism,
    x: &Graph,
) -> Option<(Graph, Morphism, Morphism)> {
    let k_to_x = k_to_i.then(i_to_x);
    let mut in_i_v = vec![false; x.n()];
    let mut in_i_e = vec![false; x.m()];
    let mut in_k_v = vec![false; x.n()];
    let mut in_k_e = vec![false; x.m()];
    for &v in &i_to_x.v {
        in_i_v[v as usize] = true;
    }
    for &e in &i_to_x.e {
        in_i_e[e as usize] = true;
    }
    for &v in &k_to_x.v {
        in_k_v[v as usize] = true;
    }
    for &e in &k_to_x.e {
        in_k_e[e as usize] = true;
    }
    let deleted = |v: u32| in_i_v[v as usize] && !in_k_v[v as usize];
    for (i, e) in x.edges().iter().enumerate() {
        if !in_i_e[i] && (deleted(e.src) || deleted(e.tgt)) {
            return None;
        }
    }
    let vs: Vec<u32> = (0..x.n() as u32).filter(|&v| !deleted(v)).collect();
    let es: Vec<u32> = (0..x.m() as u32).filter(|&e| !in_i_e[e as usize] || in_k_e[e as usize]).collect();
    let (xp, incl) = x.subgraph(&vs, &es);
    let (iv, ie) = incl.inverse(x.n(), x.m());
    let k_to_xp = Morphism {
        v: k_to_x.v.iter().map(|&v| iv[v as usize].unwrap()).collect(),
        e: k_to_x.e.iter().map(|&e| ie[e as usize].unwrap()).collect(),
    };
    debug_assert!(k_to_xp.is_mono(k, &xp));
    Some((xp, k_to_xp, incl))
}

/// Pushout of monos `A <- B -> C`: `(D, A -> D, C -> D)`; `A` keeps its indices.
pub fn pushout(a: &Graph, c: &Graph, b_to_a: &Morphism, b_to_c: &Morphism) -> (Graph, Morphism, Morphism) {
    let mut d = a.clone();
    let (civ, cie) = b_to_c.inverse(c.n(), c.m());
    let mut cv = vec![0u32; c.n()];
    for v in 0..c.n() {
        cv[v] = match civ[v] {
            Some(b) => b_to_a.v[b as usize],
            None => d.add_vertex(c.color(v as u32)),
        };
    }
    let mut ce = vec![0u32; c.m()];
    for (i, e) in c.edges().iter().enumerate() {
        ce[i] = match cie[i] {
            Some(b) => b_to_a.e[b as usize],
            None => d.add_edge(e.sort, cv[e.src as usize], cv[e.tgt as usize]),
        };
    }
    (d, Morphism::identity(a), Morphism { v: cv, e: ce })
}

/// Pullback of monos `A -> D <- C`: the intersection of images, ordered by
/// index in `D`, with its projections.
pub fn pullback(a: &Graph, c: &Graph, a_to_d: &Morphism, c_to_d: &Morphism, d: &Graph) -> (Graph, Morphism, Morphism) {
    let (aiv, aie) = a_to_d.inverse(d.n(), d.m());
    let (civ, cie) = c_to_d.inverse(d.n(), d.m());
    let vs: Vec<u32> = (0..d.n() as u32).filter(|&v| aiv[v as usize].is_some() && civ[v as usize].is_some()).collect();
    let es: Vec<u32> = (0..d.m() as u32).filter(|&e| aie[e as usize].is_some() && cie[e as usize].is_some()).collect();
    let (b, _) = d.subgraph(&vs, &es);
    let to_a = Morphism {
        v: vs.iter().map(|&v| aiv[v as usize].unwrap()).collect(),
        e: es.iter().map(|&e| aie[e as usize].unwrap()).collect(),
    };
    let to_c = Morphism {
        v: vs.iter().map(|&v| civ[v as usize].unwrap()).collect(),
        e: es.iter().map(|&e| cie[e as usize].unwrap()).collect(),
    };
    debug_assert!(to_a.is_mono(&b, a) && to_c.is_mono(&b, c));
    (b, to_a, to_c)
}

/// Result of applying `rule` at the mono `m: I -> host`, or `None` if the
/// match is not admissible.
pub fn apply_rule(rule: &LinearRule, host: &Graph, m: &Morphism) -> Result<Option<Graph>> {
    rule.input.check_signature(host)?;
    if !m.is_mono(&rule.input, host) {
        return Err(Error::NotMono("match I -> X".into()));
    }
    Ok(apply_unchecked(rule, host, m))
}

pub(crate) fn apply_unchecked(rule: &LinearRule, host: &Graph, m: &Morphism) -> Option<Graph> {
    let (kp, k_to_kp, _) = pushout_complement(&rule.context, &rule.i_embed, m, host)?;
    let (res, _, _) = pushout(&kp, &rule.output, &k_to_kp, &rule.o_embed);
    Some(res)
}

/// Overlap `I1 <- M -> O2` realized as a subgraph of `I1` with a mono into `O2`.
#[derive(Clone, Debug)]
pub struct RuleMatch {
    pub overlap: Graph,
    pub into_input1: Morphism,
    pub into_output2: Morphism,
}

/// Partial injections `I1 ⇀ O2` on vertices and edges, in backtracking order.
fn for_each_partial(
    i1: &Graph,
    o2: &Graph,
    f: &mut dyn FnMut(&[Option<u32>], &[Option<u32>]) -> Result<()>,
) -> Result<()> {
    let n = i1.n();
    let mut vmap: Vec<Option<u32>> = vec![None; n];
    let mut used = vec![false; o2.n()];

    fn edges(
        j: usize,
        i1: &Graph,
        o2: &Graph,
        vmap: &[Option<u32>],
        emap: &mut Vec<Option<u32>>,
        eused: &mut Vec<bool>,
        f: &mut dyn FnMut(&[Option<u32>], &[Option<u32>]) -> Result<()>,
    ) -> Result<()> {
        if j == i1.m() {
            return f(vmap, emap);
        }
        emap[j] = None;
        edges(j + 1, i1, o2, vmap, emap, eused, f)?;
        let e = i1.edge(j as u32);
        if let (Some(s), Some(t)) = (vmap[e.src as usize], vmap[e.tgt as usize]) {
            let want = if o2.sig().directed(e.sort) { (s, t) } else { (s.min(t), s.max(t)) };
            for (k, g) in o2.edges().iter().enumerate() {
                if eused[k] || g.sort != e.sort || (g.src, g.tgt) != want {
                    continue;
                }
                eused[k] = true;
                emap[j] = Some(k as u32);
                let r = edges(j + 1, i1, o2, vmap, emap, eused, f);
                eused[k] = false;
                r?;
            }
            emap[j] = None;
        }
        Ok(())
    }

    fn verts(
        i: usize,
        i1: &Graph,
        o2: &Graph,
        vmap: &mut Vec<Option<u32>>,
        used: &mut Vec<bool>,
        f: &mut dyn FnMut(&[Option<u32>], &[Option<u32>]) -> Result<()>,
    ) -> Result<()> {
        if i == vmap.len() {
            let mut emap = vec![None; i1.m()];
            let mut eused = vec![false; o2.m()];
            return edges(0, i1, o2, vmap, &mut emap, &mut eused, f);
        }
        vmap[i] = None;
        verts(i + 1, i1, o2, vmap, used, f)?;
        for x in 0..o2.n() {
            if used[x] || o2.color(x as u32) != i1.color(i as u32) {
                continue;
            }
            used[x] = true;
            vmap[i] = Some(x as u32);
            let r = verts(i + 1, i1, o2, vmap, used, f);
            used[x] = false;
            r?;
        }
        vmap[i] = None;
        Ok(())
    }
    verts(0, i1, o2, &mut vmap, &mut used, f)
}

/// Composite of `r1` after `r2` along a partial injection `I1 ⇀ O2`.
fn compose_partial(r1: &LinearRule, r2: &LinearRule, vmap: &[Option<u32>], emap: &[Option<u32>]) -> Option<LinearRule> {
    // M' = O2 + unmatched part of I1
    let o2 = &r2.output;
    let i1 = &r1.input;
    let mut mp = o2.clone();
    let mut iv = vec![0u32; i1.n()];
    for v in 0..i1.n() {
        iv[v] = match vmap[v] {
            Some(x) => x,
            None => mp.add_vertex(i1.color(v as u32)),
        };
    }
    let mut ie = vec![0u32; i1.m()];
    for (j, e) in i1.edges().iter().enumerate() {
        ie[j] = match emap[j] {
            Some(x) => x,
            None => mp.add_edge(e.sort, iv[e.src as usize], iv[e.tgt as usize]),
        };
    }
    let i1_to_mp = Morphism { v: iv, e: ie };
    let o2_to_mp = Morphism {
        v: (0..o2.n() as u32).collect(),
        e: (0..o2.m() as u32).collect(),
    };
    let (k2p, k2_to_k2p, k2p_to_mp) = pushout_complement(&r2.context, &r2.o_embed, &o2_to_mp, &mp)?;
    let (k1p, k1_to_k1p, k1p_to_mp) = pushout_complement(&r1.context, &r1.i_embed, &i1_to_mp, &mp)?;
    let (o12, _, k1p_to_o12) = pushout(&r1.output, &k1p, &r1.o_embed, &k1_to_k1p);
    let (i12, _, k2p_to_i12) = pushout(&r2.input, &k2p, &r2.i_embed, &k2_to_k2p);
    let (k12, to_k1p, to_k2p) = pullback(&k1p, &k2p, &k1p_to_mp, &k2p_to_mp, &mp);
    Some(LinearRule {
        o_embed: to_k1p.then(&k1p_to_o12),
        i_embed: to_k2p.then(&k2p_to_i12),
        output: o12,
        context: k12,
        input: i12,
    })
}

/// Calls `f` with every composite `r1 ◁μ▷ r2` over all admissible matches.
pub fn for_each_composite(r1: &LinearRule, r2: &LinearRule, f: &mut dyn FnMut(LinearRule) -> Result<()>) -> Result<()> {
    r1.input.check_signature(&r2.output)?;
    for_each_partial(&r1.input, &r2.output, &mut |vm, em| match compose_partial(r1, r2, vm, em) {
        Some(r) => f(r),
        None => Ok(()),
    })
}

/// Only the trivial match (disjoint juxtaposition).
pub fn parallel(r1: &LinearRule, r2: &LinearRule) -> Result<LinearRule> {
    r1.input.check_signature(&r2.output)?;
    let vm = vec![None; r1.input.n()];
    let em = vec![None; r1.input.m()];
    Ok(compose_partial(r1, r2, &vm, &em).expect("trivial match always admissible"))
}

/// Every admissible match of `r1` into `r2`, the trivial one first.
pub fn enumerate_rule_matches(r1: &LinearRule, r2: &LinearRule) -> Result<Vec<RuleMatch>> {
    r1.input.check_signature(&r2.output)?;
    let mut out = vec![];
    for_each_partial(&r1.input, &r2.output, &mut |vm, em| {
        if compose_partial(r1, r2, vm, em).is_none() {
            return Ok(());
        }
        let vs: Vec<u32> = (0..vm.len() as u32).filter(|&v| vm[v as usize].is_some()).collect();
        let es: Vec<u32> = (0..em.len() as u32).filter(|&e| em[e as usize].is_some()).collect();
        let (m, incl) = r1.input.subgraph(&vs, &es);
        let to_o2 = Morphism {
            v: vs.iter().map(|&v| vm[v as usize].unwrap()).collect(),
            e: es.iter().map(|&e| em[e as usize].unwrap()).collect(),
        };
        out.push(RuleMatch { overlap: m, into_input1: incl, into_output2: to_o2 });
        Ok(())
    })?;
    Ok(out)
}

/// Composite along an explicit match; `Ok(None)` when a pushout complement fails.
pub fn compose_rules(r1: &LinearRule, r2: &LinearRule, mu: &RuleMatch) -> Result<Option<LinearRule>> {
    r1.input.check_signature(&r2.output)?;
    if !mu.into_input1.is_mono(&mu.overlap, &r1.input) || !mu.into_output2.is_mono(&mu.overlap, &r2.output) {
        return Err(Error::MalformedMatch("legs must be monos into I1 and O2".into()));
    }
    let mut vm = vec![None; r1.input.n()];
    let mut em = vec![None; r1.input.m()];
    for (i, &v) in mu.into_input1.v.iter().enumerate() {
        vm[v as usize] = Some(mu.into_output2.v[i]);
    }
    for (i, &e) in mu.into_input1.e.iter().enumerate() {
        em[e as usize] = Some(mu.into_output2.e[i]);
    }
    Ok(compose_partial(r1, r2, &vm, &em))
}

fn combined(r: &LinearRule) -> (RawGraph, usize, usize) {
    let sig = r.sig();
    let nc = sig.vertex_colors.len() as u32;
    let ns = sig.edge_sorts.len() as u32;
    let (no, nk) = (r.output.n() as u32, r.context.n() as u32);
    let mut colors = Vec::with_capacity((no + nk) as usize + r.input.n());
    colors.extend(r.output.colors().iter().map(|&c| c as u32));
    colors.extend(r.context.colors().iter().map(|&c| nc + c as u32));
    colors.extend(r.input.colors().iter().map(|&c| 2 * nc + c as u32));
    let mut edges = vec![];
    for (g, off) in [(&r.output, 0), (&r.context, no), (&r.input, no + nk)] {
        edges.extend(g.edges().iter().map(|e| (e.sort as u32, e.src + off, e.tgt + off)));
    }
    for k in 0..nk {
        edges.push((ns, no + k, r.o_embed.v[k as usize]));
        edges.push((ns + 1, no + k, no + nk + r.i_embed.v[k as usize]));
    }
    let mut directed: Vec<bool> = sig.edge_sorts.iter().map(|s| s.directed).collect();
    directed.extend([true, true]);
    (RawGraph { colors, edges, directed }, no as usize, nk as usize)
}

/// Certificate invariant under span isomorphisms.
pub fn rule_canonical_form(r: &LinearRule) -> CanonicalForm {
    canonical_labeling_raw(&combined(r).0).0
}

fn order_by(pos: &[u32], range: std::ops::Range<usize>) -> Vec<u32> {
    // new index of each old vertex in `range`
    let mut vs: Vec<usize> = range.clone().collect();
    vs.sort_by_key(|&v| pos[v]);
    let mut new = vec![0u32; range.len()];
    for (i, v) in vs.into_iter().enumerate() {
        new[v - range.start] = i as u32;
    }
    new
}

/// Relabels `g` by `new[v]` with edges sorted by `(sort, src, tgt, rank)`.
/// Returns the graph and the new index of each old edge.
fn relabel(g: &Graph, new: &[u32], rank: &dyn Fn(usize) -> u32) -> (Graph, Vec<u32>) {
    let mut colors = vec![0u16; g.n()];
    for v in 0..g.n() {
        colors[new[v] as usize] = g.color(v as u32);
    }
    let mut keyed: Vec<(Edge, u32, usize)> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let (s, t) = (new[e.src as usize], new[e.tgt as usize]);
            let (s, t) = if g.sig().directed(e.sort) { (s, t) } else { (s.min(t), s.max(t)) };
            (Edge { sort: e.sort, src: s, tgt: t }, rank(i), i)
        })
        .collect();
    keyed.sort();
    let mut out = Graph::empty(g.sig());
    for &c in &colors {
        out.add_vertex(c);
    }
    let mut enew = vec![0u32; g.m()];
    for (j, (e, _, old)) in keyed.iter().enumerate() {
        out.add_edge(e.sort, e.src, e.tgt);
        enew[*old] = j as u32;
    }
    (out, enew)
}

/// Certificate together with a canonically relabeled representative.
pub fn canonicalize_rule(r: &LinearRule) -> (CanonicalForm, LinearRule) {
    let (raw, no, nk) = combined(r);
    let (cf, pos) = canonical_labeling_raw(&raw);
    let ni = r.input.n();
    let newo = order_by(&pos, 0..no);
    let newk = order_by(&pos, no..no + nk);
    let newi = order_by(&pos, no + nk..no + nk + ni);
    let (k, ke) = relabel(&r.context, &newk, &|_| 0);
    let mut opre = vec![u32::MAX; r.output.m()];
    let mut ipre = vec![u32::MAX; r.input.m()];
    for (e, &x) in r.o_embed.e.iter().enumerate() {
        opre[x as usize] = ke[e];
    }
    for (e, &x) in r.i_embed.e.iter().enumerate() {
        ipre[x as usize] = ke[e];
    }
    let (o, oe) = relabel(&r.output, &newo, &|i| opre[i]);
    let (i, ie) = relabel(&r.input, &newi, &|i| ipre[i]);
    let mut ov = vec![0u32; nk];
    let mut iv = vec![0u32; nk];
    let mut oe2 = vec![0u32; r.context.m()];
    let mut ie2 = vec![0u32; r.context.m()];
    for kv in 0..nk {
        ov[newk[kv] as usize] = newo[r.o_embed.v[kv] as usize];
        iv[newk[kv] as usize] = newi[r.i_embed.v[kv] as usize];
    }
    for e in 0..r.context.m() {
        oe2[ke[e] as usize] = oe[r.o_embed.e[e] as usize];
        ie2[ke[e] as usize] = ie[r.i_embed.e[e] as usize];
    }
    let rule = LinearRule {
        output: o,
        context: k,
        input: i,
        o_embed: Morphism { v: ov, e: oe2 },
        i_embed: Morphism { v: iv, e: ie2 },
    };
    debug_assert!(rule.o_embed.is_mono(&rule.context, &rule.output));
    debug_assert!(rule.i_embed.is_mono(&rule.context, &rule.input));
    (cf, rule)
}

/// Canonically relabeled copy of a graph with its certificate.
pub fn canonicalize_graph(g: &Graph) -> (CanonicalForm, Graph) {
    let (cf, pos) = crate::graph::canonical_labeling(g);
    let (out, _) = relabel(g, &pos, &|_| 0);
    (cf, out)
}
