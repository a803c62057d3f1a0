//! Generators and brute-force reference implementations shared by the
//! property suites. Nothing here calls the engine's matching, rewriting or
//! canonical-labeling code.

#![allow(dead_code)]

use proptest::prelude::*;
use rasir::dpo::LinearRule;
use rasir::graph::{Edge, Graph, Morphism, Signature};
use std::collections::BTreeMap;
use std::sync::Arc;

pub fn sig() -> Arc<Signature> {
    Signature::build(&["a", "b"], &[("u", false), ("d", true)])
}

/// `(n, colors, edges)` with loops and parallel edges allowed.
pub type RawParts = (Vec<u16>, Vec<(u16, u32, u32)>);

pub fn raw_graph(max_v: usize, max_e: usize) -> impl Strategy<Value = RawParts> {
    (0..=max_v).prop_flat_map(move |n| {
        let colors = prop::collection::vec(0u16..2, n);
        let edges = if n == 0 {
            Just(vec![]).boxed()
        } else {
            prop::collection::vec((0u16..2, 0..n as u32, 0..n as u32), 0..=max_e).boxed()
        };
        (colors, edges)
    })
}

pub fn build(s: &Arc<Signature>, (colors, edges): &RawParts) -> Graph {
    let mut g = Graph::empty(s);
    for &c in colors {
        g.add_vertex(c);
    }
    for &(k, a, b) in edges {
        g.add_edge(k, a, b);
    }
    g
}

pub fn graph(max_v: usize, max_e: usize) -> impl Strategy<Value = Graph> {
    raw_graph(max_v, max_e).prop_map(|p| build(&sig(), &p))
}

/// Rule with at most `max_v` vertices in each of `O`, `K`, `I`.
pub fn rule(max_v: usize) -> impl Strategy<Value = LinearRule> {
    raw_graph(max_v, 3).prop_flat_map(move |(ic, ie)| {
        let ni = ic.len();
        let ne = ie.len();
        (
            Just((ic, ie)),
            prop::collection::vec(any::<bool>(), ni),
            prop::collection::vec(any::<bool>(), ne),
            prop::collection::vec(0u16..2, 0..=max_v),
            prop::collection::vec((0u16..2, 0u32..64, 0u32..64), 0..=2),
        )
    })
    .prop_map(move |(ip, keep_v, keep_e, extra_c, extra_e)| {
        let s = sig();
        let input = build(&s, &ip);
        let kv: Vec<u32> = (0..input.n() as u32).filter(|&v| keep_v[v as usize]).collect();
        let ke: Vec<u32> = (0..input.m() as u32)
            .filter(|&e| {
                let ed = input.edge(e);
                keep_e[e as usize] && kv.contains(&ed.src) && kv.contains(&ed.tgt)
            })
            .collect();
        let (k, k_to_i) = input.subgraph(&kv, &ke);
        let mut o = k.clone();
        for &c in extra_c.iter().take(max_v.saturating_sub(k.n())) {
            o.add_vertex(c);
        }
        if o.n() > 0 {
            for &(srt, a, b) in &extra_e {
                o.add_edge(srt, a % o.n() as u32, b % o.n() as u32);
            }
        }
        LinearRule::new(o, k.clone(), input, Morphism::identity(&k), k_to_i).expect("generated legs are monos")
    })
}

fn norm(s: &Signature, e: Edge, p: &[u32]) -> Edge {
    let (a, b) = (p[e.src as usize], p[e.tgt as usize]);
    if s.directed(e.sort) {
        Edge { sort: e.sort, src: a, tgt: b }
    } else {
        Edge { sort: e.sort, src: a.min(b), tgt: a.max(b) }
    }
}

fn edge_multiset(g: &Graph, p: &[u32]) -> BTreeMap<Edge, usize> {
    let mut m = BTreeMap::new();
    for &e in g.edges() {
        *m.entry(norm(g.sig(), e, p)).or_default() += 1;
    }
    m
}

pub fn permutations(n: usize) -> Vec<Vec<u32>> {
    let mut out = vec![];
    fn rec(cur: &mut Vec<u32>, used: &mut Vec<bool>, n: usize, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i as u32);
                rec(cur, used, n, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    rec(&mut vec![], &mut vec![false; n], n, &mut out);
    out
}

/// Isomorphism by trying every vertex bijection.
pub fn brute_iso(g: &Graph, h: &Graph) -> bool {
    if g.n() != h.n() || g.m() != h.m() {
        return false;
    }
    let target = edge_multiset(h, &(0..h.n() as u32).collect::<Vec<_>>());
    permutations(g.n()).into_iter().any(|p| {
        (0..g.n()).all(|v| g.color(v as u32) == h.color(p[v])) && edge_multiset(g, &p) == target
    })
}

/// `g` with vertices renumbered by `p` and edges listed in reverse.
pub fn relabel(g: &Graph, p: &[u32]) -> Graph {
    let mut inv = vec![0u32; g.n()];
    for (i, &x) in p.iter().enumerate() {
        inv[x as usize] = i as u32;
    }
    let mut h = Graph::empty(g.sig());
    for &old in &inv {
        h.add_vertex(g.color(old));
    }
    for e in g.edges().iter().rev() {
        h.add_edge(e.sort, p[e.src as usize], p[e.tgt as usize]);
    }
    h
}

/// Every injective vertex map followed by every injective edge assignment.
pub fn brute_monos(p: &Graph, x: &Graph) -> Vec<Morphism> {
    let mut out = vec![];
    let mut vmaps = vec![];
    fn vrec(i: usize, p: &Graph, x: &Graph, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == p.n() {
            out.push(cur.clone());
            return;
        }
        for y in 0..x.n() as u32 {
            if !cur.contains(&y) && x.color(y) == p.color(i as u32) {
                cur.push(y);
                vrec(i + 1, p, x, cur, out);
                cur.pop();
            }
        }
    }
    vrec(0, p, x, &mut vec![], &mut vmaps);
    for vm in vmaps {
        let mut em = vec![];
        fn erec(j: usize, p: &Graph, x: &Graph, vm: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Morphism>) {
            if j == p.m() {
                out.push(Morphism { v: vm.to_vec(), e: cur.clone() });
                return;
            }
            let want = norm(p.sig(), p.edge(j as u32), vm);
            for f in 0..x.m() as u32 {
                if !cur.contains(&f) && x.edge(f) == want {
                    cur.push(f);
                    erec(j + 1, p, x, vm, cur, out);
                    cur.pop();
                }
            }
        }
        erec(0, p, x, &vm, &mut em, &mut out);
    }
    out
}

/// Textbook double-pushout step along `m: I -> X`; `None` when a deleted
/// vertex would leave a dangling edge.
pub fn brute_rewrite(r: &LinearRule, x: &Graph, m: &Morphism) -> Option<Graph> {
    let kept_v: Vec<bool> = {
        let mut k = vec![false; r.input.n()];
        for &v in &r.i_embed.v {
            k[v as usize] = true;
        }
        k
    };
    let kept_e: Vec<bool> = {
        let mut k = vec![false; r.input.m()];
        for &e in &r.i_embed.e {
            k[e as usize] = true;
        }
        k
    };
    let del_v: Vec<u32> = (0..r.input.n()).filter(|&v| !kept_v[v]).map(|v| m.v[v]).collect();
    let del_e: Vec<u32> = (0..r.input.m()).filter(|&e| !kept_e[e]).map(|e| m.e[e]).collect();
    let matched_e: Vec<u32> = m.e.clone();
    for (f, e) in x.edges().iter().enumerate() {
        let touches = del_v.contains(&e.src) || del_v.contains(&e.tgt);
        if touches && !matched_e.contains(&(f as u32)) {
            return None;
        }
    }
    // D = X minus deleted items, then glue O along K
    let mut y = Graph::empty(x.sig());
    let mut xv_to_y = vec![None; x.n()];
    for v in 0..x.n() as u32 {
        if !del_v.contains(&v) {
            xv_to_y[v as usize] = Some(y.add_vertex(x.color(v)));
        }
    }
    for (f, e) in x.edges().iter().enumerate() {
        if !del_e.contains(&(f as u32)) {
            y.add_edge(e.sort, xv_to_y[e.src as usize].unwrap(), xv_to_y[e.tgt as usize].unwrap());
        }
    }
    let mut ov_to_y = vec![None; r.output.n()];
    for (k, &ov) in r.o_embed.v.iter().enumerate() {
        let xv = m.v[r.i_embed.v[k] as usize];
        ov_to_y[ov as usize] = xv_to_y[xv as usize];
    }
    for v in 0..r.output.n() {
        if ov_to_y[v].is_none() {
            ov_to_y[v] = Some(y.add_vertex(r.output.color(v as u32)));
        }
    }
    let o_from_k: Vec<u32> = r.o_embed.e.clone();
    for (f, e) in r.output.edges().iter().enumerate() {
        if !o_from_k.contains(&(f as u32)) {
            y.add_edge(e.sort, ov_to_y[e.src as usize].unwrap(), ov_to_y[e.tgt as usize].unwrap());
        }
    }
    Some(y)
}

/// Signed Stirling numbers of the first kind `s(k, m)`.
pub fn stirling1(k: usize, m: usize) -> i128 {
    let mut t = vec![vec![0i128; k + 1]; k + 1];
    t[0][0] = 1;
    for n in 0..k {
        for j in 1..=n + 1 {
            t[n + 1][j] = t[n][j - 1] - n as i128 * t[n][j];
        }
    }
    t[k][m]
}

pub fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |a, i| a * (n - i) / (i + 1))
}

pub fn factorial(n: u64) -> u64 {
    (1..=n).product()
}
