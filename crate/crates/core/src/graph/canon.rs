//! Canonical forms: color refinement, then individualization over the first
//! non-singleton cell, keeping the lexicographically smallest encoding.
//! Branches that differ only by swapping twin vertices are skipped.

use super::Graph;

/// Plain colored multigraph used as canonization input: `colors[v]`, edges
/// `(sort, src, tgt)`, and `directed[sort]`.
pub struct RawGraph {
    pub colors: Vec<u32>,
    pub edges: Vec<(u32, u32, u32)>,
    pub directed: Vec<bool>,
}

impl RawGraph {
    pub fn from_graph(g: &Graph) -> RawGraph {
        RawGraph {
            colors: g.colors().iter().map(|&c| c as u32).collect(),
            edges: g.edges().iter().map(|e| (e.sort as u32, e.src, e.tgt)).collect(),
            directed: g.sig().edge_sorts.iter().map(|s| s.directed).collect(),
        }
    }
}

/// Byte string identifying an isomorphism class within one signature.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm(pub Vec<u8>);

impl CanonicalForm {
    pub fn hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

type Adj = Vec<Vec<(u32, u32)>>;

fn adjacency(g: &RawGraph) -> Adj {
    let mut adj: Adj = vec![vec![]; g.colors.len()];
    for &(sort, s, t) in &g.edges {
        let base = sort * 5;
        let d = g.directed[sort as usize];
        if s == t {
            adj[s as usize].push((if d { base + 4 } else { base + 3 }, s));
        } else if d {
            adj[s as usize].push((base + 1, t));
            adj[t as usize].push((base + 2, s));
        } else {
            adj[s as usize].push((base, t));
            adj[t as usize].push((base, s));
        }
    }
    adj
}

/// Splits cells until stable. `cell[v]` is the ordered cell index of `v`.
fn refine(adj: &Adj, cell: &mut [u32]) {
    let n = cell.len();
    let mut ncells = {
        let mut c: Vec<u32> = cell.to_vec();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    loop {
        let mut keys: Vec<(u32, Vec<(u32, u32)>, u32)> = (0..n)
            .map(|v| {
                let mut nb: Vec<(u32, u32)> = adj[v].iter().map(|&(c, w)| (c, cell[w as usize])).collect();
                nb.sort_unstable();
                (cell[v], nb, v as u32)
            })
            .collect();
        keys.sort_unstable();
        let mut idx = 0u32;
        for i in 0..n {
            if i > 0 && (keys[i].0 != keys[i - 1].0 || keys[i].1 != keys[i - 1].1) {
                idx += 1;
            }
            cell[keys[i].2 as usize] = idx;
        }
        let k = if n == 0 { 0 } else { idx as usize + 1 };
        if k == ncells {
            return;
        }
        ncells = k;
    }
}

/// `twin[v]`: smallest vertex whose transposition with `v` is an automorphism.
fn twins(g: &RawGraph, adj: &Adj) -> Vec<u32> {
    let n = g.colors.len();
    let mut rep: Vec<u32> = (0..n as u32).collect();
    const X: u32 = u32::MAX;
    const Y: u32 = u32::MAX - 1;
    let view = |u: usize, v: usize| -> Vec<(u32, u32)> {
        let mut l: Vec<(u32, u32)> = adj[u]
            .iter()
            .map(|&(c, w)| {
                let w = if w as usize == v {
                    X
                } else if w as usize == u {
                    Y
                } else {
                    w
                };
                (c, w)
            })
            .collect();
        l.sort_unstable();
        l
    };
    for u in 0..n {
        if rep[u] != u as u32 {
            continue;
        }
        for v in (u + 1)..n {
            if rep[v] != v as u32 || g.colors[u] != g.colors[v] || adj[u].len() != adj[v].len() {
                continue;
            }
            if view(u, v) == view(v, u) {
                rep[v] = u as u32;
            }
        }
    }
    rep
}

fn encode(g: &RawGraph, pos: &[u32]) -> Vec<u32> {
    let n = g.colors.len();
    let mut out = Vec::with_capacity(2 + n + 3 * g.edges.len());
    out.push(n as u32);
    let mut cols = vec![0u32; n];
    for v in 0..n {
        cols[pos[v] as usize] = g.colors[v];
    }
    out.extend(cols);
    out.push(g.edges.len() as u32);
    let mut es: Vec<(u32, u32, u32)> = g
        .edges
        .iter()
        .map(|&(sort, s, t)| {
            let (a, b) = (pos[s as usize], pos[t as usize]);
            if g.directed[sort as usize] {
                (sort, a, b)
            } else {
                (sort, a.min(b), a.max(b))
            }
        })
        .collect();
    es.sort_unstable();
    for (s, a, b) in es {
        out.extend([s, a, b]);
    }
    out
}

struct Search<'a> {
    g: &'a RawGraph,
    adj: Adj,
    twin: Vec<u32>,
    best: Option<(Vec<u32>, Vec<u32>)>,
}

impl Search<'_> {
    fn run(&mut self, cell: Vec<u32>) {
        let n = cell.len();
        // first non-singleton cell
        let mut size = vec![0u32; n];
        for &c in &cell {
            size[c as usize] += 1;
        }
        let target = (0..n).find(|&c| size[c] > 1);
        let Some(t) = target else {
            let enc = encode(self.g, &cell);
            if self.best.as_ref().map_or(true, |(b, _)| enc < *b) {
                self.best = Some((enc, cell));
            }
            return;
        };
        let t = t as u32;
        let mut tried: Vec<u32> = vec![];
        for v in 0..n {
            if cell[v] != t || tried.contains(&self.twin[v]) {
                continue;
            }
            tried.push(self.twin[v]);
            let mut next = cell.clone();
            for (u, c) in next.iter_mut().enumerate() {
                if *c > t || (*c == t && u != v) {
                    *c += 1;
                }
            }
            refine(&self.adj, &mut next);
            self.run(next);
        }
    }
}

/// Canonical certificate and canonical position of every vertex.
pub fn canonical_labeling(g: &Graph) -> (CanonicalForm, Vec<u32>) {
    canonical_labeling_raw(&RawGraph::from_graph(g))
}

pub fn canonical_labeling_raw(g: &RawGraph) -> (CanonicalForm, Vec<u32>) {
    let adj = adjacency(g);
    let twin = twins(g, &adj);
    let mut cell: Vec<u32> = g.colors.clone();
    // compress colors to ordered cell indices
    let mut cs = cell.clone();
    cs.sort_unstable();
    cs.dedup();
    for c in cell.iter_mut() {
        *c = cs.binary_search(c).unwrap() as u32;
    }
    refine(&adj, &mut cell);
    let mut s = Search { g, adj, twin, best: None };
    s.run(cell);
    let (enc, pos) = s.best.unwrap_or((vec![0, 0], vec![]));
    let mut bytes = Vec::with_capacity(enc.len() * 4);
    for x in enc {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    (CanonicalForm(bytes), pos)
}

pub fn canonical_form(g: &Graph) -> CanonicalForm {
    canonical_labeling(g).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Signature;

    #[test]
    fn relabelings_agree() {
        let s = Signature::build(&["w", "b"], &[("d", true), ("u", false)]);
        let t1 = Graph::from_parts(&s, &["w"; 3], &[("u", 0, 1), ("u", 1, 2), ("u", 2, 0)]);
        let t2 = Graph::from_parts(&s, &["w"; 3], &[("u", 2, 1), ("u", 0, 2), ("u", 1, 0)]);
        assert_eq!(canonical_form(&t1), canonical_form(&t2));
        let a = Graph::from_parts(&s, &["w", "w"], &[("d", 0, 1)]);
        let b = Graph::from_parts(&s, &["w", "w"], &[("d", 1, 0)]);
        assert_eq!(canonical_form(&a), canonical_form(&b));
        let p3 = Graph::from_parts(&s, &["w"; 3], &[("u", 0, 1), ("u", 1, 2)]);
        assert_ne!(canonical_form(&p3), canonical_form(&t1));
    }

    #[test]
    fn empty_graph() {
        let s = Signature::build(&["w"], &[]);
        let e = Graph::empty(&s);
        assert_eq!(canonical_form(&e), canonical_form(&e.clone()));
    }
}
