//! Finite colored multigraphs with directed and undirected edge sorts.
//!
//! Vertices and edges are densely indexed; string ids only exist in the JSON
//! encoding. Undirected edges store their endpoints with `src <= tgt`.

mod canon;
mod json;
mod mono;

pub use canon::{canonical_form, canonical_labeling, canonical_labeling_raw, CanonicalForm, RawGraph};
pub use json::{EdgeJson, GraphJson, IdMaps, VertexJson};
pub use mono::{count_admissible, count_monos, enumerate_monos, for_each_mono, HostIndex};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeSort {
    pub name: String,
    pub directed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub vertex_colors: Vec<String>,
    pub edge_sorts: Vec<EdgeSort>,
}

impl Signature {
    pub fn new(vertex_colors: Vec<String>, edge_sorts: Vec<EdgeSort>) -> Result<Arc<Signature>> {
        let mut seen = HashSet::new();
        for c in &vertex_colors {
            if c.is_empty() || !seen.insert(c.clone()) {
                return Err(Error::InvalidSignature(format!("bad or duplicate color {c:?}")));
            }
        }
        let mut seen = HashSet::new();
        for s in &edge_sorts {
            if s.name.is_empty() || !seen.insert(s.name.clone()) {
                return Err(Error::InvalidSignature(format!("bad or duplicate edge sort {:?}", s.name)));
            }
        }
        Ok(Arc::new(Signature { vertex_colors, edge_sorts }))
    }

    /// Convenience constructor: `colors`, `(name, directed)` pairs.
    pub fn build(colors: &[&str], sorts: &[(&str, bool)]) -> Arc<Signature> {
        Signature::new(
            colors.iter().map(|s| s.to_string()).collect(),
            sorts
                .iter()
                .map(|(n, d)| EdgeSort { name: n.to_string(), directed: *d })
                .collect(),
        )
        .expect("valid signature")
    }

    pub fn color_index(&self, name: &str) -> Option<u16> {
        self.vertex_colors.iter().position(|c| c == name).map(|i| i as u16)
    }

    pub fn sort_index(&self, name: &str) -> Option<u16> {
        self.edge_sorts.iter().position(|s| s.name == name).map(|i| i as u16)
    }

    pub fn directed(&self, sort: u16) -> bool {
        self.edge_sorts[sort as usize].directed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub sort: u16,
    pub src: u32,
    pub tgt: u32,
}

#[derive(Clone, Debug)]
pub struct Graph {
    sig: Arc<Signature>,
    colors: Vec<u16>,
    edges: Vec<Edge>,
}

/// Vertex and edge maps between two graphs, by index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Morphism {
    pub v: Vec<u32>,
    pub e: Vec<u32>,
}

impl Morphism {
    pub fn identity(g: &Graph) -> Morphism {
        Morphism { v: (0..g.n() as u32).collect(), e: (0..g.m() as u32).collect() }
    }

    pub fn empty() -> Morphism {
        Morphism { v: vec![], e: vec![] }
    }

    /// `self: A -> B`, `then: B -> C`, result `A -> C`.
    pub fn then(&self, then: &Morphism) -> Morphism {
        Morphism {
            v: self.v.iter().map(|&x| then.v[x as usize]).collect(),
            e: self.e.iter().map(|&x| then.e[x as usize]).collect(),
        }
    }

    pub fn is_injective(&self) -> bool {
        let vs: HashSet<_> = self.v.iter().collect();
        let es: HashSet<_> = self.e.iter().collect();
        vs.len() == self.v.len() && es.len() == self.e.len()
    }

    /// Colors, sorts and endpoints are respected.
    pub fn is_homomorphism(&self, dom: &Graph, cod: &Graph) -> bool {
        if self.v.len() != dom.n() || self.e.len() != dom.m() {
            return false;
        }
        if self.v.iter().any(|&x| x as usize >= cod.n()) || self.e.iter().any(|&x| x as usize >= cod.m()) {
            return false;
        }
        for (i, &c) in dom.colors.iter().enumerate() {
            if cod.colors[self.v[i] as usize] != c {
                return false;
            }
        }
        for (i, e) in dom.edges.iter().enumerate() {
            let f = cod.edges[self.e[i] as usize];
            if f.sort != e.sort {
                return false;
            }
            let (s, t) = (self.v[e.src as usize], self.v[e.tgt as usize]);
            let ok = if dom.sig.directed(e.sort) {
                f.src == s && f.tgt == t
            } else {
                (f.src, f.tgt) == (s.min(t), s.max(t))
            };
            if !ok {
                return false;
            }
        }
        true
    }

    pub fn is_mono(&self, dom: &Graph, cod: &Graph) -> bool {
        self.is_homomorphism(dom, cod) && self.is_injective()
    }

    /// Inverse on the image, `None` outside it.
    pub fn inverse(&self, cod_n: usize, cod_m: usize) -> (Vec<Option<u32>>, Vec<Option<u32>>) {
        let mut iv = vec![None; cod_n];
        let mut ie = vec![None; cod_m];
        for (i, &x) in self.v.iter().enumerate() {
            iv[x as usize] = Some(i as u32);
        }
        for (i, &x) in self.e.iter().enumerate() {
            ie[x as usize] = Some(i as u32);
        }
        (iv, ie)
    }
}

impl Graph {
    pub fn empty(sig: &Arc<Signature>) -> Graph {
        Graph { sig: sig.clone(), colors: vec![], edges: vec![] }
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn n(&self) -> usize {
        self.colors.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn color(&self, v: u32) -> u16 {
        self.colors[v as usize]
    }

    pub fn colors(&self) -> &[u16] {
        &self.colors
    }

    pub fn edge(&self, e: u32) -> Edge {
        self.edges[e as usize]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn add_vertex(&mut self, color: u16) -> u32 {
        assert!((color as usize) < self.sig.vertex_colors.len(), "color out of range");
        self.colors.push(color);
        (self.colors.len() - 1) as u32
    }

    pub fn add_edge(&mut self, sort: u16, s: u32, t: u32) -> u32 {
        assert!((sort as usize) < self.sig.edge_sorts.len(), "sort out of range");
        assert!((s as usize) < self.n() && (t as usize) < self.n(), "endpoint out of range");
        let (s, t) = if self.sig.directed(sort) { (s, t) } else { (s.min(t), s.max(t)) };
        self.edges.push(Edge { sort, src: s, tgt: t });
        (self.edges.len() - 1) as u32
    }

    /// Builds a graph from color names and `(sort, src, tgt)` triples. Panics on bad names.
    pub fn from_parts(sig: &Arc<Signature>, colors: &[&str], edges: &[(&str, u32, u32)]) -> Graph {
        let mut g = Graph::empty(sig);
        for c in colors {
            g.add_vertex(sig.color_index(c).unwrap_or_else(|| panic!("unknown color {c}")));
        }
        for (s, a, b) in edges {
            g.add_edge(sig.sort_index(s).unwrap_or_else(|| panic!("unknown sort {s}")), *a, *b);
        }
        g
    }

    pub fn same_signature(&self, other: &Graph) -> bool {
        Arc::ptr_eq(&self.sig, &other.sig) || *self.sig == *other.sig
    }

    pub fn check_signature(&self, other: &Graph) -> Result<()> {
        if self.same_signature(other) {
            Ok(())
        } else {
            Err(Error::SignatureMismatch("graphs over different color signatures".into()))
        }
    }

    /// Number of edges incident to `v`, loops counted once.
    pub fn degree(&self, v: u32) -> usize {
        self.edges.iter().filter(|e| e.src == v || e.tgt == v).count()
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.n()];
        for e in &self.edges {
            d[e.src as usize] += 1;
            if e.tgt != e.src {
                d[e.tgt as usize] += 1;
            }
        }
        d
    }

    /// Subgraph on the given vertex and edge sets (edges must have their
    /// endpoints among the vertices), with its inclusion.
    pub fn subgraph(&self, vs: &[u32], es: &[u32]) -> (Graph, Morphism) {
        let mut idx = HashMap::new();
        let mut g = Graph::empty(&self.sig);
        for &v in vs {
            idx.insert(v, g.add_vertex(self.colors[v as usize]));
        }
        for &e in es {
            let ed = self.edges[e as usize];
            g.edges.push(Edge { sort: ed.sort, src: idx[&ed.src], tgt: idx[&ed.tgt] });
        }
        (g, Morphism { v: vs.to_vec(), e: es.to_vec() })
    }

    /// Disjoint union with injections; ids of `self` come first.
    pub fn disjoint_union(&self, other: &Graph) -> Result<(Graph, Morphism, Morphism)> {
        self.check_signature(other)?;
        let mut g = self.clone();
        let off = self.n() as u32;
        let eoff = self.m() as u32;
        g.colors.extend_from_slice(&other.colors);
        for e in &other.edges {
            g.edges.push(Edge { sort: e.sort, src: e.src + off, tgt: e.tgt + off });
        }
        let left = Morphism::identity(self);
        let right = Morphism {
            v: (0..other.n() as u32).map(|x| x + off).collect(),
            e: (0..other.m() as u32).map(|x| x + eoff).collect(),
        };
        Ok((g, left, right))
    }

    /// Vertex-component labels, edges of any sort connect.
    pub fn component_labels(&self) -> (usize, Vec<u32>) {
        let n = self.n();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(p: &mut [u32], x: u32) -> u32 {
            let mut r = x;
            while p[r as usize] != r {
                r = p[r as usize];
            }
            let mut y = x;
            while p[y as usize] != r {
                let nx = p[y as usize];
                p[y as usize] = r;
                y = nx;
            }
            r
        }
        for e in &self.edges {
            let a = find(&mut parent, e.src);
            let b = find(&mut parent, e.tgt);
            if a != b {
                parent[a.max(b) as usize] = a.min(b);
            }
        }
        let mut label = vec![u32::MAX; n];
        let mut roots = HashMap::new();
        for v in 0..n as u32 {
            let r = find(&mut parent, v);
            let k = roots.len() as u32;
            label[v as usize] = *roots.entry(r).or_insert(k);
        }
        (roots.len(), label)
    }

    pub fn is_connected(&self) -> bool {
        self.n() > 0 && self.component_labels().0 == 1
    }

    /// Maximal connected subgraphs in order of their smallest vertex, with inclusions.
    pub fn connected_components(&self) -> Vec<(Graph, Morphism)> {
        let (k, label) = self.component_labels();
        let mut vs = vec![vec![]; k];
        let mut es = vec![vec![]; k];
        for v in 0..self.n() as u32 {
            vs[label[v as usize] as usize].push(v);
        }
        for (i, e) in self.edges.iter().enumerate() {
            es[label[e.src as usize] as usize].push(i as u32);
        }
        (0..k).map(|c| self.subgraph(&vs[c], &es[c])).collect()
    }

    /// Structural equality under the identity map of indices.
    pub fn identical(&self, other: &Graph) -> bool {
        self.colors == other.colors && self.edges == other.edges
    }

    /// Short human-readable rendering, e.g. `{0:w 1:b | 0-1:link}`.
    pub fn describe(&self) -> String {
        let vs: Vec<String> = self
            .colors
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{i}:{}", self.sig.vertex_colors[*c as usize]))
            .collect();
        let es: Vec<String> = self
            .edges
            .iter()
            .map(|e| {
                let arrow = if self.sig.directed(e.sort) { "->" } else { "-" };
                format!("{}{arrow}{}:{}", e.src, e.tgt, self.sig.edge_sorts[e.sort as usize].name)
            })
            .collect();
        if es.is_empty() {
            format!("{{{}}}", vs.join(" "))
        } else {
            format!("{{{} | {}}}", vs.join(" "), es.join(" "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Arc<Signature> {
        Signature::build(&["w", "b"], &[("d", true), ("u", false)])
    }

    #[test]
    fn undirected_ends_are_normalized() {
        let s = sig();
        let g = Graph::from_parts(&s, &["w", "w"], &[("u", 1, 0), ("d", 1, 0)]);
        assert_eq!((g.edge(0).src, g.edge(0).tgt), (0, 1));
        assert_eq!((g.edge(1).src, g.edge(1).tgt), (1, 0));
    }

    #[test]
    fn components() {
        let s = sig();
        assert!(Graph::empty(&s).connected_components().is_empty());
        let g = Graph::from_parts(&s, &["w", "w", "w"], &[("d", 1, 2)]);
        assert_eq!(g.connected_components().len(), 2);
        let tri = Graph::from_parts(&s, &["w", "w", "w"], &[("u", 0, 1), ("u", 1, 2), ("u", 2, 0)]);
        assert_eq!(tri.connected_components().len(), 1);
    }

    #[test]
    fn union_sizes_add() {
        let s = sig();
        let a = Graph::from_parts(&s, &["w"], &[]);
        let b = Graph::from_parts(&s, &["b", "b"], &[("u", 0, 1)]);
        let (u, l, r) = a.disjoint_union(&b).unwrap();
        assert_eq!((u.n(), u.m()), (3, 1));
        assert!(l.is_mono(&a, &u) && r.is_mono(&b, &u));
    }

    #[test]
    fn duplicate_colors_rejected() {
        assert!(Signature::new(vec!["a".into(), "a".into()], vec![]).is_err());
        assert!(Signature::new(vec!["".into()], vec![]).is_err());
    }
}
