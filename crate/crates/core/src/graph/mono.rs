//! Monomorphism enumeration by backtracking.
//!
//! Pattern vertices are assigned in index order, host candidates in ascending
//! index order. Edge multiplicities between already-placed vertices are checked
//! as soon as both endpoints are placed; the concrete edge assignment (which
//! parallel edge goes where) is expanded last.

use super::{Graph, Morphism};
use crate::Result;
use std::collections::HashMap;

/// Lookup tables over a host graph, reusable across several patterns.
pub struct HostIndex<'a> {
    pub g: &'a Graph,
    by_color: Vec<Vec<u32>>,
    pairs: HashMap<(u16, u32, u32), Vec<u32>>,
    degree: Vec<u32>,
    /// Distinct neighbors of each vertex, ascending.
    nbrs: Vec<Vec<u32>>,
    /// Loop count per vertex and sort.
    loops: Vec<Vec<u32>>,
}

impl<'a> HostIndex<'a> {
    pub fn new(g: &'a Graph) -> HostIndex<'a> {
        let mut by_color = vec![vec![]; g.sig().vertex_colors.len()];
        for (v, &c) in g.colors().iter().enumerate() {
            by_color[c as usize].push(v as u32);
        }
        let mut pairs: HashMap<(u16, u32, u32), Vec<u32>> = HashMap::new();
        for (i, e) in g.edges().iter().enumerate() {
            pairs.entry((e.sort, e.src, e.tgt)).or_default().push(i as u32);
        }
        let mut nbrs = vec![vec![]; g.n()];
        let mut loops = vec![vec![0u32; g.sig().edge_sorts.len()]; g.n()];
        for e in g.edges() {
            if e.src == e.tgt {
                loops[e.src as usize][e.sort as usize] += 1;
            }
            nbrs[e.src as usize].push(e.tgt);
            nbrs[e.tgt as usize].push(e.src);
        }
        for l in &mut nbrs {
            l.sort_unstable();
            l.dedup();
        }
        HostIndex { g, by_color, pairs, degree: g.degrees(), nbrs, loops }
    }

    pub fn degree(&self, v: u32) -> u32 {
        self.degree[v as usize]
    }

    fn edges_between(&self, sort: u16, s: u32, t: u32) -> &[u32] {
        let key = if self.g.sig().directed(sort) { (sort, s, t) } else { (sort, s.min(t), s.max(t)) };
        self.pairs.get(&key).map(|v| v.as_slice()).unwrap_or(&[])
    }
}

struct Plan {
    colors: Vec<u16>,
    degree: Vec<u32>,
    /// Edge groups `(sort, s, t, pattern edges)` checked at vertex `max(s, t)`.
    checks: Vec<Vec<usize>>,
    groups: Vec<(u16, u32, u32, Vec<u32>)>,
    /// An earlier vertex adjacent to each vertex, if any; candidates are then
    /// drawn from the host neighbors of its image.
    anchor: Vec<Option<u32>>,
    /// Required `(sort, count)` loops per vertex.
    loops: Vec<Vec<(u16, u32)>>,
}

impl Plan {
    fn new(p: &Graph) -> Plan {
        let mut idx: HashMap<(u16, u32, u32), usize> = HashMap::new();
        let mut groups: Vec<(u16, u32, u32, Vec<u32>)> = vec![];
        for (i, e) in p.edges().iter().enumerate() {
            let k = *idx.entry((e.sort, e.src, e.tgt)).or_insert_with(|| {
                groups.push((e.sort, e.src, e.tgt, vec![]));
                groups.len() - 1
            });
            groups[k].3.push(i as u32);
        }
        let mut checks = vec![vec![]; p.n()];
        for (k, g) in groups.iter().enumerate() {
            checks[g.1.max(g.2) as usize].push(k);
        }
        let mut anchor = vec![None; p.n()];
        for g in &groups {
            let (lo, hi) = (g.1.min(g.2), g.1.max(g.2));
            if lo != hi && anchor[hi as usize].is_none() {
                anchor[hi as usize] = Some(lo);
            }
        }
        let mut loops = vec![vec![]; p.n()];
        for g in &groups {
            if g.1 == g.2 {
                loops[g.1 as usize].push((g.0, g.3.len() as u32));
            }
        }
        Plan { colors: p.colors().to_vec(), degree: p.degrees(), checks, groups, anchor, loops }
    }
}

/// Injective vertex maps compatible with colors and edge multiplicities.
fn vertex_maps(plan: &Plan, host: &HostIndex, f: &mut dyn FnMut(&[u32]) -> bool) {
    let n = plan.colors.len();
    let mut map = vec![0u32; n];
    let mut used = vec![false; host.g.n()];
    fn rec(
        i: usize,
        plan: &Plan,
        host: &HostIndex,
        map: &mut Vec<u32>,
        used: &mut Vec<bool>,
        f: &mut dyn FnMut(&[u32]) -> bool,
    ) -> bool {
        if i == map.len() {
            return f(map);
        }
        let cands = match plan.anchor[i] {
            Some(j) => &host.nbrs[map[j as usize] as usize],
            None => &host.by_color[plan.colors[i] as usize],
        };
        for &x in cands {
            if used[x as usize] || host.degree[x as usize] < plan.degree[i] || host.g.colors()[x as usize] != plan.colors[i]
                || plan.loops[i].iter().any(|&(srt, c)| host.loops[x as usize][srt as usize] < c)
            {
                continue;
            }
            map[i] = x;
            let ok = plan.checks[i].iter().all(|&k| {
                let (sort, s, t, ref es) = plan.groups[k];
                host.edges_between(sort, map[s as usize], map[t as usize]).len() >= es.len()
            });
            if !ok {
                continue;
            }
            used[x as usize] = true;
            let go_on = rec(i + 1, plan, host, map, used, f);
            used[x as usize] = false;
            if !go_on {
                return false;
            }
        }
        true
    }
    rec(0, plan, host, &mut map, &mut used, f);
}

/// Expands all injective edge assignments for a fixed vertex map.
fn edge_maps(plan: &Plan, host: &HostIndex, vmap: &[u32], m: usize, f: &mut dyn FnMut(&[u32]) -> bool) -> bool {
    let lists: Vec<&[u32]> = plan
        .groups
        .iter()
        .map(|(sort, s, t, _)| host.edges_between(*sort, vmap[*s as usize], vmap[*t as usize]))
        .collect();
    // Flatten (group, slot) pairs in pattern edge order so output is lexicographic.
    let mut slots: Vec<(usize, u32)> = vec![];
    for (k, g) in plan.groups.iter().enumerate() {
        for &pe in &g.3 {
            slots.push((k, pe));
        }
    }
    slots.sort_by_key(|s| s.1);
    let mut emap = vec![0u32; m];
    let mut taken: Vec<Vec<bool>> = lists.iter().map(|l| vec![false; l.len()]).collect();
    fn rec(
        j: usize,
        slots: &[(usize, u32)],
        lists: &[&[u32]],
        taken: &mut Vec<Vec<bool>>,
        emap: &mut Vec<u32>,
        f: &mut dyn FnMut(&[u32]) -> bool,
    ) -> bool {
        if j == slots.len() {
            return f(emap);
        }
        let (k, pe) = slots[j];
        for idx in 0..lists[k].len() {
            if taken[k][idx] {
                continue;
            }
            taken[k][idx] = true;
            emap[pe as usize] = lists[k][idx];
            let go_on = rec(j + 1, slots, lists, taken, emap, f);
            taken[k][idx] = false;
            if !go_on {
                return false;
            }
        }
        true
    }
    rec(0, &slots, &lists, &mut taken, &mut emap, f)
}

/// Calls `f` on every mono `p -> host` in lexicographic order of
/// `(vertex map, edge map)`; `f` returns `false` to stop early.
pub fn for_each_mono(p: &Graph, host: &HostIndex, f: &mut dyn FnMut(&Morphism) -> bool) {
    let plan = Plan::new(p);
    let m = p.m();
    vertex_maps(&plan, host, &mut |vmap| {
        let vm = vmap.to_vec();
        edge_maps(&plan, host, vmap, m, &mut |emap| f(&Morphism { v: vm.clone(), e: emap.to_vec() }))
    });
}

/// Every mono `pattern -> host`, each exactly once, sorted by vertex map then edge map.
pub fn enumerate_monos(pattern: &Graph, host: &Graph) -> Result<Vec<Morphism>> {
    pattern.check_signature(host)?;
    let idx = HostIndex::new(host);
    let mut out = vec![];
    for_each_mono(pattern, &idx, &mut |m| {
        out.push(m.clone());
        true
    });
    Ok(out)
}

fn falling(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    ((n - k + 1)..=n).map(|x| x as u64).product()
}

/// Number of monos without materializing them.
pub fn count_monos(pattern: &Graph, host: &HostIndex) -> u64 {
    count_admissible(pattern, &vec![true; pattern.n()], host)
}

/// Number of monos whose pushout complement exists when the vertices with
/// `keep[v] == false` are deleted: every deleted vertex must have no host edges
/// beyond the images of its pattern edges.
pub fn count_admissible(pattern: &Graph, keep: &[bool], host: &HostIndex) -> u64 {
    let plan = Plan::new(pattern);
    let mut total = 0u64;
    vertex_maps(&plan, host, &mut |vmap| {
        for (v, &k) in keep.iter().enumerate() {
            if !k && host.degree(vmap[v]) != plan.degree[v] {
                return true;
            }
        }
        let mut c = 1u64;
        for (sort, s, t, es) in &plan.groups {
            c *= falling(host.edges_between(*sort, vmap[*s as usize], vmap[*t as usize]).len(), es.len());
        }
        total += c;
        true
    });
    total
}
