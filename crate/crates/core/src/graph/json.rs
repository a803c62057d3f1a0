use super::{Graph, Signature};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexJson {
    pub id: String,
    pub color: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub id: String,
    pub sort: String,
    pub ends: [String; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    #[serde(default)]
    pub vertices: Vec<VertexJson>,
    #[serde(default)]
    pub edges: Vec<EdgeJson>,
}

/// Id-to-index tables produced while decoding.
#[derive(Clone, Debug, Default)]
pub struct IdMaps {
    pub vertices: HashMap<String, u32>,
    pub edges: HashMap<String, u32>,
}

impl GraphJson {
    /// Decodes against `sig`, collecting every problem rather than the first.
    pub fn decode(&self, sig: &Arc<Signature>, ctx: &str) -> Result<(Graph, IdMaps)> {
        let mut errs = vec![];
        let mut g = Graph::empty(sig);
        let mut ids = IdMaps::default();
        for v in &self.vertices {
            match sig.color_index(&v.color) {
                Some(c) => {
                    if ids.vertices.insert(v.id.clone(), g.add_vertex(c)).is_some() {
                        errs.push(format!("{ctx}: duplicate vertex id {:?}", v.id));
                    }
                }
                None => errs.push(format!("{ctx}: vertex {:?} has unknown color {:?}", v.id, v.color)),
            }
        }
        for e in &self.edges {
            let Some(s) = sig.sort_index(&e.sort) else {
                errs.push(format!("{ctx}: edge {:?} has unknown sort {:?}", e.id, e.sort));
                continue;
            };
            let a = ids.vertices.get(&e.ends[0]);
            let b = ids.vertices.get(&e.ends[1]);
            match (a, b) {
                (Some(&a), Some(&b)) => {
                    if ids.edges.insert(e.id.clone(), g.add_edge(s, a, b)).is_some() {
                        errs.push(format!("{ctx}: duplicate edge id {:?}", e.id));
                    }
                }
                _ => errs.push(format!("{ctx}: edge {:?} references a missing vertex", e.id)),
            }
        }
        if errs.is_empty() {
            Ok((g, ids))
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Encodes with ids `v<i>` / `e<i>`; undirected ends come out sorted.
    pub fn encode(g: &Graph) -> GraphJson {
        let sig = g.sig();
        GraphJson {
            vertices: g
                .colors()
                .iter()
                .enumerate()
                .map(|(i, &c)| VertexJson { id: format!("v{i}"), color: sig.vertex_colors[c as usize].clone() })
                .collect(),
            edges: g
                .edges()
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let mut ends = [format!("v{}", e.src), format!("v{}", e.tgt)];
                    if !sig.directed(e.sort) {
                        ends.sort();
                    }
                    EdgeJson { id: format!("e{i}"), sort: sig.edge_sorts[e.sort as usize].name.clone(), ends }
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_errors() {
        let sig = Signature::build(&["w"], &[("u", false)]);
        let j: GraphJson = serde_json::from_str(
            r#"{"vertices":[{"id":"a","color":"w"},{"id":"b","color":"w"}],
                "edges":[{"id":"x","sort":"u","ends":["b","a"]}]}"#,
        )
        .unwrap();
        let (g, ids) = j.decode(&sig, "g").unwrap();
        assert_eq!(ids.vertices["b"], 1);
        let back = GraphJson::encode(&g);
        assert_eq!(back.edges[0].ends, ["v0".to_string(), "v1".to_string()]);
        let bad: GraphJson = serde_json::from_str(r#"{"vertices":[{"id":"a","color":"red"}]}"#).unwrap();
        let err = bad.decode(&sig, "g").unwrap_err().to_string();
        assert!(err.contains("red"));
    }
}
