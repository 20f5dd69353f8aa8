//! The operation graph G=(C,E) and its JSON document form.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::Span;
use crate::registry::{Registry, ValueKind};

/// One bound operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationNode {
    pub id: String,
    /// Registry function id.
    pub function: String,
    pub executor: String,
    pub params: BTreeMap<String, serde_json::Value>,
    /// Source node ids in input-slot order.
    pub inputs: Vec<String>,
    pub score: f64,
    pub output: ValueKind,
    pub consumed_spans: Vec<Span>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationGraph {
    /// Nodes in execution (post-) order; the sink is last.
    pub nodes: Vec<OperationNode>,
    pub sink: String,
    pub depth: usize,
    pub relevance: f64,
    pub coverage: f64,
    pub complete: bool,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("duplicate node id {0:?}")]
    DuplicateId(String),
    #[error("node {node:?} references unknown input {input:?}")]
    UnknownInput { node: String, input: String },
    #[error("graph contains a cycle")]
    Cycle,
    #[error("graph has {0} sinks, expected exactly one")]
    Sinks(usize),
    #[error("declared sink {0:?} is not the graph's sink")]
    WrongSink(String),
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
    #[error("edge {from:?} -> {to:?} slot {slot}: produces {produced}, slot expects {expected}")]
    EdgeType { from: String, to: String, slot: usize, produced: ValueKind, expected: ValueKind },
    #[error("node {node:?} has {found} inputs, function requires {required}")]
    Arity { node: String, found: usize, required: usize },
}

impl OperationGraph {
    pub fn node(&self, id: &str) -> Option<&OperationNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn sink_node(&self) -> &OperationNode {
        self.node(&self.sink).expect("sink is a node of the graph")
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut edges = Vec::new();
        for n in &self.nodes {
            for (slot, from) in n.inputs.iter().enumerate() {
                edges.push(Edge { from: from.clone(), to: n.id.clone(), slot });
            }
        }
        edges
    }

    /// Node ids in an order where every node follows its inputs.
    pub fn topological_order(&self) -> Result<Vec<String>, GraphError> {
        let ids: HashSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        let mut indegree: HashMap<&str, usize> = HashMap::new();
        let mut out: HashMap<&str, Vec<&str>> = HashMap::new();
        for n in &self.nodes {
            indegree.entry(n.id.as_str()).or_insert(0);
            for i in &n.inputs {
                if !ids.contains(i.as_str()) {
                    return Err(GraphError::UnknownInput { node: n.id.clone(), input: i.clone() });
                }
                *indegree.entry(n.id.as_str()).or_insert(0) += 1;
                out.entry(i.as_str()).or_default().push(n.id.as_str());
            }
        }
        let mut queue: VecDeque<&str> =
            self.nodes.iter().map(|n| n.id.as_str()).filter(|id| indegree[id] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(id) = queue.pop_front() {
            order.push(id.to_string());
            for &next in out.get(id).map(Vec::as_slice).unwrap_or(&[]) {
                let d = indegree.get_mut(next).expect("known node");
                *d -= 1;
                if *d == 0 {
                    queue.push_back(next);
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(GraphError::Cycle);
        }
        Ok(order)
    }

    /// Longest path length in edges.
    pub fn longest_path(&self) -> Result<usize, GraphError> {
        let order = self.topological_order()?;
        let mut depth: HashMap<&str, usize> = HashMap::new();
        for id in &order {
            let n = self.node(id).expect("ordered ids are nodes");
            let d = n.inputs.iter().map(|i| depth[i.as_str()] + 1).max().unwrap_or(0);
            depth.insert(n.id.as_str(), d);
        }
        Ok(depth.values().copied().max().unwrap_or(0))
    }

    /// Checks acyclicity, the single sink, and that every edge feeds a slot
    /// whose declared kind accepts the producer's output.
    pub fn validate(&self, registry: &Registry) -> Result<(), GraphError> {
        if self.nodes.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id.as_str()) {
                return Err(GraphError::DuplicateId(n.id.clone()));
            }
        }
        self.topological_order()?;
        let used: HashSet<&str> = self.nodes.iter().flat_map(|n| n.inputs.iter().map(String::as_str)).collect();
        let sinks: Vec<&OperationNode> = self.nodes.iter().filter(|n| !used.contains(n.id.as_str())).collect();
        if sinks.len() != 1 {
            return Err(GraphError::Sinks(sinks.len()));
        }
        if sinks[0].id != self.sink {
            return Err(GraphError::WrongSink(self.sink.clone()));
        }
        for n in &self.nodes {
            let spec = registry.get(&n.function).ok_or_else(|| GraphError::UnknownFunction(n.function.clone()))?;
            let required = spec.required_inputs();
            if n.inputs.len() < required || n.inputs.len() > spec.inputs.len() {
                return Err(GraphError::Arity { node: n.id.clone(), found: n.inputs.len(), required });
            }
            for (slot, from) in n.inputs.iter().enumerate() {
                let producer = self.node(from).expect("checked by topological_order");
                let expected = spec.inputs[slot].kind;
                if !expected.accepts(&producer.output) {
                    return Err(GraphError::EdgeType {
                        from: from.clone(),
                        to: n.id.clone(),
                        slot,
                        produced: producer.output,
                        expected,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDocument {
                    id: n.id.clone(),
                    function: n.function.clone(),
                    executor: n.executor.clone(),
                    params: n.params.clone(),
                    score: n.score,
                    output: n.output,
                    spans: n.consumed_spans.clone(),
                })
                .collect(),
            edges: self.edges(),
            sink: self.sink.clone(),
            depth: self.depth,
            relevance: self.relevance,
            coverage: self.coverage,
            complete: self.complete,
        }
    }

    pub fn from_document(doc: &GraphDocument) -> Result<Self, GraphError> {
        let mut inputs: HashMap<&str, BTreeMap<usize, String>> = HashMap::new();
        let ids: HashSet<&str> = doc.nodes.iter().map(|n| n.id.as_str()).collect();
        for e in &doc.edges {
            if !ids.contains(e.to.as_str()) {
                return Err(GraphError::UnknownInput { node: e.to.clone(), input: e.from.clone() });
            }
            inputs.entry(e.to.as_str()).or_default().insert(e.slot, e.from.clone());
        }
        let nodes = doc
            .nodes
            .iter()
            .map(|n| OperationNode {
                id: n.id.clone(),
                function: n.function.clone(),
                executor: n.executor.clone(),
                params: n.params.clone(),
                inputs: inputs.remove(n.id.as_str()).map(|m| m.into_values().collect()).unwrap_or_default(),
                score: n.score,
                output: n.output,
                consumed_spans: n.spans.clone(),
            })
            .collect();
        Ok(OperationGraph {
            nodes,
            sink: doc.sink.clone(),
            depth: doc.depth,
            relevance: doc.relevance,
            coverage: doc.coverage,
            complete: doc.complete,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: String,
    pub function: String,
    pub executor: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub score: f64,
    pub output: ValueKind,
    pub spans: Vec<Span>,
}

/// Wire form of an [`OperationGraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<NodeDocument>,
    pub edges: Vec<Edge>,
    pub sink: String,
    pub depth: usize,
    pub relevance: f64,
    pub coverage: f64,
    pub complete: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{builtin_registry, Kind};

    fn node(id: &str, function: &str, inputs: &[&str], output: Kind) -> OperationNode {
        OperationNode {
            id: id.into(),
            function: function.into(),
            executor: function.into(),
            params: BTreeMap::new(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            score: 1.0,
            output: ValueKind::new(output),
            consumed_spans: vec![],
        }
    }

    fn graph(nodes: Vec<OperationNode>) -> OperationGraph {
        let sink = nodes.last().unwrap().id.clone();
        OperationGraph { nodes, sink, depth: 0, relevance: 1.0, coverage: 1.0, complete: true }
    }

    #[test]
    fn single_node_document_has_no_edges() {
        let g = graph(vec![node("scan#0", "scan", &[], Kind::Table)]);
        let json = serde_json::to_string(&g.to_document()).unwrap();
        assert!(json.contains(r#""edges":[]"#), "{json}");
        assert!(g.validate(&builtin_registry()).is_ok());
    }

    #[test]
    fn document_round_trip_is_byte_identical() {
        let g = graph(vec![
            node("scan#0", "scan", &[], Kind::Table),
            node("project#1", "project", &["scan#0"], Kind::Series),
            node("aggregate#2", "aggregate", &["project#1"], Kind::Scalar),
        ]);
        let a = serde_json::to_string(&g.to_document()).unwrap();
        let doc: GraphDocument = serde_json::from_str(&a).unwrap();
        let b = serde_json::to_string(&OperationGraph::from_document(&doc).unwrap().to_document()).unwrap();
        assert_eq!(a, b);
        assert_eq!(g.longest_path().unwrap(), 2);
    }

    #[test]
    fn cycles_and_type_errors_are_detected() {
        let r = builtin_registry();
        let mut cyclic = graph(vec![
            node("project#0", "project", &["filter#1"], Kind::Series),
            node("filter#1", "filter", &["project#0"], Kind::Table),
        ]);
        cyclic.sink = "filter#1".into();
        assert_eq!(cyclic.validate(&r), Err(GraphError::Cycle));

        let bad = graph(vec![
            node("scan#0", "scan", &[], Kind::Table),
            node("aggregate#1", "aggregate", &["scan#0"], Kind::Scalar),
        ]);
        assert!(matches!(bad.validate(&r), Err(GraphError::EdgeType { .. })));

        let two_sinks = graph(vec![node("scan#0", "scan", &[], Kind::Table), node("scan#1", "scan", &[], Kind::Table)]);
        assert_eq!(two_sinks.validate(&r), Err(GraphError::Sinks(2)));
    }
}
