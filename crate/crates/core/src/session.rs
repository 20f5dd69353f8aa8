//! Sessions of executed graphs and step-back exploration over them.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::ExecutionTrace;
use crate::graph::OperationGraph;
use crate::value::Value;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SessionError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("unknown graph {0:?}")]
    UnknownGraph(String),
    #[error("graph {graph} has no node {node:?}")]
    UnknownNode { graph: String, node: String },
    #[error("cannot step back {steps} from the sink; the longest chain has {available} steps")]
    OutOfRange { steps: usize, available: usize },
    #[error("node {0:?} has no recorded value")]
    MissingValue(String),
}

/// An executed graph with every intermediate value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredGraph {
    pub graph_id: String,
    pub session_id: String,
    pub text: String,
    pub graph: OperationGraph,
    pub trace: ExecutionTrace,
    pub value: Value,
}

impl StoredGraph {
    /// Walks `steps` edges back from the sink along first input slots.
    pub fn step_back(&self, steps: usize) -> Result<(&str, &Value), SessionError> {
        let mut node = self.graph.sink_node();
        for taken in 0..steps {
            let Some(first) = node.inputs.first() else {
                return Err(SessionError::OutOfRange { steps, available: taken });
            };
            node = self.graph.node(first).expect("inputs of a stored graph are nodes");
        }
        self.value_of(&node.id).map(|v| (node.id.as_str(), v))
    }

    pub fn value_of(&self, node_id: &str) -> Result<&Value, SessionError> {
        if self.graph.node(node_id).is_none() {
            return Err(SessionError::UnknownNode { graph: self.graph_id.clone(), node: node_id.to_string() });
        }
        self.trace.values.get(node_id).ok_or_else(|| SessionError::MissingValue(node_id.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub created_at: u64,
    pub last_used: u64,
    /// Graph ids in query order.
    pub graphs: Vec<String>,
}

/// Serializable state of a whole store.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreSnapshot {
    pub next_session: u64,
    pub next_graph: u64,
    pub sessions: Vec<Session>,
    pub graphs: Vec<StoredGraph>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Thread-safe store; idle sessions expire after `ttl_secs`.
#[derive(Debug)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    graphs: RwLock<HashMap<String, Arc<StoredGraph>>>,
    next_session: AtomicU64,
    next_graph: AtomicU64,
    ttl_secs: u64,
}

impl SessionStore {
    pub fn new(ttl_secs: u64) -> Self {
        Self {
            sessions: RwLock::new(HashMap::new()),
            graphs: RwLock::new(HashMap::new()),
            next_session: AtomicU64::new(1),
            next_graph: AtomicU64::new(1),
            ttl_secs,
        }
    }

    /// Returns the live session `id`, or opens a new one when `id` is `None`.
    pub fn open(&self, id: Option<&str>, now: u64) -> Result<String, SessionError> {
        if let Some(id) = id {
            let sessions = self.sessions.read();
            let s = sessions.get(id).ok_or_else(|| SessionError::UnknownSession(id.to_string()))?;
            let mut s = s.lock();
            if now.saturating_sub(s.last_used) > self.ttl_secs {
                return Err(SessionError::UnknownSession(id.to_string()));
            }
            s.last_used = now;
            return Ok(id.to_string());
        }
        let id = format!("s{}", self.next_session.fetch_add(1, Ordering::SeqCst));
        let session = Session { id: id.clone(), created_at: now, last_used: now, graphs: Vec::new() };
        self.sessions.write().insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// Records an executed graph in `session_id` and returns its graph id.
    pub fn record(
        &self,
        session_id: &str,
        text: &str,
        graph: OperationGraph,
        trace: ExecutionTrace,
        value: Value,
        now: u64,
    ) -> Result<String, SessionError> {
        let session = self
            .sessions
            .read()
            .get(session_id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(session_id.to_string()))?;
        let graph_id = format!("g{}", self.next_graph.fetch_add(1, Ordering::SeqCst));
        let stored = StoredGraph {
            graph_id: graph_id.clone(),
            session_id: session_id.to_string(),
            text: text.to_string(),
            graph,
            trace,
            value,
        };
        self.graphs.write().insert(graph_id.clone(), Arc::new(stored));
        let mut s = session.lock();
        s.graphs.push(graph_id.clone());
        s.last_used = now;
        Ok(graph_id)
    }

    pub fn graph(&self, graph_id: &str) -> Result<Arc<StoredGraph>, SessionError> {
        self.graphs.read().get(graph_id).cloned().ok_or_else(|| SessionError::UnknownGraph(graph_id.to_string()))
    }

    pub fn session(&self, id: &str) -> Option<Session> {
        self.sessions.read().get(id).map(|s| s.lock().clone())
    }

    pub fn len(&self) -> usize {
        self.sessions.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops sessions idle for longer than the TTL, with their graphs.
    pub fn collect_garbage(&self, now: u64) -> usize {
        let expired: Vec<(String, Vec<String>)> = self
            .sessions
            .read()
            .values()
            .filter_map(|s| {
                let s = s.lock();
                (now.saturating_sub(s.last_used) > self.ttl_secs).then(|| (s.id.clone(), s.graphs.clone()))
            })
            .collect();
        let mut sessions = self.sessions.write();
        let mut graphs = self.graphs.write();
        for (id, gs) in &expired {
            sessions.remove(id);
            for g in gs {
                graphs.remove(g);
            }
        }
        expired.len()
    }

    pub fn snapshot(&self) -> StoreSnapshot {
        let mut sessions: Vec<Session> = self.sessions.read().values().map(|s| s.lock().clone()).collect();
        sessions.sort_by(|a, b| a.id.cmp(&b.id));
        let mut graphs: Vec<StoredGraph> = self.graphs.read().values().map(|g| (**g).clone()).collect();
        graphs.sort_by(|a, b| a.graph_id.cmp(&b.graph_id));
        StoreSnapshot {
            next_session: self.next_session.load(Ordering::SeqCst),
            next_graph: self.next_graph.load(Ordering::SeqCst),
            sessions,
            graphs,
        }
    }

    pub fn restore(snapshot: StoreSnapshot, ttl_secs: u64) -> Self {
        let store = Self::new(ttl_secs);
        store.next_session.store(snapshot.next_session, Ordering::SeqCst);
        store.next_graph.store(snapshot.next_graph, Ordering::SeqCst);
        {
            let mut sessions = store.sessions.write();
            for s in snapshot.sessions {
                sessions.insert(s.id.clone(), Arc::new(Mutex::new(s)));
            }
            let mut graphs = store.graphs.write();
            for g in snapshot.graphs {
                graphs.insert(g.graph_id.clone(), Arc::new(g));
            }
        }
        store
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::OperationNode;
    use crate::registry::{Kind, ValueKind};
    use std::collections::BTreeMap;

    fn chain() -> (OperationGraph, ExecutionTrace) {
        let ids = ["scan#0", "project#1", "aggregate#2"];
        let nodes = ids
            .iter()
            .enumerate()
            .map(|(i, id)| OperationNode {
                id: id.to_string(),
                function: id.split('#').next().unwrap().into(),
                executor: id.split('#').next().unwrap().into(),
                params: BTreeMap::new(),
                inputs: if i == 0 { vec![] } else { vec![ids[i - 1].to_string()] },
                score: 1.0,
                output: ValueKind::new(Kind::Scalar),
                consumed_spans: vec![],
            })
            .collect();
        let g = OperationGraph { nodes, sink: ids[2].into(), depth: 2, relevance: 1.0, coverage: 1.0, complete: true };
        let mut trace = ExecutionTrace::default();
        for (i, id) in ids.iter().enumerate() {
            trace.values.insert(id.to_string(), Value::Scalar { number: i as f64, unit: None });
        }
        (g, trace)
    }

    #[test]
    fn ids_and_step_back() {
        let store = SessionStore::new(3600);
        let s = store.open(None, 0).unwrap();
        assert_eq!(s, "s1");
        let (g, trace) = chain();
        let gid = store.record(&s, "q", g, trace, Value::Scalar { number: 2.0, unit: None }, 0).unwrap();
        assert_eq!(gid, "g1");
        let stored = store.graph(&gid).unwrap();
        assert_eq!(stored.step_back(0).unwrap().0, "aggregate#2");
        assert_eq!(stored.step_back(2).unwrap().0, "scan#0");
        assert_eq!(stored.step_back(3), Err(SessionError::OutOfRange { steps: 3, available: 2 }));
        assert!(matches!(stored.value_of("nope"), Err(SessionError::UnknownNode { .. })));
    }

    #[test]
    fn expiry_and_snapshot() {
        let store = SessionStore::new(10);
        let s1 = store.open(None, 0).unwrap();
        let s2 = store.open(None, 5).unwrap();
        let (g, trace) = chain();
        store.record(&s2, "q", g, trace, Value::Boolean { value: true }, 5).unwrap();
        assert_eq!(store.open(Some(&s1), 11), Err(SessionError::UnknownSession(s1.clone())));
        assert_eq!(store.collect_garbage(12), 1);
        assert_eq!(store.len(), 1);

        let json = serde_json::to_string(&store.snapshot()).unwrap();
        let restored = SessionStore::restore(serde_json::from_str(&json).unwrap(), 10);
        assert_eq!(restored.snapshot(), store.snapshot());
        assert_eq!(restored.open(None, 12).unwrap(), "s3");
    }
}
