use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use foresight_core::domain::{Order, RiskSource, SystemicRisk, UseCase};
use serde::{Deserialize, Serialize};

use crate::SessionError;

/// Id of the hub; real nodes start at 1.
pub const HUB: u32 = 0;
pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    HumanOnly,
    HumanPlusAi,
}

impl Condition {
    pub fn source(self) -> RiskSource {
        match self {
            Condition::HumanOnly => RiskSource::HumanOnly,
            Condition::HumanPlusAi => RiskSource::HumanPlusAi,
        }
    }

    pub fn allows_ai(self) -> bool {
        self == Condition::HumanPlusAi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Open,
    Finalized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub parent: u32,
    pub order: Order,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact: Option<String>,
    #[serde(default)]
    pub ai_suggested: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EventKind {
    Create { use_case: UseCase, condition: Condition },
    Add { node: Node },
    Edit { id: u32, text: String },
    Delete { id: u32 },
    Suggest { parent: u32, nodes: Vec<Node> },
    Chat { message: String, reply: String },
    Finalize { risks: Vec<SystemicRisk> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub at_ms: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Full exported state of a session. `events` alone determines the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionDocument {
    pub version: u32,
    pub session_id: String,
    pub use_case: UseCase,
    pub condition: Condition,
    pub status: Status,
    #[serde(rename = "final")]
    pub is_final: bool,
    pub nodes: Vec<Node>,
    pub risks: Vec<SystemicRisk>,
    pub events: Vec<Event>,
}

/// A human wheel built by replaying its event log.
#[derive(Debug, Clone, PartialEq)]
pub struct WheelSession {
    pub session_id: String,
    pub use_case: UseCase,
    pub condition: Condition,
    pub status: Status,
    pub nodes: BTreeMap<u32, Node>,
    pub risks: Vec<SystemicRisk>,
    pub events: Vec<Event>,
    next_node: u32,
}

impl WheelSession {
    pub fn create(session_id: impl Into<String>, use_case: UseCase, condition: Condition) -> Self {
        let mut s = Self {
            session_id: session_id.into(),
            use_case: use_case.clone(),
            condition,
            status: Status::Open,
            nodes: BTreeMap::new(),
            risks: Vec::new(),
            events: Vec::new(),
            next_node: 1,
        };
        s.events.push(Event {
            seq: 1,
            at_ms: now_ms(),
            kind: EventKind::Create { use_case, condition },
        });
        s
    }

    /// Rebuilds a session, checking every event as if it were new.
    pub fn replay(session_id: impl Into<String>, events: &[Event]) -> Result<Self, SessionError> {
        let replay_err = |seq, reason: &str| SessionError::Replay {
            seq,
            reason: reason.to_string(),
        };
        let first = events.first().ok_or_else(|| replay_err(0, "empty event log"))?;
        let EventKind::Create { use_case, condition } = &first.kind else {
            return Err(replay_err(first.seq, "log must start with create"));
        };
        if first.seq != 1 {
            return Err(replay_err(first.seq, "sequence must start at 1"));
        }
        let mut s = Self::create(session_id, use_case.clone(), *condition);
        s.events[0] = first.clone();
        for e in &events[1..] {
            if e.seq != s.events.len() as u64 + 1 {
                return Err(replay_err(e.seq, "sequence gap"));
            }
            s.apply(&e.kind).map_err(|err| replay_err(e.seq, &err.to_string()))?;
            s.events.push(e.clone());
        }
        Ok(s)
    }

    pub fn from_document(doc: &SessionDocument) -> Result<Self, SessionError> {
        if doc.version != DOCUMENT_VERSION {
            return Err(SessionError::Invalid(format!("unsupported document version {}", doc.version)));
        }
        let s = Self::replay(&doc.session_id, &doc.events)?;
        if s.to_document() != *doc {
            return Err(SessionError::Replay {
                seq: doc.events.len() as u64,
                reason: "document state does not match its event log".into(),
            });
        }
        Ok(s)
    }

    pub fn to_document(&self) -> SessionDocument {
        SessionDocument {
            version: DOCUMENT_VERSION,
            session_id: self.session_id.clone(),
            use_case: self.use_case.clone(),
            condition: self.condition,
            status: self.status,
            is_final: self.status == Status::Finalized,
            nodes: self.nodes.values().cloned().collect(),
            risks: self.risks.clone(),
            events: self.events.clone(),
        }
    }

    fn depth(&self, id: u32) -> Result<u8, SessionError> {
        if id == HUB {
            return Ok(0);
        }
        self.nodes
            .get(&id)
            .map(|n| n.order.depth())
            .ok_or(SessionError::NodeNotFound(id))
    }

    fn ensure_open(&self) -> Result<(), SessionError> {
        match self.status {
            Status::Open => Ok(()),
            Status::Finalized => Err(SessionError::Finalized),
        }
    }

    fn ensure_ai(&self, what: &str) -> Result<(), SessionError> {
        if self.condition.allows_ai() {
            Ok(())
        } else {
            Err(SessionError::Forbidden(format!("{what} is not available in human-only sessions")))
        }
    }

    /// Order of a new child of `parent`, if one is allowed.
    pub fn child_order(&self, parent: u32) -> Result<Order, SessionError> {
        let depth = self.depth(parent)? + 1;
        Order::from_depth(depth).ok_or_else(|| SessionError::Depth(format!("node {parent} is third-order; nothing can go below it")))
    }

    /// Ancestors of `id` from the first-order node down to `id` itself.
    pub fn path(&self, id: u32) -> Result<Vec<&Node>, SessionError> {
        let mut out = Vec::new();
        let mut cur = id;
        while cur != HUB {
            let n = self.nodes.get(&cur).ok_or(SessionError::NodeNotFound(cur))?;
            out.push(n);
            cur = n.parent;
        }
        out.reverse();
        Ok(out)
    }

    pub fn third_order(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(|n| n.order == Order::Third)
    }

    fn check_new_node(&self, node: &Node) -> Result<(), SessionError> {
        if node.id != self.next_node {
            return Err(SessionError::Invalid(format!("expected node id {}, got {}", self.next_node, node.id)));
        }
        if node.text.trim().is_empty() {
            return Err(SessionError::Invalid("node text is empty".into()));
        }
        let want = self.child_order(node.parent)?;
        if node.order != want {
            return Err(SessionError::Depth(format!(
                "a child of node {} must be {}, not {}",
                node.parent, want, node.order
            )));
        }
        Ok(())
    }

    fn apply(&mut self, kind: &EventKind) -> Result<(), SessionError> {
        match kind {
            EventKind::Create { .. } => return Err(SessionError::Invalid("session already created".into())),
            EventKind::Add { node } => {
                self.ensure_open()?;
                if node.ai_suggested {
                    return Err(SessionError::Invalid("added nodes are participant-authored".into()));
                }
                self.check_new_node(node)?;
                self.next_node += 1;
                self.nodes.insert(node.id, node.clone());
            }
            EventKind::Edit { id, text } => {
                self.ensure_open()?;
                if text.trim().is_empty() {
                    return Err(SessionError::Invalid("node text is empty".into()));
                }
                let n = self.nodes.get_mut(id).ok_or(SessionError::NodeNotFound(*id))?;
                n.text = text.clone();
            }
            EventKind::Delete { id } => {
                self.ensure_open()?;
                if !self.nodes.contains_key(id) {
                    return Err(SessionError::NodeNotFound(*id));
                }
                if self.nodes.values().any(|n| n.parent == *id) {
                    return Err(SessionError::HasChildren(*id));
                }
                self.nodes.remove(id);
            }
            EventKind::Suggest { parent, nodes } => {
                self.ensure_ai("suggestion")?;
                self.ensure_open()?;
                for node in nodes {
                    if !node.ai_suggested || node.parent != *parent {
                        return Err(SessionError::Invalid("suggested nodes must be flagged children of the parent".into()));
                    }
                    self.check_new_node(node)?;
                    self.next_node += 1;
                    self.nodes.insert(node.id, node.clone());
                }
            }
            EventKind::Chat { .. } => {
                self.ensure_ai("chat")?;
                self.ensure_open()?;
            }
            EventKind::Finalize { risks } => {
                self.ensure_open()?;
                if self.third_order().next().is_none() {
                    return Err(SessionError::NoThirdOrder);
                }
                let source = self.condition.source();
                if risks.iter().any(|r| r.source != source) {
                    return Err(SessionError::Invalid("risk source does not match the session condition".into()));
                }
                self.risks = risks.clone();
                self.status = Status::Finalized;
            }
        }
        Ok(())
    }

    /// Validates and applies a new event, then appends it to the log.
    pub fn commit(&mut self, kind: EventKind) -> Result<&Event, SessionError> {
        self.apply(&kind)?;
        let seq = self.events.len() as u64 + 1;
        self.events.push(Event {
            seq,
            at_ms: now_ms(),
            kind,
        });
        Ok(self.events.last().expect("just pushed"))
    }

    pub fn add_node(&mut self, parent: u32, text: &str, order: u8) -> Result<Node, SessionError> {
        let order = Order::from_depth(order).ok_or_else(|| {
            SessionError::Depth(format!("order {order} is outside 1..=3"))
        })?;
        let node = Node {
            id: self.next_node,
            parent,
            order,
            text: text.trim().to_string(),
            impact: None,
            ai_suggested: false,
        };
        self.commit(EventKind::Add { node: node.clone() })?;
        Ok(node)
    }

    pub fn edit_node(&mut self, id: u32, text: &str) -> Result<Node, SessionError> {
        self.commit(EventKind::Edit {
            id,
            text: text.trim().to_string(),
        })?;
        Ok(self.nodes[&id].clone())
    }

    pub fn delete_node(&mut self, id: u32) -> Result<(), SessionError> {
        self.commit(EventKind::Delete { id }).map(|_| ())
    }

    /// Inserts suggestions as flagged children of `parent`.
    pub fn insert_suggestions(
        &mut self,
        parent: u32,
        suggestions: Vec<(String, Option<String>)>,
    ) -> Result<Vec<Node>, SessionError> {
        let order = self.child_order(parent)?;
        let nodes: Vec<Node> = suggestions
            .into_iter()
            .enumerate()
            .map(|(i, (text, impact))| Node {
                id: self.next_node + i as u32,
                parent,
                order,
                text,
                impact,
                ai_suggested: true,
            })
            .collect();
        self.commit(EventKind::Suggest {
            parent,
            nodes: nodes.clone(),
        })?;
        Ok(nodes)
    }

    /// Checks that a suggestion or chat call may run, before any model call.
    pub fn check_assist(&self, what: &str) -> Result<(), SessionError> {
        self.ensure_ai(what)?;
        self.ensure_open()
    }

    pub fn check_finalize(&self) -> Result<(), SessionError> {
        self.ensure_open()?;
        if self.third_order().next().is_none() {
            return Err(SessionError::NoThirdOrder);
        }
        Ok(())
    }

    /// The last `window` chat exchanges, oldest first.
    pub fn transcript(&self, window: usize) -> Vec<(&str, &str)> {
        let all: Vec<(&str, &str)> = self
            .events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Chat { message, reply } => Some((message.as_str(), reply.as_str())),
                _ => None,
            })
            .collect();
        all[all.len().saturating_sub(window)..].to_vec()
    }
}
