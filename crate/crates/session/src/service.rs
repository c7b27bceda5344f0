use std::fmt::Write;
use std::sync::Arc;

use foresight_core::domain::{
    builtin_use_cases, ClassificationLabel, Consequence, Order, Persona, PersonaChain, ProvenanceRef, SystemicRisk,
    UseCase,
};
use foresight_engine::{
    classify_items, dedup_risks, generate_round, DuplicateJudge, EngineError, ExactTextJudge, JudgeKind, LlmJudge,
    PromptTemplates, Scope,
};
use foresight_gateway::{CallContext, Gateway, Stage};
use serde::{Deserialize, Serialize};

use crate::model::{Condition, EventKind, Node, SessionDocument, WheelSession};
use crate::store::SessionStore;
use crate::SessionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSettings {
    /// Voice used for suggestions and for labelling at finalization.
    pub persona: Persona,
    /// Chat exchanges replayed into each probe.
    pub chat_window: usize,
    pub judge: JudgeKind,
}

impl Default for SessionSettings {
    fn default() -> Self {
        Self {
            persona: Persona::Curious,
            chat_window: 6,
            judge: JudgeKind::Model,
        }
    }
}

pub struct SessionService {
    store: SessionStore,
    gateway: Arc<Gateway>,
    templates: PromptTemplates,
    use_cases: Vec<UseCase>,
    settings: SessionSettings,
}

fn consequence(id: u32, order: Order, node: &Node, persona: Persona, parent: Option<u32>) -> Consequence {
    Consequence {
        id,
        order,
        text: node.text.clone(),
        parent_first_id: parent,
        parent_second_id: None,
        persona,
        impact: node.impact.clone(),
    }
}

impl SessionService {
    pub fn new(store: SessionStore, gateway: Arc<Gateway>) -> Self {
        Self {
            store,
            gateway,
            templates: PromptTemplates::default(),
            use_cases: builtin_use_cases(),
            settings: SessionSettings::default(),
        }
    }

    pub fn with_templates(mut self, templates: PromptTemplates) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_settings(mut self, settings: SessionSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_use_cases(mut self, use_cases: Vec<UseCase>) -> Self {
        self.use_cases = use_cases;
        self
    }

    pub fn use_cases(&self) -> &[UseCase] {
        &self.use_cases
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub async fn create(&self, use_case_id: &str, condition: Condition) -> Result<SessionDocument, SessionError> {
        let uc = self
            .use_cases
            .iter()
            .find(|u| u.id == use_case_id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownUseCase(use_case_id.to_string()))?;
        let session = WheelSession::create(self.store.next_id(), uc, condition);
        let doc = session.to_document();
        self.store.insert(session)?;
        Ok(doc)
    }

    pub async fn export(&self, id: &str) -> Result<SessionDocument, SessionError> {
        Ok(self.store.get(id)?.lock().await.to_document())
    }

    pub async fn import(&self, doc: &SessionDocument) -> Result<SessionDocument, SessionError> {
        let session = WheelSession::from_document(doc)?;
        let out = session.to_document();
        self.store.insert(session)?;
        Ok(out)
    }

    async fn mutate<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut WheelSession) -> Result<T, SessionError>,
    ) -> Result<T, SessionError> {
        let handle = self.store.get(id)?;
        let mut s = handle.lock().await;
        let before = s.events.len();
        let out = f(&mut s)?;
        self.store.persist(&s, before)?;
        Ok(out)
    }

    pub async fn add_node(&self, id: &str, parent: u32, text: &str, order: u8) -> Result<Node, SessionError> {
        self.mutate(id, |s| s.add_node(parent, text, order)).await
    }

    pub async fn edit_node(&self, id: &str, node: u32, text: &str) -> Result<Node, SessionError> {
        self.mutate(id, |s| s.edit_node(node, text)).await
    }

    pub async fn delete_node(&self, id: &str, node: u32) -> Result<(), SessionError> {
        self.mutate(id, |s| s.delete_node(node)).await
    }

    /// Generates children for `node` from its path and inserts them as
    /// flagged, editable nodes.
    pub async fn suggest(&self, id: &str, node: u32) -> Result<Vec<Node>, SessionError> {
        let handle = self.store.get(id)?;
        let mut s = handle.lock().await;
        s.check_assist("suggestion")?;
        let order = s.child_order(node)?;
        let persona = self.settings.persona;
        let path = s.path(node)?;
        let mut chain = PersonaChain::new(persona);
        if let Some(first) = path.first() {
            chain.first.push(consequence(1, Order::First, first, persona, None));
        }
        if let Some(second) = path.get(1) {
            chain.second.push(consequence(1, Order::Second, second, persona, Some(1)));
        }
        let scope = Scope {
            run: None,
            target: Some(s.session_id.clone()),
        };
        let out = generate_round(
            &self.gateway,
            &self.templates,
            &s.use_case,
            persona,
            &chain,
            order.depth(),
            &scope,
        )
        .await?;
        if out.consequences.is_empty() {
            return Ok(Vec::new());
        }
        let suggestions = out
            .consequences
            .into_iter()
            .map(|c| (c.text, c.impact.filter(|i| !i.is_empty())))
            .collect();
        let before = s.events.len();
        let nodes = s.insert_suggestions(node, suggestions)?;
        self.store.persist(&s, before)?;
        Ok(nodes)
    }

    fn chat_prompt(&self, s: &WheelSession, message: &str) -> (String, String) {
        let system = format!(
            "You are helping a participant explore possible consequences of this AI use:\n{}\n\n\
             Point out consequences they may have missed. Answer in plain prose.",
            s.use_case.description
        );
        let mut user = String::new();
        for (m, r) in s.transcript(self.settings.chat_window) {
            let _ = write!(user, "Participant: {m}\nAssistant: {r}\n\n");
        }
        let _ = write!(user, "Participant: {message}");
        (system, user)
    }

    /// One chat exchange. The reply is logged and never turned into nodes.
    pub async fn chat(&self, id: &str, message: &str) -> Result<String, SessionError> {
        if message.trim().is_empty() {
            return Err(SessionError::Invalid("message is empty".into()));
        }
        let handle = self.store.get(id)?;
        let mut s = handle.lock().await;
        s.check_assist("chat")?;
        let (system, user) = self.chat_prompt(&s, message);
        let req = self.gateway.request(Stage::Chat, system, user);
        let ctx = CallContext::new(Stage::Chat).use_case(&s.use_case.id).target(&s.session_id);
        let reply = self
            .gateway
            .complete_chat(&req, &ctx)
            .await
            .map_err(EngineError::from)?
            .text;
        let before = s.events.len();
        s.commit(EventKind::Chat {
            message: message.to_string(),
            reply: reply.clone(),
        })?;
        self.store.persist(&s, before)?;
        Ok(reply)
    }

    /// Labels the third-order nodes, deduplicates the risks and freezes the
    /// session. Nothing changes if any step fails.
    pub async fn finalize(&self, id: &str) -> Result<Vec<SystemicRisk>, SessionError> {
        let handle = self.store.get(id)?;
        let mut s = handle.lock().await;
        s.check_finalize()?;
        let persona = self.settings.persona;
        let items: Vec<Consequence> = s
            .third_order()
            .map(|n| consequence(n.id, Order::Third, n, persona, None))
            .collect();
        let scope = Scope {
            run: None,
            target: Some(s.session_id.clone()),
        };
        let (labels, _, _) = classify_items(&self.gateway, &self.templates, &s.use_case, persona, &items, &scope).await;
        let labels = labels?;
        let source = s.condition.source();
        let risks: Vec<SystemicRisk> = s
            .third_order()
            .filter(|n| labels.get(&n.id) == Some(&ClassificationLabel::Risk))
            .map(|n| SystemicRisk {
                id: format!("{}-{}", s.session_id, n.id),
                use_case_id: s.use_case.id.clone(),
                text: n.text.clone(),
                impact: n.impact.clone(),
                source,
                pestel: None,
                provenance: vec![ProvenanceRef::session(&s.session_id, n.id)],
            })
            .collect();
        let llm = LlmJudge {
            gateway: &self.gateway,
            templates: &self.templates,
            use_case: &s.use_case,
        };
        let judge: &dyn DuplicateJudge = match self.settings.judge {
            JudgeKind::Model => &llm,
            JudgeKind::ExactText => &ExactTextJudge,
        };
        let deduped = dedup_risks(vec![(s.session_id.clone(), risks)], judge, &scope, true).await?;
        let before = s.events.len();
        s.commit(EventKind::Finalize {
            risks: deduped.risks.clone(),
        })?;
        self.store.persist(&s, before)?;
        Ok(deduped.risks)
    }
}
