//! Plan-and-execute proofreading agent.
//!
//! The loop sends the agent prompt plus the running transcript, dispatches
//! `todo_write` / `search_tool` / `verify_tool` invocations, and feeds
//! observations (including targeted rejection messages) back to the model.
//! `verify_tool` is the only mutator of the working text: a correction is
//! accepted only when its anchor occurs exactly once in the current working
//! text, changes something, and does not overlap a previously stored span.
//! The final edit set is re-derived against the pristine source.

use crate::edit::{extract_edits, EditSet, Paragraph};
use crate::prompts::{fill_template, PromptSet};
use crate::providers::{
    ChatGateway, ChatMessage, ChatRequest, Correction, ProviderError, RawToolCall, Searcher,
    DEFAULT_TEMPERATURE,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TodoStatus {
    Pending,
    InProgress,
    Completed,
}

impl TodoStatus {
    fn parse(s: &str) -> Option<TodoStatus> {
        match s {
            "pending" => Some(TodoStatus::Pending),
            "in_progress" => Some(TodoStatus::InProgress),
            "completed" => Some(TodoStatus::Completed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TodoItem {
    pub id: String,
    /// Actionable instruction, e.g. one claim to verify or one sentence to check.
    pub content: String,
    pub status: TodoStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToolError {
    #[error("invalid todo status {0:?}; expected pending, in_progress or completed")]
    InvalidStatus(String),
    #[error("duplicate todo id in payload: {0:?}")]
    DuplicateIdInPayload(String),
    #[error("malformed tool arguments: {0}")]
    BadArguments(String),
    #[error("unknown tool: {0:?}")]
    UnknownTool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    AnchorNotFound,
    AnchorAmbiguous,
    NoOp,
    Overlap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerifyOutcome {
    Accepted,
    Rejected { reason: RejectReason, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyItemResult {
    pub correction: Correction,
    pub outcome: VerifyOutcome,
}

/// What `verify_tool` returns to the model: per-item outcomes, every stored
/// correction so far, and the current working text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyResult {
    pub items: Vec<VerifyItemResult>,
    pub stored: Vec<Correction>,
    pub working_text: String,
}

#[derive(Debug, Clone)]
struct StoredCorrection {
    correction: Correction,
    /// Span the corrected text occupies in the CURRENT working text; shifted
    /// as later corrections land before it.
    span: (usize, usize),
}

/// One proofreading session over an immutable source paragraph.
#[derive(Debug, Clone)]
pub struct AgentSession {
    source: Paragraph,
    working: Paragraph,
    todos: Vec<TodoItem>,
    store: Vec<StoredCorrection>,
}

impl AgentSession {
    pub fn new(source: Paragraph) -> Self {
        AgentSession { working: source.clone(), source, todos: Vec::new(), store: Vec::new() }
    }

    pub fn source(&self) -> &Paragraph {
        &self.source
    }

    pub fn working_text(&self) -> &Paragraph {
        &self.working
    }

    pub fn todos(&self) -> &[TodoItem] {
        &self.todos
    }

    pub fn stored(&self) -> Vec<Correction> {
        self.store.iter().map(|s| s.correction.clone()).collect()
    }

    pub fn all_todos_completed(&self) -> bool {
        self.todos.iter().all(|t| t.status == TodoStatus::Completed)
    }

    /// Source-anchored edits equivalent to the verified store.
    pub fn final_edits(&self) -> EditSet {
        extract_edits(&self.source, &self.working)
    }

    /// `merge = false` replaces the list; `merge = true` upserts by id,
    /// updating content/status of existing ids and appending new ones.
    /// Returns the post-state list.
    pub fn todo_write(
        &mut self,
        merge: bool,
        todos: Vec<TodoItem>,
    ) -> Result<&[TodoItem], ToolError> {
        let mut seen = std::collections::HashSet::new();
        for t in &todos {
            if !seen.insert(t.id.clone()) {
                return Err(ToolError::DuplicateIdInPayload(t.id.clone()));
            }
        }
        if merge {
            for t in todos {
                match self.todos.iter_mut().find(|existing| existing.id == t.id) {
                    Some(existing) => *existing = t,
                    None => self.todos.push(t),
                }
            }
        } else {
            self.todos = todos;
        }
        Ok(&self.todos)
    }

    /// Verifies and stores corrections against the current working text.
    /// Failures never abort the call; each item gets a targeted message.
    pub fn verify(&mut self, corrections: Vec<Correction>) -> VerifyResult {
        let mut items = Vec::with_capacity(corrections.len());
        for c in corrections {
            let outcome = self.verify_one(&c);
            items.push(VerifyItemResult { correction: c, outcome });
        }
        VerifyResult {
            items,
            stored: self.stored(),
            working_text: self.working.as_str().to_owned(),
        }
    }

    fn verify_one(&mut self, c: &Correction) -> VerifyOutcome {
        let occurrences = self.working.find_all(&c.original);
        let span = match occurrences.len() {
            0 => {
                return VerifyOutcome::Rejected {
                    reason: RejectReason::AnchorNotFound,
                    message: format!(
                        "anchor {:?} does not occur in the current text; re-check the wording",
                        c.original
                    ),
                }
            }
            1 => occurrences[0],
            n => {
                return VerifyOutcome::Rejected {
                    reason: RejectReason::AnchorAmbiguous,
                    message: format!(
                        "anchor {:?} occurs {n} times; extend it with surrounding context",
                        c.original
                    ),
                }
            }
        };
        if c.is_noop() {
            return VerifyOutcome::Rejected {
                reason: RejectReason::NoOp,
                message: format!("anchor {:?} is unchanged by the correction", c.original),
            };
        }
        if let Some(hit) =
            self.store.iter().find(|s| span.0 < s.span.1 && s.span.0 < span.1)
        {
            return VerifyOutcome::Rejected {
                reason: RejectReason::Overlap,
                message: format!(
                    "anchor {:?} overlaps the stored correction {:?} -> {:?}",
                    c.original, hit.correction.original, hit.correction.corrected
                ),
            };
        }
        // Accept: apply to the working text and shift stored spans behind the
        // edit point.
        let corrected_len = c.corrected.chars().count();
        let delta = corrected_len as isize - (span.1 - span.0) as isize;
        self.working =
            self.working.splice(span.0, span.1, &c.corrected).expect("span from find_all");
        for s in &mut self.store {
            if s.span.0 >= span.1 {
                s.span.0 = (s.span.0 as isize + delta) as usize;
                s.span.1 = (s.span.1 as isize + delta) as usize;
            }
        }
        self.store.push(StoredCorrection {
            correction: c.clone(),
            span: (span.0, span.0 + corrected_len),
        });
        VerifyOutcome::Accepted
    }
}

/// Session termination condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionStatus {
    /// The model finished with every todo completed (or none planned).
    Completed,
    /// The model stopped calling tools while todos were still open.
    Incomplete,
    /// The turn budget ran out.
    Exhausted,
    /// The chat gateway failed; edits stored so far are returned.
    Aborted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub turn: usize,
    pub role: String,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<RawToolCall>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observations: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub model: String,
    pub temperature: f64,
    pub current_time: String,
    pub max_turns: usize,
    /// Search calls allowed per session.
    pub search_budget: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            model: "default".to_owned(),
            temperature: DEFAULT_TEMPERATURE,
            current_time: "2025-01-01 00:00".to_owned(),
            max_turns: 32,
            search_budget: 10,
        }
    }
}

#[derive(Debug)]
pub struct AgentOutcome {
    pub edits: EditSet,
    pub status: SessionStatus,
    pub transcript: Vec<TranscriptRecord>,
    pub stored: Vec<Correction>,
    pub working_text: Paragraph,
    /// Set when the session aborted on a gateway failure.
    pub error: Option<ProviderError>,
}

/// JSON schemas for the three tools, offered to dialects that support
/// structured tool calling.
pub fn tool_schemas() -> serde_json::Value {
    serde_json::json!([
        {
            "type": "function",
            "function": {
                "name": "todo_write",
                "description": "任务规划与流程控制：merge=false 整体替换任务列表，merge=true 按 id 合并更新",
                "parameters": {
                    "type": "object",
                    "properties": {
                        "merge": {"type": "boolean"},
                        "todos": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "properties": {
                                    "id": {"type": "string"},
                                    "content": {"type": "string"},
                                    "status": {"type": "string", "enum": ["pending", "in_progress", "completed"]}
                                },
                                "required": ["id", "content", "status"]
                            }
                        }
                    },
                    "required": ["merge", "todos"]
                }
            }
        },
        {
            "type": "function",
            "function": {
                "name": "search_tool",
                "description": "使用 WebSearch API 进行网络搜索，返回结构化证据",
                "parameters": {
                    "type": "object",
                    "properties": {"query": {"type": "string"}},
                    "required": ["query"]
                }
            }
        },
        {
            "type": "function",
            "function": {
                "name": "verify_tool",
                "description": "核验并存储已确认的修改；original 必须在当前文本中唯一出现",
                "parameters": {
                    "type": "object",
                    "properties": {
                        "corrections": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "properties": {
                                    "original": {"type": "string"},
                                    "corrected": {"type": "string"},
                                    "reason": {"type": "string"}
                                },
                                "required": ["original", "corrected"]
                            }
                        }
                    },
                    "required": ["corrections"]
                }
            }
        }
    ])
}

/// Fallback tool-call extraction for dialects without structured calls: a
/// fenced (or bare) JSON object shaped like `{"tool": ..., "arguments": ...}`
/// or `{"tool_calls": [...]}`.
fn fallback_tool_calls(text: &str) -> Result<Vec<RawToolCall>, Option<String>> {
    let Some(payload) = crate::providers::corrections::extract_json_payload(text) else {
        return Err(None); // no tool-call attempt at all
    };
    let as_call = |v: &serde_json::Value| -> Option<RawToolCall> {
        let name = v.get("tool").or_else(|| v.get("name"))?.as_str()?.to_owned();
        let arguments = v.get("arguments").cloned().unwrap_or(serde_json::json!({}));
        Some(RawToolCall { id: None, name, arguments: arguments.to_string() })
    };
    if let Some(calls) = payload.get("tool_calls").and_then(|c| c.as_array()) {
        let parsed: Option<Vec<RawToolCall>> = calls.iter().map(as_call).collect();
        return parsed.ok_or(Some("tool_calls entries need a name and arguments".to_owned()));
    }
    if let Some(call) = as_call(&payload) {
        return Ok(vec![call]);
    }
    if payload.get("corrections").is_some() || payload.get("todos").is_some() {
        // Looks like tool arguments without a tool name: still a failed attempt.
        return Err(Some(
            "JSON payload lacks a tool name; wrap it as {\"tool\": ..., \"arguments\": ...}"
                .to_owned(),
        ));
    }
    Err(None)
}

fn dispatch_tool(
    session: &mut AgentSession,
    searcher: &Searcher,
    searches_left: &mut usize,
    call: &RawToolCall,
) -> String {
    let result = parse_and_run(session, searcher, searches_left, call);
    match result {
        Ok(observation) => observation,
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

fn parse_and_run(
    session: &mut AgentSession,
    searcher: &Searcher,
    searches_left: &mut usize,
    call: &RawToolCall,
) -> Result<String, ToolError> {
    let args: serde_json::Value = serde_json::from_str(&call.arguments)
        .map_err(|e| ToolError::BadArguments(e.to_string()))?;
    match call.name.as_str() {
        "todo_write" => {
            let merge = args
                .get("merge")
                .and_then(|m| m.as_bool())
                .ok_or_else(|| ToolError::BadArguments("missing boolean \"merge\"".into()))?;
            let raw_todos = args
                .get("todos")
                .and_then(|t| t.as_array())
                .ok_or_else(|| ToolError::BadArguments("missing \"todos\" array".into()))?;
            let mut todos = Vec::with_capacity(raw_todos.len());
            for item in raw_todos {
                let id = item
                    .get("id")
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| ToolError::BadArguments("todo missing \"id\"".into()))?;
                let content = item.get("content").and_then(|v| v.as_str()).unwrap_or("");
                let status_raw =
                    item.get("status").and_then(|v| v.as_str()).unwrap_or("pending");
                let status = TodoStatus::parse(status_raw)
                    .ok_or_else(|| ToolError::InvalidStatus(status_raw.to_owned()))?;
                todos.push(TodoItem { id: id.to_owned(), content: content.to_owned(), status });
            }
            let list = session.todo_write(merge, todos)?;
            Ok(serde_json::json!({ "todos": list }).to_string())
        }
        "search_tool" => {
            let query = args
                .get("query")
                .and_then(|q| q.as_str())
                .ok_or_else(|| ToolError::BadArguments("missing string \"query\"".into()))?;
            if *searches_left == 0 {
                return Ok(serde_json::json!({
                    "error": "search budget exhausted; finish with existing evidence"
                })
                .to_string());
            }
            *searches_left -= 1;
            // Search failures degrade to an observation so the session can
            // continue on parametric knowledge.
            match searcher.search(query) {
                Ok(items) => Ok(serde_json::json!({ "results": items }).to_string()),
                Err(e) => Ok(serde_json::json!({ "error": e.to_string() }).to_string()),
            }
        }
        "verify_tool" => {
            let raw = args
                .get("corrections")
                .and_then(|c| c.as_array())
                .ok_or_else(|| ToolError::BadArguments("missing \"corrections\" array".into()))?;
            let mut corrections = Vec::with_capacity(raw.len());
            for item in raw {
                let original = item.get("original").and_then(|v| v.as_str()).ok_or_else(|| {
                    ToolError::BadArguments("correction missing \"original\"".into())
                })?;
                let corrected = item.get("corrected").and_then(|v| v.as_str()).ok_or_else(
                    || ToolError::BadArguments("correction missing \"corrected\"".into()),
                )?;
                corrections.push(
                    Correction::new(original, corrected).with_reason(
                        item.get("reason").and_then(|v| v.as_str()).unwrap_or(""),
                    ),
                );
            }
            let result = session.verify(corrections);
            Ok(serde_json::to_string(&result).expect("verify result serializes"))
        }
        other => Err(ToolError::UnknownTool(other.to_owned())),
    }
}

/// Runs one agent session over `text`. Never panics on model misbehavior:
/// malformed tool calls become error observations and consume a turn.
pub fn run_agent(
    gateway: &dyn ChatGateway,
    searcher: &Searcher,
    text: &Paragraph,
    prompts: &PromptSet,
    config: &AgentConfig,
) -> AgentOutcome {
    let system =
        fill_template(&prompts.agent, &[("current_time", config.current_time.as_str())]);
    let mut session = AgentSession::new(text.clone());
    let mut searches_left = config.search_budget;
    let mut messages = vec![ChatMessage::user(text.as_str().to_owned())];
    let mut transcript = Vec::new();
    let mut status = SessionStatus::Exhausted;
    let mut error = None;

    for turn in 1..=config.max_turns.max(1) {
        let request = ChatRequest {
            model: config.model.clone(),
            system: system.clone(),
            messages: messages.clone(),
            temperature: config.temperature,
            tools: Some(tool_schemas()),
        };
        let response = match gateway.chat(&request) {
            Ok(r) => r,
            Err(e) => {
                status = SessionStatus::Aborted;
                error = Some(e);
                break;
            }
        };

        let calls = if response.tool_calls.is_empty() {
            match fallback_tool_calls(&response.text) {
                Ok(calls) => calls,
                Err(Some(parse_message)) => {
                    // A failed tool attempt: feed the error back and spend the turn.
                    let observation =
                        serde_json::json!({ "error": parse_message }).to_string();
                    messages.push(ChatMessage::assistant(response.text.clone()));
                    messages.push(ChatMessage::user(observation.clone()));
                    transcript.push(TranscriptRecord {
                        turn,
                        role: "assistant".to_owned(),
                        content: response.text,
                        tool_calls: Vec::new(),
                        observations: vec![observation],
                    });
                    continue;
                }
                Err(None) => {
                    // Final message.
                    transcript.push(TranscriptRecord {
                        turn,
                        role: "assistant".to_owned(),
                        content: response.text,
                        tool_calls: Vec::new(),
                        observations: Vec::new(),
                    });
                    status = if session.all_todos_completed() {
                        SessionStatus::Completed
                    } else {
                        SessionStatus::Incomplete
                    };
                    break;
                }
            }
        } else {
            response.tool_calls.clone()
        };

        let mut observations = Vec::with_capacity(calls.len());
        for call in &calls {
            let observation = dispatch_tool(&mut session, searcher, &mut searches_left, call);
            messages.push(ChatMessage::tool(observation.clone(), call.id.clone()));
            observations.push(observation);
        }
        // Insert the assistant message before its observations.
        let insert_at = messages.len() - observations.len();
        let mut assistant = ChatMessage::assistant(response.text.clone());
        assistant.tool_calls = calls.clone();
        messages.insert(insert_at, assistant);

        transcript.push(TranscriptRecord {
            turn,
            role: "assistant".to_owned(),
            content: response.text,
            tool_calls: calls,
            observations,
        });
    }

    AgentOutcome {
        edits: session.final_edits(),
        status,
        transcript,
        stored: session.stored(),
        working_text: session.working_text().clone(),
        error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{
        text_response, tool_call_response, RawSearchResult, ScriptedGateway, ScriptedSearch,
    };
    use std::sync::Arc;

    fn empty_searcher() -> Searcher {
        Searcher::live(Arc::new(ScriptedSearch::new(Vec::<(String, _)>::new())))
    }

    fn todo(id: &str, status: TodoStatus) -> TodoItem {
        TodoItem { id: id.to_owned(), content: format!("task {id}"), status }
    }

    #[test]
    fn todo_write_replace_and_merge() {
        let mut s = AgentSession::new(Paragraph::from("文本"));
        s.todo_write(
            false,
            vec![
                todo("t1", TodoStatus::Pending),
                todo("t2", TodoStatus::Pending),
                todo("t3", TodoStatus::Pending),
            ],
        )
        .unwrap();
        assert_eq!(s.todos().len(), 3);
        assert!(s.todos().iter().all(|t| t.status == TodoStatus::Pending));

        // merge updates only t1 and appends t4
        s.todo_write(
            true,
            vec![todo("t1", TodoStatus::Completed), todo("t4", TodoStatus::Pending)],
        )
        .unwrap();
        assert_eq!(s.todos().len(), 4);
        assert_eq!(s.todos()[0].status, TodoStatus::Completed);
        assert_eq!(s.todos()[1].status, TodoStatus::Pending);
        assert_eq!(s.todos()[3].id, "t4");
    }

    #[test]
    fn todo_write_rejects_duplicate_payload_ids() {
        let mut s = AgentSession::new(Paragraph::from("文本"));
        let err = s
            .todo_write(false, vec![todo("t1", TodoStatus::Pending), todo("t1", TodoStatus::Pending)])
            .unwrap_err();
        assert_eq!(err, ToolError::DuplicateIdInPayload("t1".to_owned()));
    }

    #[test]
    fn invalid_status_is_rejected_at_the_tool_boundary() {
        let mut session = AgentSession::new(Paragraph::from("文本"));
        let mut budget = 10;
        let call = RawToolCall {
            id: None,
            name: "todo_write".to_owned(),
            arguments: serde_json::json!({
                "merge": false,
                "todos": [{"id": "t1", "content": "x", "status": "done"}]
            })
            .to_string(),
        };
        let obs = dispatch_tool(&mut session, &empty_searcher(), &mut budget, &call);
        assert!(obs.contains("invalid todo status"));
        assert!(session.todos().is_empty());
    }

    #[test]
    fn verify_rejection_matrix() {
        let mut s = AgentSession::new(Paragraph::from("经查，诊断为尿到炎。复查尿常规。"));
        let result = s.verify(vec![
            Correction::new("不存在", "x"),         // AnchorNotFound
            Correction::new("尿", "溺"),            // AnchorAmbiguous (occurs twice)
            Correction::new("复查", "复查"),         // NoOp
            Correction::new("尿到炎", "尿道炎"),      // accepted
            Correction::new("为尿道炎", "为阴道炎"),  // Overlap with stored span
        ]);
        let outcomes: Vec<&VerifyOutcome> = result.items.iter().map(|i| &i.outcome).collect();
        assert!(matches!(
            outcomes[0],
            VerifyOutcome::Rejected { reason: RejectReason::AnchorNotFound, .. }
        ));
        assert!(matches!(
            outcomes[1],
            VerifyOutcome::Rejected { reason: RejectReason::AnchorAmbiguous, .. }
        ));
        assert!(matches!(
            outcomes[2],
            VerifyOutcome::Rejected { reason: RejectReason::NoOp, .. }
        ));
        assert!(matches!(outcomes[3], VerifyOutcome::Accepted));
        assert!(matches!(
            outcomes[4],
            VerifyOutcome::Rejected { reason: RejectReason::Overlap, .. }
        ));
        assert_eq!(result.stored.len(), 1);
        assert!(result.working_text.contains("尿道炎"));
        // rejection messages are targeted: they name the anchor
        if let VerifyOutcome::Rejected { message, .. } = outcomes[2] {
            assert!(message.contains("复查"));
        }
    }

    #[test]
    fn verify_anchors_against_working_text_not_source() {
        let mut s = AgentSession::new(Paragraph::from("甲乙丙"));
        assert!(matches!(
            s.verify(vec![Correction::new("乙", "乙二")]).items[0].outcome,
            VerifyOutcome::Accepted
        ));
        // "乙二" exists only in the working text
        assert!(matches!(
            s.verify(vec![Correction::new("乙二", "乙三")]).items[0].outcome,
            VerifyOutcome::Rejected { reason: RejectReason::Overlap, .. }
        ));
        // a non-overlapping edit to evolved text works
        assert!(matches!(
            s.verify(vec![Correction::new("丙", "丁")]).items[0].outcome,
            VerifyOutcome::Accepted
        ));
        assert_eq!(s.working_text().as_str(), "甲乙二丁");
    }

    #[test]
    fn store_working_text_coherence_after_every_call() {
        let mut s = AgentSession::new(Paragraph::from("一二三四五六七八"));
        let steps = vec![
            Correction::new("二", "贰"),
            Correction::new("五六", "伍陆"),
            Correction::new("八", "捌"),
        ];
        for c in steps {
            let _ = s.verify(vec![c]);
            // store monotonicity + coherence: applying final_edits to the
            // source reproduces the working text
            let edits = s.final_edits();
            let applied = crate::edit::apply_edits(s.source(), &edits).unwrap();
            assert_eq!(&applied, s.working_text());
        }
        assert_eq!(s.stored().len(), 3);
    }

    fn scripted_session_gateway() -> ScriptedGateway {
        ScriptedGateway::sequence([
            tool_call_response(
                "todo_write",
                serde_json::json!({
                    "merge": false,
                    "todos": [
                        {"id": "t1", "content": "核实罚款上限", "status": "pending"},
                        {"id": "t2", "content": "检查错别字", "status": "pending"}
                    ]
                }),
            ),
            tool_call_response("search_tool", serde_json::json!({"query": "网络安全法 罚款 上限"})),
            tool_call_response(
                "verify_tool",
                serde_json::json!({
                    "corrections": [{"original": "三十万元", "corrected": "五十万元", "reason": "核实"}]
                }),
            ),
            tool_call_response(
                "todo_write",
                serde_json::json!({
                    "merge": true,
                    "todos": [
                        {"id": "t1", "content": "核实罚款上限", "status": "completed"},
                        {"id": "t2", "content": "检查错别字", "status": "completed"}
                    ]
                }),
            ),
            text_response("任务已完成"),
        ])
    }

    #[test]
    fn scripted_five_turn_session() {
        let text = Paragraph::from("处五万元以上三十万元以下罚款。");
        let searcher = Searcher::live(Arc::new(ScriptedSearch::new([(
            "网络安全法 罚款 上限",
            vec![RawSearchResult {
                title: "修正案".into(),
                link: "https://e.cn/law".into(),
                timestamp: "2025-10-28".into(),
                snippet: "罚款上限提高至五十万元".into(),
            }],
        )])));
        let gw = scripted_session_gateway();
        let outcome =
            run_agent(&gw, &searcher, &text, &PromptSet::builtin(), &AgentConfig::default());
        assert_eq!(outcome.status, SessionStatus::Completed);
        assert_eq!(outcome.transcript.len(), 5);
        assert_eq!(outcome.stored.len(), 1);
        assert_eq!(outcome.edits.len(), 1);
        let e = &outcome.edits.edits()[0];
        assert_eq!(e.original, "三");
        assert_eq!(e.replacement, "五");
        assert_eq!(outcome.working_text.as_str(), "处五万元以上五十万元以下罚款。");
        // the system prompt carried the configured time, not wall clock
        assert!(gw.requests()[0].system.contains("2025-01-01 00:00"));
    }

    #[test]
    fn malformed_tool_call_feeds_back_an_error_observation() {
        let text = Paragraph::from("文本甲。");
        let gw = ScriptedGateway::sequence([
            // fenced JSON that wants to be a tool call but lacks the name
            text_response("```json\n{\"corrections\": [{\"original\": \"甲\", \"corrected\": \"乙\"}]}\n```"),
            tool_call_response(
                "verify_tool",
                serde_json::json!({"corrections": [{"original": "甲", "corrected": "乙"}]}),
            ),
            text_response("任务已完成"),
        ]);
        let outcome = run_agent(
            &gw,
            &empty_searcher(),
            &text,
            &PromptSet::builtin(),
            &AgentConfig::default(),
        );
        assert_eq!(outcome.status, SessionStatus::Completed);
        assert_eq!(outcome.transcript.len(), 3);
        assert_eq!(outcome.transcript[0].observations.len(), 1);
        assert!(outcome.transcript[0].observations[0].contains("tool name"));
        assert_eq!(outcome.edits.len(), 1);
    }

    #[test]
    fn max_turns_exhaustion_returns_partial_edits() {
        let text = Paragraph::from("文本甲。");
        let gw = ScriptedGateway::sequence([tool_call_response(
            "todo_write",
            serde_json::json!({"merge": false, "todos": [{"id": "t", "content": "x", "status": "pending"}]}),
        )]);
        let config = AgentConfig { max_turns: 1, ..AgentConfig::default() };
        let outcome =
            run_agent(&gw, &empty_searcher(), &text, &PromptSet::builtin(), &config);
        assert_eq!(outcome.status, SessionStatus::Exhausted);
        assert!(outcome.edits.is_empty());
    }

    #[test]
    fn stopping_with_open_todos_is_incomplete() {
        let text = Paragraph::from("文本甲。");
        let gw = ScriptedGateway::sequence([
            tool_call_response(
                "todo_write",
                serde_json::json!({"merge": false, "todos": [{"id": "t", "content": "x", "status": "pending"}]}),
            ),
            text_response("到此为止"),
        ]);
        let outcome = run_agent(
            &gw,
            &empty_searcher(),
            &text,
            &PromptSet::builtin(),
            &AgentConfig::default(),
        );
        assert_eq!(outcome.status, SessionStatus::Incomplete);
    }

    #[test]
    fn provider_error_aborts_with_stored_edits() {
        let text = Paragraph::from("甲乙丙。");
        let gw = ScriptedGateway::sequence_results([
            Ok(tool_call_response(
                "verify_tool",
                serde_json::json!({"corrections": [{"original": "乙", "corrected": "丁"}]}),
            )),
            Err(ProviderError::Transport("connection reset".into())),
        ]);
        let outcome = run_agent(
            &gw,
            &empty_searcher(),
            &text,
            &PromptSet::builtin(),
            &AgentConfig::default(),
        );
        assert_eq!(outcome.status, SessionStatus::Aborted);
        assert!(outcome.error.is_some());
        assert_eq!(outcome.edits.len(), 1);
    }

    #[test]
    fn search_budget_is_enforced() {
        let text = Paragraph::from("文本甲。");
        let gw = ScriptedGateway::sequence([
            tool_call_response("search_tool", serde_json::json!({"query": "q1"})),
            tool_call_response("search_tool", serde_json::json!({"query": "q2"})),
            text_response("任务已完成"),
        ]);
        let config = AgentConfig { search_budget: 1, ..AgentConfig::default() };
        let outcome =
            run_agent(&gw, &empty_searcher(), &text, &PromptSet::builtin(), &config);
        assert!(outcome.transcript[1].observations[0].contains("search budget exhausted"));
    }

    #[test]
    fn tools_other_than_verify_never_mutate_working_text() {
        let text = Paragraph::from("文本甲。");
        let searcher = Searcher::live(Arc::new(ScriptedSearch::new([(
            "q",
            vec![RawSearchResult::default()],
        )])));
        let gw = ScriptedGateway::sequence([
            tool_call_response(
                "todo_write",
                serde_json::json!({"merge": false, "todos": [{"id": "t", "content": "x", "status": "completed"}]}),
            ),
            tool_call_response("search_tool", serde_json::json!({"query": "q"})),
            text_response("任务已完成"),
        ]);
        let outcome =
            run_agent(&gw, &searcher, &text, &PromptSet::builtin(), &AgentConfig::default());
        assert_eq!(outcome.working_text, text);
        assert!(outcome.edits.is_empty());
        assert_eq!(outcome.status, SessionStatus::Completed);
    }

    #[test]
    fn replay_determinism_same_script_same_outcome() {
        let text = Paragraph::from("处五万元以上三十万元以下罚款。");
        let run = || {
            let gw = scripted_session_gateway();
            let searcher = Searcher::live(Arc::new(ScriptedSearch::new([(
                "网络安全法 罚款 上限",
                vec![RawSearchResult::default()],
            )])));
            let outcome =
                run_agent(&gw, &searcher, &text, &PromptSet::builtin(), &AgentConfig::default());
            (
                outcome.edits,
                outcome.working_text,
                serde_json::to_string(&outcome.transcript).unwrap(),
            )
        };
        assert_eq!(run(), run());
    }
}
