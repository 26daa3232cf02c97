//! A scripted plan-and-execute agent session: todo planning, one search, a
//! verified correction, completion.
//!
//! ```sh
//! cargo run --example agent_replay
//! ```

use clfec::agent::{run_agent, AgentConfig, AgentSession};
use clfec::edit::Paragraph;
use clfec::prompts::PromptSet;
use clfec::providers::{
    text_response, tool_call_response, Correction, RawSearchResult, ScriptedGateway,
    ScriptedSearch, Searcher,
};
use std::sync::Arc;

fn main() {
    let text = Paragraph::from("依据网络安全法，处五万元以上三十万元以下罚款。");

    // The verify tool is deterministic and can be used directly: anchors must
    // occur exactly once in the current working text.
    let mut session = AgentSession::new(text.clone());
    let result = session.verify(vec![
        Correction::new("三十万元", "五十万元"),
        Correction::new("不存在的片段", "x"),
        Correction::new("罚款", "罚款"),
    ]);
    println!("direct verify_tool outcomes:");
    for item in &result.items {
        println!("  {:?} -> {:?}", item.correction.original, item.outcome);
    }
    println!("working text now: {}\n", result.working_text);

    // A full scripted session: plan, search, verify, close todos, finish.
    let gateway = ScriptedGateway::sequence([
        tool_call_response(
            "todo_write",
            serde_json::json!({"merge": false, "todos": [
                {"id": "t1", "content": "核实罚款上限数额", "status": "pending"},
                {"id": "t2", "content": "语言学扫描全文", "status": "pending"},
            ]}),
        ),
        tool_call_response("search_tool", serde_json::json!({"query": "网络安全法 罚款 上限"})),
        tool_call_response(
            "verify_tool",
            serde_json::json!({"corrections": [
                {"original": "三十万元", "corrected": "五十万元", "reason": "对齐修正案"}
            ]}),
        ),
        tool_call_response(
            "todo_write",
            serde_json::json!({"merge": true, "todos": [
                {"id": "t1", "content": "核实罚款上限数额", "status": "completed"},
                {"id": "t2", "content": "语言学扫描全文", "status": "completed"},
            ]}),
        ),
        text_response("任务已完成"),
    ]);
    let searcher = Searcher::live(Arc::new(ScriptedSearch::new([(
        "网络安全法 罚款 上限",
        vec![RawSearchResult {
            title: "修正案要点".into(),
            link: "https://example.cn/law".into(),
            timestamp: "2025-10-28".into(),
            snippet: "罚款上限由三十万元提高至五十万元。".into(),
        }],
    )])));

    let outcome = run_agent(&gateway, &searcher, &text, &PromptSet::builtin(), &AgentConfig::default());
    println!("session status: {:?}", outcome.status);
    for record in &outcome.transcript {
        let tools: Vec<&str> = record.tool_calls.iter().map(|c| c.name.as_str()).collect();
        println!("  turn {}: tools {:?}, observations {}", record.turn, tools, record.observations.len());
    }
    println!("\nstored corrections: {:?}", outcome.stored.len());
    println!("final working text: {}", outcome.working_text);
    println!("final source-anchored edits:");
    for e in outcome.edits.iter() {
        println!("  [{}, {}) {:?} -> {:?}", e.start, e.end, e.original, e.replacement);
    }
}
