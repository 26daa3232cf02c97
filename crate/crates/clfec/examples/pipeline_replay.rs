//! The three non-agentic methods on scripted transcripts: prompt-only,
//! unified RAG and sequential RAG, including the sequential pipeline's
//! anchor-misalignment failure mode.
//!
//! ```sh
//! cargo run --example pipeline_replay
//! ```

use clfec::edit::Paragraph;
use clfec::pipeline::{run_prompt, run_srag, run_urag, PipelineConfig, PipelineTrace};
use clfec::prompts::PromptSet;
use clfec::providers::{
    text_response, RawSearchResult, ScriptedGateway, ScriptedSearch, Searcher,
};
use clfec::Method;
use std::sync::Arc;

fn corrections(pairs: &[(&str, &str)]) -> String {
    let items: Vec<serde_json::Value> = pairs
        .iter()
        .map(|(o, c)| serde_json::json!({"original": o, "corrected": c, "reason": "演示"}))
        .collect();
    format!("```json\n{}\n```", serde_json::json!({ "corrections": items }))
}

fn print_outcome(name: &str, edits: &clfec::EditSet, trace: &PipelineTrace) {
    println!("== {name} ==");
    for stage in &trace.stages {
        println!(
            "  stage {:12} corrections {} -> edits {} (+{} diagnostics), {} evidence",
            stage.stage,
            stage.corrections.len(),
            stage.edits.len(),
            stage.diagnostics.len(),
            stage.evidence.len(),
        );
        for d in &stage.diagnostics {
            println!("    dropped {:?}: {:?}", d.correction.original, d.kind);
        }
    }
    for e in edits.iter() {
        println!("  edit [{}, {}) {:?} -> {:?}", e.start, e.end, e.original, e.replacement);
    }
    println!();
}

fn main() {
    let text = Paragraph::from("会议于2020年召开，诊断为尿到炎。");
    let prompts = PromptSet::builtin();

    // Prompt-only: one call with the unified proofreading prompt.
    let gateway = ScriptedGateway::sequence([text_response(corrections(&[("尿到炎", "尿道炎")]))]);
    let (edits, trace) =
        run_prompt(&gateway, &text, &PipelineConfig::for_method(Method::Prompt), &prompts).unwrap();
    print_outcome("prompt", &edits, &trace);

    // Unified RAG: query extraction, retrieval, one correction pass with the
    // evidence block appended.
    let gateway = ScriptedGateway::sequence([
        text_response(serde_json::json!({"queries": ["会议 召开 年份"]}).to_string()),
        text_response(corrections(&[("2020年", "2019年"), ("尿到炎", "尿道炎")])),
    ]);
    let searcher = Searcher::live(Arc::new(ScriptedSearch::new([(
        "会议 召开 年份",
        vec![RawSearchResult {
            title: "会议纪要".into(),
            link: "https://example.cn/meeting".into(),
            timestamp: "2025-03-01".into(),
            snippet: "该会议实际于2019年召开。".into(),
        }],
    )])));
    let (edits, trace) =
        run_urag(&gateway, &searcher, &text, &PipelineConfig::for_method(Method::Urag), &prompts)
            .unwrap();
    print_outcome("u-rag", &edits, &trace);

    // Sequential RAG: the linguistic pass rewrites 尿到炎 first, so a stage-2
    // correction still anchored at the old spelling drops out.
    let gateway = ScriptedGateway::sequence([
        text_response(corrections(&[("尿到炎", "尿道炎")])),
        text_response(serde_json::json!({"queries": []}).to_string()),
        text_response(corrections(&[("尿到炎", "阴道炎")])),
    ]);
    let empty_search = Searcher::live(Arc::new(ScriptedSearch::new(Vec::<(String, _)>::new())));
    let (edits, trace) = run_srag(
        &gateway,
        &empty_search,
        &text,
        &PipelineConfig::for_method(Method::Srag),
        &prompts,
    )
    .unwrap();
    print_outcome("s-rag (misalignment)", &edits, &trace);
}
