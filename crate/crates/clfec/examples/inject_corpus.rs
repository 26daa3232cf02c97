//! Seeded error injection: plan, request an error map from a (scripted)
//! model, corrupt the paragraph and keep the inverse gold edits.
//!
//! ```sh
//! cargo run --example inject_corpus
//! ```

use clfec::edit::{apply_edits, Paragraph};
use clfec::inject::{
    inject_paragraph, plan_injection, InjectorConfig, SubtypeWeights,
};
use clfec::prompts::PromptSet;
use clfec::providers::{text_response, ScriptedGateway};
use clfec::Split;

fn main() {
    let clean = Paragraph::from(
        "根据该决定，网络运营者不履行网络安全保护义务的，由有关主管部门责令改正，\
         给予警告，可以处一万元以上五万元以下罚款；情节严重的，处五万元以上五十万元以下罚款。",
    );
    println!("clean ({} chars): {clean}\n", clean.char_len());

    // The plan fixes the error budget: one linguistic error per 150
    // characters (minimum one) and at most one factual error.
    let plan = plan_injection(&clean, Split::Mix, 42, &SubtypeWeights::default()).unwrap();
    println!("plan: {} linguistic {:?}, factual: {}", plan.linguistic_count, plan.subtypes, plan.inject_fact);

    // A scripted gateway stands in for the error-map model: one reply for the
    // word/punctuation request, one for the factual request.
    let linguistic_reply = serde_json::json!({
        "error_map": [{
            "original_text": "责令改正",
            "error_text": "责令改征",
            "error_type": "同音字词",
            "position_context": "由有关主管部门责令改正，给予警告",
        }]
    });
    let factual_reply = serde_json::json!({
        "error_map": [{
            "original_text": "五十万元以下罚款",
            "error_text": "三十万元以下罚款",
            "error_type": "数量金额错误",
            "position_context": "处五万元以上五十万元以下罚款。",
        }]
    });
    let gateway = ScriptedGateway::sequence([
        text_response(format!("```json\n{linguistic_reply}\n```")),
        text_response(format!("```json\n{factual_reply}\n```")),
    ]);

    let (corrupted, gold) = inject_paragraph(
        &gateway,
        &PromptSet::builtin(),
        &clean,
        Split::Mix,
        42,
        &InjectorConfig::default(),
    )
    .expect("scripted entries localize");

    println!("\ncorrupted: {corrupted}");
    println!("\ngold edits (anchored in the corrupted text):");
    for e in gold.iter() {
        println!("  [{}, {}) {} {:?} -> {:?}", e.start, e.end, e.error_type, e.original, e.replacement);
    }

    // The inverse invariant: applying the gold edits restores the source.
    assert_eq!(apply_edits(&corrupted, &gold).unwrap(), clean);
    println!("\napply_edits(corrupted, gold) == clean source ✓");
}
