//! Closed-loop property: corpora built by the injector, corrected by a
//! gold-echoing mock through the prompt pipeline, must score perfectly; a
//! silent mock must score zero recall with no false positives.

mod common;

use clfec::corpus::{run_experiment, CorpusRecord, ExperimentProviders, RunManifest, TypeLabelMap};
use clfec::edit::apply_edits;
use clfec::inject::{derive_record_seed, inject_paragraph, InjectorConfig};
use clfec::prompts::PromptSet;
use clfec::providers::{
    text_response, CacheMode, ChatResponse, ScriptedGateway, ScriptedSearch, Searcher,
};
use clfec::score::MaxMatchSegmenter;
use clfec::{Method, Split};
use common::{injection_alphabet, random_text, SyntheticErrorMapGateway};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn build_random_corpus(n: usize, master_seed: u64) -> Vec<CorpusRecord> {
    let gateway = SyntheticErrorMapGateway;
    let prompts = PromptSet::builtin();
    let config = InjectorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let alphabet = injection_alphabet();
    (0..n)
        .map(|i| {
            let split = [Split::Mix, Split::Lec, Split::Fec][i % 3];
            let len = rng.random_range(40..320);
            let clean = random_text(&mut rng, &alphabet, len);
            let id = format!("rec-{i:03}");
            let seed = derive_record_seed(master_seed, &id);
            let (corrupted, gold) =
                inject_paragraph(&gateway, &prompts, &clean, split, seed, &config).unwrap();
            let corrected = apply_edits(&corrupted, &gold).unwrap();
            assert_eq!(corrected, clean);
            CorpusRecord { id, split, input: corrupted, corrected, gold_edits: gold, domain: None }
        })
        .collect()
}

fn gold_echo_responses(records: &[CorpusRecord]) -> Vec<(String, ChatResponse)> {
    records
        .iter()
        .map(|r| {
            let items: Vec<serde_json::Value> = r
                .gold_edits
                .iter()
                .inspect(|e| {
                    // the echoed anchors must be unique, or mapping drops them
                    assert_eq!(r.input.find_all(&e.original).len(), 1, "{}", r.id);
                })
                .map(|e| serde_json::json!({"original": e.original, "corrected": e.replacement}))
                .collect();
            let reply = format!("```json\n{}\n```", serde_json::json!({ "corrections": items }));
            (r.input.as_str().to_owned(), text_response(reply))
        })
        .collect()
}

fn manifest() -> RunManifest {
    RunManifest {
        cache: CacheMode::Record,
        chat_endpoint: Some("unused".to_owned()),
        cache_dir: None,
        ..RunManifest::replay(Method::Prompt, "/unused")
    }
}

#[test]
fn gold_echo_mock_scores_perfectly() {
    let records = build_random_corpus(20, 0xE2E);
    let providers = ExperimentProviders::new(
        Arc::new(ScriptedGateway::keyed(gold_echo_responses(&records))),
        Arc::new(Searcher::live(Arc::new(ScriptedSearch::new(Vec::<(String, _)>::new())))),
    );
    let seg = MaxMatchSegmenter::builtin();
    let output =
        run_experiment(&records, &manifest(), &providers, &PromptSet::builtin(), &seg).unwrap();
    assert!(output.predictions.iter().all(|p| p.error.is_none()));
    assert_eq!(output.report.overall.n, 20);
    assert_eq!(output.report.overall.detection.f1, 1.0);
    assert_eq!(output.report.overall.correction.f1, 1.0);
    for scores in output.report.splits.values() {
        assert_eq!(scores.correction.recall, 1.0);
    }
}

#[test]
fn silent_mock_scores_zero_recall_without_false_positives() {
    let records = build_random_corpus(9, 0xE2F);
    let empty_reply = "```json\n{\"corrections\": []}\n```";
    let responses: Vec<(String, ChatResponse)> = records
        .iter()
        .map(|r| (r.input.as_str().to_owned(), text_response(empty_reply)))
        .collect();
    let providers = ExperimentProviders::new(
        Arc::new(ScriptedGateway::keyed(responses)),
        Arc::new(Searcher::live(Arc::new(ScriptedSearch::new(Vec::<(String, _)>::new())))),
    );
    let seg = MaxMatchSegmenter::builtin();
    let output =
        run_experiment(&records, &manifest(), &providers, &PromptSet::builtin(), &seg).unwrap();
    assert_eq!(output.report.overall.detection.recall, 0.0);
    assert_eq!(output.report.overall.detection.precision, 0.0);
    assert_eq!(output.report.error_free_false_positives, 0);
    assert!(output.report.edit_rates.values().all(|t| t.edits == 0));
}
