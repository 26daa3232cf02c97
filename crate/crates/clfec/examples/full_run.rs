//! End-to-end harness tour: build a corpus, record a cache against scripted
//! providers, rerun offline in replay mode, and render the report. The two
//! runs produce byte-identical artifacts.
//!
//! ```sh
//! cargo run --example full_run
//! ```

use clfec::corpus::{
    build_providers, parse_corpus, persist_run, render_report, run_experiment,
    ExperimentProviders, ReportFormat, RunManifest, TypeLabelMap,
};
use clfec::prompts::PromptSet;
use clfec::providers::{
    text_response, CacheMode, CachedGateway, ExchangeCache, ScriptedGateway, ScriptedSearch,
    Searcher,
};
use clfec::score::MaxMatchSegmenter;
use clfec::Method;
use std::sync::Arc;

fn corrections(pairs: &[(&str, &str)]) -> String {
    let items: Vec<serde_json::Value> = pairs
        .iter()
        .map(|(o, c)| serde_json::json!({"original": o, "corrected": c}))
        .collect();
    format!("```json\n{}\n```", serde_json::json!({ "corrections": items }))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let cache_dir = dir.path().join("cache");

    let corpus_jsonl = [
        serde_json::json!({
            "id": "law-1", "type": "MIX",
            "input": "处五万元以上三十万元以下罚款，责令改征。",
            "corrected": "处五万元以上五十万元以下罚款，责令改正。",
            "cors": [
                {"span": [6, 7], "type": "Fact_Error", "original": "三", "corrected": "五"},
                {"span": [18, 19], "type": "Word_Error", "original": "征", "corrected": "正"},
            ],
        }),
        serde_json::json!({
            "id": "med-1", "type": "LEC",
            "input": "诊断为尿到炎。", "corrected": "诊断为尿道炎。",
            "cors": [{"span": [4, 5], "type": "Word_Error", "original": "到", "corrected": "道"}],
        }),
        serde_json::json!({
            "id": "clean-1", "type": "ErrorFree",
            "input": "干净的段落。", "corrected": "干净的段落。", "cors": [],
        }),
    ]
    .iter()
    .map(|l| l.to_string() + "\n")
    .collect::<String>();
    let records = parse_corpus(&corpus_jsonl, &TypeLabelMap::default()).unwrap();

    let mut manifest = RunManifest::replay(Method::Prompt, &cache_dir);
    manifest.model = "demo-model".to_owned();
    manifest.current_time = "2025-11-20 10:00".to_owned();

    // Pass 1: record. The scripted gateway plays the correction model; every
    // exchange lands in the cache.
    let cache = Arc::new(ExchangeCache::new(&cache_dir, CacheMode::Record).unwrap());
    let scripted = ScriptedGateway::keyed([
        ("三十万元以下罚款", text_response(corrections(&[("三", "五"), ("征", "正")]))),
        ("尿到炎", text_response(corrections(&[("到", "道")]))),
        ("干净的段落", text_response(corrections(&[]))),
    ]);
    let providers = ExperimentProviders::new(
        Arc::new(CachedGateway::recording(Arc::new(scripted), Arc::clone(&cache))),
        Arc::new(Searcher::cached(
            Arc::new(ScriptedSearch::new(Vec::<(String, _)>::new())),
            cache,
        )),
    );
    let segmenter = MaxMatchSegmenter::builtin();
    let prompts = PromptSet::builtin();
    let recorded = run_experiment(&records, &manifest, &providers, &prompts, &segmenter).unwrap();
    persist_run(dir.path().join("run-record"), &recorded, &TypeLabelMap::default()).unwrap();

    // Pass 2: replay. Providers come straight from the manifest; no scripted
    // gateway, no network, same bytes.
    let replay_providers = build_providers(&manifest).unwrap();
    let replayed =
        run_experiment(&records, &manifest, &replay_providers, &prompts, &segmenter).unwrap();
    persist_run(dir.path().join("run-replay"), &replayed, &TypeLabelMap::default()).unwrap();

    for name in ["predictions.jsonl", "report.json", "report.txt"] {
        let a = std::fs::read(dir.path().join("run-record").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("run-replay").join(name)).unwrap();
        assert_eq!(a, b, "{name} must be byte-identical");
    }
    println!("record and replay runs are byte-identical ✓\n");
    println!("{}", render_report(&replayed.report, ReportFormat::Plain));
}
