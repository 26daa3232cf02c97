//! Experiment runner: manifest-driven method dispatch, record-parallel
//! execution, scoring and deterministic persistence.

use super::{edits_from_wire, edits_to_wire, CorWire, CorpusRecord, TypeLabelMap};
use crate::agent::{run_agent, AgentConfig, SessionStatus};
use crate::edit::{validate_edits, EditSet};
use crate::pipeline::{run_prompt, run_srag, run_urag, PipelineConfig};
use crate::prompts::PromptSet;
use crate::providers::{
    CacheMode, CachedGateway, ChatGateway, EmptySearchProvider, ExchangeCache, HttpChatGateway,
    HttpGatewayConfig, HttpSearchProvider, Limiter, ProviderError, SearchProvider, Searcher,
};
use crate::score::{ReportBuilder, ScoreError, ScoreReport, Segmenter};
use crate::Method;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

/// Everything that determines a run given a frozen cache. API keys stay in
/// environment variables; the manifest only names them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub method: Method,
    pub model: String,
    #[serde(default)]
    pub chat_endpoint: Option<String>,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_search_provider")]
    pub search_provider: String,
    #[serde(default)]
    pub search_endpoint: Option<String>,
    #[serde(default = "default_query_param")]
    pub search_query_param: String,
    #[serde(default)]
    pub search_api_key_env: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub cache: CacheMode,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    pub current_time: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_queries")]
    pub max_queries: usize,
    #[serde(default = "default_max_turns")]
    pub max_turns: usize,
    #[serde(default = "default_search_budget")]
    pub search_budget: usize,
    #[serde(default = "default_max_parallel")]
    pub max_parallel: usize,
    /// When present, verified against the loaded prompt set before a run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_hashes: Option<BTreeMap<String, String>>,
}

fn default_api_key_env() -> String {
    "CLFEC_API_KEY".to_owned()
}
fn default_search_provider() -> String {
    "search".to_owned()
}
fn default_query_param() -> String {
    "q".to_owned()
}
fn default_temperature() -> f64 {
    crate::providers::DEFAULT_TEMPERATURE
}
fn default_max_queries() -> usize {
    3
}
fn default_max_turns() -> usize {
    32
}
fn default_search_budget() -> usize {
    10
}
fn default_max_parallel() -> usize {
    4
}

impl RunManifest {
    /// A replay-mode manifest with the given method and cache directory.
    pub fn replay(method: Method, cache_dir: impl Into<PathBuf>) -> Self {
        RunManifest {
            method,
            model: "default".to_owned(),
            chat_endpoint: None,
            api_key_env: default_api_key_env(),
            search_provider: default_search_provider(),
            search_endpoint: None,
            search_query_param: default_query_param(),
            search_api_key_env: None,
            seed: 0,
            cache: CacheMode::Replay,
            cache_dir: Some(cache_dir.into()),
            current_time: "2025-01-01 00:00".to_owned(),
            temperature: default_temperature(),
            max_queries: default_max_queries(),
            max_turns: default_max_turns(),
            search_budget: default_search_budget(),
            max_parallel: default_max_parallel(),
            prompt_hashes: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RunError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            method: self.method,
            model: self.model.clone(),
            temperature: self.temperature,
            max_queries: self.max_queries,
            current_time: self.current_time.clone(),
            resolve_ambiguous_to_first: false,
        }
    }

    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            model: self.model.clone(),
            temperature: self.temperature,
            current_time: self.current_time.clone(),
            max_turns: self.max_turns,
            search_budget: self.search_budget,
        }
    }

    /// Fails when the manifest pins prompt hashes and the loaded set differs.
    pub fn verify_prompts(&self, prompts: &PromptSet) -> Result<(), RunError> {
        if let Some(expected) = &self.prompt_hashes {
            let actual = prompts.hashes();
            if *expected != actual {
                return Err(RunError::Manifest(
                    "prompt assets do not match the manifest's prompt_hashes".to_owned(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// The gateway/searcher pair a run executes against.
pub struct ExperimentProviders {
    pub gateway: Arc<dyn ChatGateway>,
    pub searcher: Arc<Searcher>,
}

impl ExperimentProviders {
    pub fn new(gateway: Arc<dyn ChatGateway>, searcher: Arc<Searcher>) -> Self {
        ExperimentProviders { gateway, searcher }
    }
}

/// Builds providers from the manifest: replay mode needs only the cache;
/// record mode wraps live clients in the recording cache.
pub fn build_providers(manifest: &RunManifest) -> Result<ExperimentProviders, RunError> {
    match manifest.cache {
        CacheMode::Replay => {
            let dir = manifest.cache_dir.as_ref().ok_or_else(|| {
                RunError::Manifest("replay mode requires cache_dir".to_owned())
            })?;
            let cache = Arc::new(ExchangeCache::new(dir, CacheMode::Replay)?);
            Ok(ExperimentProviders {
                gateway: Arc::new(CachedGateway::replay(Arc::clone(&cache))),
                searcher: Arc::new(Searcher::replay(manifest.search_provider.clone(), cache)),
            })
        }
        CacheMode::Record => {
            let endpoint = manifest.chat_endpoint.clone().ok_or_else(|| {
                RunError::Manifest("record mode requires chat_endpoint".to_owned())
            })?;
            let limiter = Arc::new(Limiter::new(manifest.max_parallel.max(1)));
            let live = Arc::new(
                HttpChatGateway::new(HttpGatewayConfig {
                    endpoint,
                    api_key_env: manifest.api_key_env.clone(),
                    ..HttpGatewayConfig::default()
                })?
                .with_limiter(limiter),
            );
            let provider: Arc<dyn SearchProvider> = match &manifest.search_endpoint {
                Some(endpoint) => Arc::new(HttpSearchProvider::new(
                    manifest.search_provider.clone(),
                    endpoint.clone(),
                    manifest.search_query_param.clone(),
                    manifest.search_api_key_env.clone(),
                )?),
                None => Arc::new(EmptySearchProvider::new(manifest.search_provider.clone())),
            };
            match &manifest.cache_dir {
                Some(dir) => {
                    let cache = Arc::new(ExchangeCache::new(dir, CacheMode::Record)?);
                    Ok(ExperimentProviders {
                        gateway: Arc::new(CachedGateway::recording(live, Arc::clone(&cache))),
                        searcher: Arc::new(Searcher::cached(provider, cache)),
                    })
                }
                None => Ok(ExperimentProviders {
                    gateway: live,
                    searcher: Arc::new(Searcher::live(provider)),
                }),
            }
        }
    }
}

/// One record's prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub id: String,
    pub edits: EditSet,
    /// Per-record failure, when the method errored; the record scores as an
    /// empty prediction.
    pub error: Option<String>,
    /// Serialized trace (pipeline stages or agent transcript).
    pub trace: Option<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionWire {
    id: String,
    cors: Vec<CorWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
}

pub struct RunOutput {
    pub predictions: Vec<PredictionRecord>,
    pub report: ScoreReport,
}

fn predict_one(
    record: &CorpusRecord,
    manifest: &RunManifest,
    providers: &ExperimentProviders,
    prompts: &PromptSet,
) -> PredictionRecord {
    let gateway = providers.gateway.as_ref();
    let config = manifest.pipeline_config();
    let text = &record.input;
    let outcome = match manifest.method {
        Method::Prompt => run_prompt(gateway, text, &config, prompts)
            .map(|(edits, trace)| (edits, serde_json::to_value(trace).ok())),
        Method::Urag => run_urag(gateway, &providers.searcher, text, &config, prompts)
            .map(|(edits, trace)| (edits, serde_json::to_value(trace).ok())),
        Method::Srag => run_srag(gateway, &providers.searcher, text, &config, prompts)
            .map(|(edits, trace)| (edits, serde_json::to_value(trace).ok())),
        Method::Agent => {
            let outcome =
                run_agent(gateway, &providers.searcher, text, prompts, &manifest.agent_config());
            let trace = serde_json::json!({
                "status": outcome.status,
                "transcript": outcome.transcript,
            });
            match outcome.status {
                SessionStatus::Aborted => {
                    let message = outcome
                        .error
                        .map(|e| e.to_string())
                        .unwrap_or_else(|| "aborted".to_owned());
                    return PredictionRecord {
                        id: record.id.clone(),
                        edits: outcome.edits,
                        error: Some(message),
                        trace: Some(trace),
                    };
                }
                _ => Ok((outcome.edits, Some(trace))),
            }
        }
    };
    match outcome {
        Ok((edits, trace)) => PredictionRecord { id: record.id.clone(), edits, error: None, trace },
        Err(e) => PredictionRecord {
            id: record.id.clone(),
            edits: EditSet::empty(),
            error: Some(e.to_string()),
            trace: None,
        },
    }
}

/// Scores predictions against gold. Missing or source-invalid predictions
/// score as empty sets (counting toward false negatives) and are noted.
pub fn score_records(
    records: &[CorpusRecord],
    predictions: &[PredictionRecord],
    segmenter: &dyn Segmenter,
) -> Result<(ScoreReport, Vec<String>), ScoreError> {
    let by_id: BTreeMap<&str, &PredictionRecord> =
        predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    let empty = EditSet::empty();
    let mut builder = ReportBuilder::new();
    let mut notes = Vec::new();
    for record in records {
        let pred = match by_id.get(record.id.as_str()) {
            Some(p) => {
                if let Some(e) = &p.error {
                    notes.push(format!("{}: scored as empty ({e})", record.id));
                }
                if validate_edits(&record.input, &p.edits).is_empty() {
                    &p.edits
                } else {
                    notes.push(format!(
                        "{}: predicted edits do not match the input; scored as empty",
                        record.id
                    ));
                    &empty
                }
            }
            None => {
                notes.push(format!("{}: no prediction; scored as empty", record.id));
                &empty
            }
        };
        builder.add_sample(record.split, &record.gold_edits, pred, &record.input, segmenter)?;
    }
    Ok((builder.finish(), notes))
}

/// Runs the manifest's method over every record with a bounded worker pool,
/// then scores. Per-record failures never abort the run; output order is by
/// record id.
pub fn run_experiment(
    records: &[CorpusRecord],
    manifest: &RunManifest,
    providers: &ExperimentProviders,
    prompts: &PromptSet,
    segmenter: &dyn Segmenter,
) -> Result<RunOutput, RunError> {
    manifest.verify_prompts(prompts)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.max_parallel.max(1))
        .build()
        .map_err(|e| RunError::Manifest(format!("worker pool: {e}")))?;
    let mut predictions: Vec<PredictionRecord> = pool.install(|| {
        use rayon::prelude::*;
        records.par_iter().map(|r| predict_one(r, manifest, providers, prompts)).collect()
    });
    predictions.sort_by(|a, b| a.id.cmp(&b.id));
    let mut sorted_records: Vec<&CorpusRecord> = records.iter().collect();
    sorted_records.sort_by(|a, b| a.id.cmp(&b.id));
    let sorted_owned: Vec<CorpusRecord> = sorted_records.into_iter().cloned().collect();
    let (report, _notes) = score_records(&sorted_owned, &predictions, segmenter)?;
    Ok(RunOutput { predictions, report })
}

fn trace_file_name(index: usize, id: &str) -> String {
    let safe: String =
        id.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    format!("{index:04}_{safe}.json")
}

/// Writes `predictions.jsonl`, `report.json`, `report.txt` and one trace file
/// per record under `traces/`. Byte-deterministic for a fixed run output.
pub fn persist_run(
    dir: impl AsRef<Path>,
    output: &RunOutput,
    labels: &TypeLabelMap,
) -> Result<(), RunError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir.join("traces"))?;
    let mut predictions = String::new();
    for (i, p) in output.predictions.iter().enumerate() {
        let trace_ref = match &p.trace {
            Some(trace) => {
                let name = trace_file_name(i, &p.id);
                std::fs::write(
                    dir.join("traces").join(&name),
                    serde_json::to_string_pretty(trace)? + "\n",
                )?;
                Some(format!("traces/{name}"))
            }
            None => None,
        };
        let wire = PredictionWire {
            id: p.id.clone(),
            cors: edits_to_wire(&p.edits, labels),
            error: p.error.clone(),
            trace: trace_ref,
        };
        predictions.push_str(&serde_json::to_string(&wire)?);
        predictions.push('\n');
    }
    std::fs::write(dir.join("predictions.jsonl"), predictions)?;
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&output.report)? + "\n",
    )?;
    std::fs::write(
        dir.join("report.txt"),
        super::render_report(&output.report, super::ReportFormat::Plain),
    )?;
    Ok(())
}

/// Reloads a predictions file written by [`persist_run`].
pub fn load_predictions(
    path: impl AsRef<Path>,
    labels: &TypeLabelMap,
) -> Result<Vec<PredictionRecord>, RunError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let wire: PredictionWire = serde_json::from_str(line)?;
        out.push(PredictionRecord {
            id: wire.id,
            edits: edits_from_wire(&wire.cors, labels),
            error: wire.error,
            trace: wire.trace.map(serde_json::Value::String),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;
    use crate::providers::scripted::{text_response, ScriptedGateway};
    use crate::providers::ScriptedSearch;
    use crate::score::MaxMatchSegmenter;
    use crate::Split;

    fn corrections_json(pairs: &[(&str, &str)]) -> String {
        let items: Vec<serde_json::Value> = pairs
            .iter()
            .map(|(o, c)| serde_json::json!({"original": o, "corrected": c}))
            .collect();
        format!("```json\n{}\n```", serde_json::json!({ "corrections": items }))
    }

    fn tiny_corpus() -> Vec<CorpusRecord> {
        let lines = vec![
            serde_json::json!({
                "id": "b-lec", "type": "LEC",
                "input": "反溃控制很重要。", "corrected": "反馈控制很重要。",
                "cors": [{"span": [1, 2], "type": "Word_Error", "original": "溃", "corrected": "馈"}],
            }),
            serde_json::json!({
                "id": "a-fec", "type": "FEC",
                "input": "六中全会召开了。", "corrected": "四中全会召开了。",
                "cors": [{"span": [0, 1], "type": "Fact_Error", "original": "六", "corrected": "四"}],
            }),
            serde_json::json!({
                "id": "c-free", "type": "ErrorFree",
                "input": "干净的文本。", "corrected": "干净的文本。", "cors": [],
            }),
        ];
        let text: String = lines.into_iter().map(|l| l.to_string() + "\n").collect();
        parse_corpus(&text, &TypeLabelMap::default()).unwrap()
    }

    fn scripted_providers() -> ExperimentProviders {
        let gateway = ScriptedGateway::keyed([
            ("反溃控制", text_response(corrections_json(&[("溃", "馈")]))),
            ("六中全会", text_response(corrections_json(&[("六", "四")]))),
            ("干净的文本", text_response(corrections_json(&[]))),
        ]);
        ExperimentProviders::new(
            Arc::new(gateway),
            Arc::new(Searcher::live(Arc::new(ScriptedSearch::new(Vec::<(String, _)>::new())))),
        )
    }

    fn manifest() -> RunManifest {
        RunManifest {
            cache: CacheMode::Record,
            chat_endpoint: Some("unused".to_owned()),
            cache_dir: None,
            ..RunManifest::replay(Method::Prompt, "/nonexistent")
        }
    }

    #[test]
    fn perfect_mocks_score_perfectly() {
        let records = tiny_corpus();
        let seg = MaxMatchSegmenter::builtin();
        let output =
            run_experiment(&records, &manifest(), &scripted_providers(), &PromptSet::builtin(), &seg)
                .unwrap();
        assert_eq!(output.report.overall.correction.f1, 1.0);
        assert_eq!(output.report.overall.detection.recall, 1.0);
        assert_eq!(output.report.error_free_false_positives, 0);
        // deterministic ordering by id
        let ids: Vec<&str> = output.predictions.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, vec!["a-fec", "b-lec", "c-free"]);
    }

    #[test]
    fn empty_mocks_score_zero_without_false_positives() {
        let records = tiny_corpus();
        let gateway = ScriptedGateway::keyed([
            ("反溃控制", text_response(corrections_json(&[]))),
            ("六中全会", text_response(corrections_json(&[]))),
            ("干净的文本", text_response(corrections_json(&[]))),
        ]);
        let providers = ExperimentProviders::new(
            Arc::new(gateway),
            Arc::new(Searcher::live(Arc::new(ScriptedSearch::new(Vec::<(String, _)>::new())))),
        );
        let seg = MaxMatchSegmenter::builtin();
        let output =
            run_experiment(&records, &manifest(), &providers, &PromptSet::builtin(), &seg).unwrap();
        assert_eq!(output.report.overall.correction.precision, 0.0);
        assert_eq!(output.report.overall.correction.recall, 0.0);
        assert_eq!(output.report.error_free_false_positives, 0);
        assert_eq!(output.report.splits[&Split::Lec].detection.recall, 0.0);
    }

    #[test]
    fn per_record_failures_do_not_abort() {
        let records = tiny_corpus();
        // only two of three records have scripted responses
        let gateway = ScriptedGateway::keyed([
            ("反溃控制", text_response(corrections_json(&[("溃", "馈")]))),
            ("干净的文本", text_response(corrections_json(&[]))),
        ]);
        let providers = ExperimentProviders::new(
            Arc::new(gateway),
            Arc::new(Searcher::live(Arc::new(ScriptedSearch::new(Vec::<(String, _)>::new())))),
        );
        let seg = MaxMatchSegmenter::builtin();
        let output =
            run_experiment(&records, &manifest(), &providers, &PromptSet::builtin(), &seg).unwrap();
        let failed = output.predictions.iter().find(|p| p.id == "a-fec").unwrap();
        assert!(failed.error.is_some());
        assert!(failed.edits.is_empty());
        // the LEC record still scored
        assert_eq!(output.report.splits[&Split::Lec].correction.recall, 1.0);
        assert_eq!(output.report.splits[&Split::Fec].correction.recall, 0.0);
    }

    #[test]
    fn agent_method_runs_through_the_experiment() {
        use crate::providers::tool_call_response;

        let line = serde_json::json!({
            "id": "law-1", "type": "FEC",
            "input": "处五万元以上三十万元以下罚款。",
            "corrected": "处五万元以上五十万元以下罚款。",
            "cors": [{"span": [6, 7], "type": "Fact_Error", "original": "三", "corrected": "五"}],
        })
        .to_string();
        let records = parse_corpus(&line, &TypeLabelMap::default()).unwrap();

        let gateway = ScriptedGateway::sequence([
            tool_call_response(
                "verify_tool",
                serde_json::json!({"corrections": [{"original": "三十万元", "corrected": "五十万元"}]}),
            ),
            text_response("任务已完成"),
        ]);
        let providers = ExperimentProviders::new(
            Arc::new(gateway),
            Arc::new(Searcher::live(Arc::new(ScriptedSearch::new(Vec::<(String, _)>::new())))),
        );
        let mut m = manifest();
        m.method = Method::Agent;
        m.max_parallel = 1;
        let seg = MaxMatchSegmenter::builtin();
        let output =
            run_experiment(&records, &m, &providers, &PromptSet::builtin(), &seg).unwrap();
        assert!(output.predictions[0].error.is_none());
        assert_eq!(output.predictions[0].edits.len(), 1);
        assert_eq!(output.report.overall.correction.f1, 1.0);
        // the persisted trace carries the transcript
        let trace = output.predictions[0].trace.as_ref().unwrap();
        assert!(trace.get("transcript").is_some());
    }

    #[test]
    fn persisted_predictions_round_trip() {
        let records = tiny_corpus();
        let seg = MaxMatchSegmenter::builtin();
        let output =
            run_experiment(&records, &manifest(), &scripted_providers(), &PromptSet::builtin(), &seg)
                .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let labels = TypeLabelMap::default();
        persist_run(dir.path(), &output, &labels).unwrap();
        let reloaded = load_predictions(dir.path().join("predictions.jsonl"), &labels).unwrap();
        assert_eq!(reloaded.len(), output.predictions.len());
        for (a, b) in reloaded.iter().zip(output.predictions.iter()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.edits, b.edits);
        }
        assert!(dir.path().join("report.json").exists());
        assert!(dir.path().join("report.txt").exists());
    }

    #[test]
    fn manifest_round_trips_and_verifies_prompts() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = manifest();
        m.prompt_hashes = Some(PromptSet::builtin().hashes());
        let path = dir.path().join("manifest.json");
        m.save(&path).unwrap();
        let loaded = RunManifest::load(&path).unwrap();
        assert_eq!(loaded.method, Method::Prompt);
        loaded.verify_prompts(&PromptSet::builtin()).unwrap();

        let mut other = PromptSet::builtin();
        other.unified.push('x');
        assert!(loaded.verify_prompts(&other).is_err());
    }

    #[test]
    fn replay_providers_require_cache_dir() {
        let mut m = RunManifest::replay(Method::Prompt, "/tmp/somewhere");
        m.cache_dir = None;
        assert!(matches!(build_providers(&m), Err(RunError::Manifest(_))));
    }
}
