//! BM25 rerank and evidence shaping: top-3 snippets, 512 code points each.
//!
//! ```sh
//! cargo run --example search_rerank
//! ```

use clfec::pipeline::format_evidence_block;
use clfec::providers::{bm25_rerank, RawSearchResult, DEFAULT_B, DEFAULT_K1};

fn main() {
    let query = "网络安全法 罚款 上限";
    let candidates = vec![
        RawSearchResult {
            title: "体育新闻".into(),
            link: "https://example.cn/sports".into(),
            timestamp: "2025-10-01".into(),
            snippet: "昨晚的比赛结果与罚款无关，球队表现出色。".into(),
        },
        RawSearchResult {
            title: "网络安全法修正案".into(),
            link: "https://example.cn/law-amendment".into(),
            timestamp: "2025-10-28".into(),
            snippet: "修正后的网络安全法将罚款上限提高至五十万元，并明确了运营者义务。".into(),
        },
        RawSearchResult {
            title: "评论：处罚力度".into(),
            link: "https://example.cn/comment".into(),
            timestamp: "2025-11-02".into(),
            snippet: "专家认为罚款上限调整反映监管趋严。".repeat(40),
        },
        RawSearchResult {
            title: "菜谱大全".into(),
            link: "https://example.cn/food".into(),
            timestamp: "2024-01-01".into(),
            snippet: "今天教大家做一道家常菜。".into(),
        },
        RawSearchResult {
            title: "网络安全宣传周".into(),
            link: "https://example.cn/week".into(),
            timestamp: "2025-09-10".into(),
            snippet: "网络安全宣传活动在各地展开。".into(),
        },
    ];

    let evidence = bm25_rerank(query, &candidates, DEFAULT_K1, DEFAULT_B);
    println!("query: {query}");
    println!("candidates in: {}, evidence out: {}\n", candidates.len(), evidence.len());
    for e in &evidence {
        println!("- {} ({} chars of snippet)", e.title, e.snippet.chars().count());
    }
    assert!(evidence.len() <= 3);
    assert!(evidence.iter().all(|e| e.snippet.chars().count() <= 512));

    println!("\nevidence block as sent to correction prompts:\n");
    println!("{}", format_evidence_block(&evidence));
}
