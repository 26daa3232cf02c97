//! Word-level strict-match scoring: segmentation, projection, P/R/F1.
//!
//! ```sh
//! cargo run --example segment_and_score
//! ```

use clfec::edit::{EditOperation, EditSet, ErrorType, Paragraph};
use clfec::score::{
    aggregate, edit_rate, recall_by_type, score_sample, segment, Lexicon, MaxMatchSegmenter,
};

fn main() {
    let lexicon = Lexicon::new(["网络安全", "网络", "安全", "运营者", "罚款"]);
    let text = Paragraph::from("网络安全法要求运营者整改，否则罚款。");

    println!("tokens:");
    for t in segment(text.as_str(), &lexicon) {
        println!("  [{:>2}, {:>2}) {}", t.start, t.end, t.surface);
    }

    // Gold says two fixes; the prediction finds one of them exactly and
    // proposes a spurious one elsewhere.
    let gold = EditSet::new(vec![
        EditOperation::new(7, 10, "运营者", "运营商", ErrorType::Word),
        EditOperation::new(12, 13, "，", "；", ErrorType::Punctuation),
    ]);
    let pred = EditSet::new(vec![
        EditOperation::new(7, 10, "运营者", "运营商", ErrorType::Unknown),
        EditOperation::new(15, 17, "罚款", "处罚", ErrorType::Unknown),
    ]);

    let segmenter = MaxMatchSegmenter::new(lexicon);
    let counts = score_sample(&gold, &pred, &text, &segmenter).expect("both sets are valid");
    println!("\ncounts: {counts:?}");

    let (detection, correction) = aggregate([counts]);
    println!(
        "detection  P {:.2}%  R {:.2}%  F1 {:.2}%",
        100.0 * detection.precision,
        100.0 * detection.recall,
        100.0 * detection.f1
    );
    println!(
        "correction P {:.2}%  R {:.2}%  F1 {:.2}%",
        100.0 * correction.precision,
        100.0 * correction.recall,
        100.0 * correction.f1
    );

    println!("\nrecall by gold error type:");
    for (ty, tally) in recall_by_type(&gold, &pred, &text, &segmenter).unwrap() {
        println!("  {ty}: {}/{}", tally.recalled, tally.total);
    }
    println!(
        "prediction edit rate: {:.2} edits per 100 characters",
        edit_rate(&pred, &text).unwrap()
    );
}
