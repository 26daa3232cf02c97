//! Span-edit algebra: validating, applying and extracting edit sets.
//!
//! ```sh
//! cargo run --example edit_algebra
//! ```

use clfec::edit::{
    apply_edits, extract_edits, validate_edits, EditOperation, EditSet, ErrorType, Paragraph,
};

fn main() {
    // A corrupted sentence and its gold edits. Offsets count Unicode scalar
    // values, never bytes.
    let input = Paragraph::from("第五十九条规定，处五万元以上三十万元以下罚款”");
    let gold = EditSet::new(vec![
        EditOperation::new(14, 18, "三十万元", "五十万元", ErrorType::Fact),
        EditOperation::new(22, 23, "”", "。”", ErrorType::Punctuation),
    ]);

    assert!(validate_edits(&input, &gold).is_empty());
    let corrected = apply_edits(&input, &gold).expect("gold edits are valid");
    println!("input:     {input}");
    println!("corrected: {corrected}");

    // The inverse direction: recover a minimal edit set from the text pair.
    let recovered = extract_edits(&input, &corrected);
    println!("\nminimal edits from the pair:");
    for e in recovered.iter() {
        println!("  [{}, {}) {:?} -> {:?}", e.start, e.end, e.original, e.replacement);
    }
    assert_eq!(apply_edits(&input, &recovered).unwrap(), corrected);

    // Validation reports every violated invariant with the edit index.
    let broken = EditSet::new(vec![EditOperation::new(
        0,
        4,
        "第六十一条",
        "x",
        ErrorType::Unknown,
    )]);
    println!("\nviolations of a broken edit set:");
    for v in validate_edits(&input, &broken) {
        println!("  {v}");
    }
}
