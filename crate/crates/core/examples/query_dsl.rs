//! Parsing, printing and explaining the text query language.

use lifegrid::dsl::{explain, parse, print};

fn main() {
    let inputs = [
        "weekday:sat,sun AND time:18:00-23:30 AND concept:drink@0.5",
        "(loc:\"Home\" AND hr:>100) OR (activity:running AND speed:5-15)",
        "ocr:\"coffee menu\" AND geo:[53.38,53.39,-6.26,-6.25]",
        "weekday:mon AND time:25:00-26:00",
        "concept:drink AND",
    ];
    for input in inputs {
        println!("> {input}");
        match parse(input) {
            Ok(q) => {
                println!("  canonical: {}", print(&q));
                if let Ok(tree) = explain(input) {
                    for line in tree.lines() {
                        println!("  {line}");
                    }
                }
            }
            Err(e) => {
                println!("  {e}");
                println!("  {}^", " ".repeat(e.column.saturating_sub(1)));
            }
        }
    }
}
