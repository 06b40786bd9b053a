//! Operator trees and tree-edit similarity between a gold statement and a
//! few candidates.

use proofforge::evalmetrics::{gted_with, parse_optree, Normalization};

const GOLD: &str = "theorem gold (x : ℝ) (hx : 0 < x) : x + 1 / x ≥ 2 := by sorry";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gold = parse_optree(GOLD)?;
    println!("gold: {gold}");
    for cand in [
        "theorem c1 (y : ℝ) (hy : 0 < y) : y + 1 / y ≥ 2 := by sorry",
        "theorem c2 (x : ℝ) (hx : 0 < x) : 2 ≤ x + 1 / x := by sorry",
        "theorem c3 (x : ℝ) : x + 1 / x ≥ 2 := by sorry",
        "theorem c4 (x : ℕ) (hx : 0 < x) : x + 1 / x ≥ 2 := by sorry",
    ] {
        let tree = parse_optree(cand)?;
        let sum = gted_with(&gold, &tree, Normalization::SumOfSizes);
        let max = gted_with(&gold, &tree, Normalization::MaxSize);
        println!("{tree}\n  ted {} sizes {}+{} gted {:.3} (max-size {:.3})", sum.ted_cost, sum.size_a, sum.size_b, sum.similarity, max.similarity);
    }
    Ok(())
}
