fn main() {
    let t0 = std::time::Instant::now();
    let report = magicsim::search::survey(2).unwrap();
    println!("survey(2) took {:?}", t0.elapsed());
    println!("group_size={} solved={} with_solutions={} families={} total_solutions={} non_clifford={} inconclusive={}",
        report.group_size, report.solved, report.elements_with_solutions, report.family_count,
        report.total_solutions, report.non_clifford_count, report.inconclusive_elements.len());
    for f in report.families.iter().take(15) {
        println!("  {:>6}  {:?}  {}", f.count, f.classification, f.label);
    }
}
