#![no_main]
use covert_core::detector::parse_ranking_csv;
use covert_core::evaluator::curve_from_flags;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(table) = parse_ranking_csv(text) else {
        return;
    };
    let mut seen = table.order.clone();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), table.order.len());
    if let Some(flags) = &table.relevant {
        if let Ok(curve) = curve_from_flags(flags) {
            assert_eq!(curve.rows.len(), flags.len());
        }
    }
});
