#![no_main]
use covert_core::observation::parse_log;
use covert_core::ObservationSet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(records) = parse_log(text) else {
        return;
    };
    if let Ok(obs) = ObservationSet::build_in_appearance_order(&records) {
        assert_eq!(obs.d(), records.len());
        assert!(obs.n() <= records.iter().map(Vec::len).sum::<usize>());
    }
});
