#![no_main]
use covert_core::Theta;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((labels, theta)) = Theta::from_json(text) {
        assert_eq!(labels.len(), theta.n());
        // Anything accepted must survive a write and re-read unchanged.
        let again = theta.to_json(&labels).unwrap();
        let (labels2, theta2) = Theta::from_json(&again).unwrap();
        assert_eq!(labels, labels2);
        assert_eq!(theta, theta2);
    }
});
