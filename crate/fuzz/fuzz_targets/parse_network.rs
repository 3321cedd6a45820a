#![no_main]
use covert_core::Network;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(net) = Network::from_file_string(text) {
        let again = Network::from_file_string(&net.to_file_string()).unwrap();
        assert_eq!(net.labels(), again.labels());
        assert_eq!(net.edges(), again.edges());
        let _ = net.is_connected();
        let _ = covert_core::degree_gini(&net);
    }
});
