#![no_main]
use covert_core::experiment::Manifest;
use covert_core::{CovertSelector, ExperimentSpec, FitConfig, GenConfig};
use libfuzzer_sys::fuzz_target;

// The first byte picks the parser.
fuzz_target!(|data: &[u8]| {
    let Some((&which, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    match which % 5 {
        0 => {
            let _ = FitConfig::from_toml(text);
        }
        1 => {
            let _ = GenConfig::from_toml(text);
        }
        2 => {
            if let Ok(spec) = ExperimentSpec::from_toml(text) {
                let _ = spec.validate();
            }
        }
        3 => {
            let _ = Manifest::from_toml(text);
        }
        _ => {
            let _ = CovertSelector::parse(text);
        }
    }
});
