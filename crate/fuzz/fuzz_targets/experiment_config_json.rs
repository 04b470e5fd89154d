#![no_main]
use advsharp::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        assert!(!cfg.grids.is_empty());
        assert!(cfg.spectrum_top_k >= 1);
    }
});
