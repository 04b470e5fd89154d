#![no_main]
use advsharp::perturb::PerturbationSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = serde_json::from_str::<PerturbationSpec>(text) {
        // anything that parses must satisfy the spec invariants
        spec.validate().expect("parsed specs are valid");
        let json = serde_json::to_string(&spec).expect("valid specs serialize");
        let again: PerturbationSpec = serde_json::from_str(&json).expect("round trip");
        assert_eq!(again, spec);
    }
});
