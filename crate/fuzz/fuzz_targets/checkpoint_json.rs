#![no_main]
use advsharp::train::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ckpt) = Checkpoint::from_json(text) {
        assert!(ckpt.weights().iter().all(|v| v.is_finite()));
        let json = ckpt.to_json();
        let again = Checkpoint::from_json(&json).expect("round trip");
        assert_eq!(again.w, ckpt.w);
    }
});
