#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(images) = advsharp::data::parse_idx_images(data) {
        // header arithmetic must agree with the payload that was accepted
        assert_eq!(images.pixels.len(), images.count * images.rows * images.cols);
    }
});
