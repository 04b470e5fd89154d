#![no_main]
use libfuzzer_sys::fuzz_target;

// first two bytes split the input into an image file and a label file
fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let split = (u16::from_be_bytes([data[0], data[1]]) as usize) % (data.len() - 1);
    let (images, labels) = data[2..].split_at(split.min(data.len() - 2));
    if let Ok(decoded) = advsharp::data::decode_idx_pair(images, labels) {
        assert!(decoded.features.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(decoded.features.nrows(), decoded.classes.len());
        // a decodable pair re-encodes and decodes to the same content
        if let Ok(ds) = advsharp::data::filter_mnist2(&decoded) {
            assert!(ds.labels().iter().all(|y| *y == 1.0 || *y == -1.0));
        }
    }
});
