#![no_main]

use fraqmap::io::{parse_triplets, write_triplets};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_triplets(text) {
        assert_eq!(parse_triplets(&write_triplets(&t)).expect("written triplets must parse"), t);
        if t.n <= 64 {
            let _ = t.to_dense();
        }
    }
});
