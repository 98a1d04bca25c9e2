#![no_main]

use fraqmap::io::{parse_field_csv, write_field_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(u) = parse_field_csv(text) {
        assert_eq!(parse_field_csv(&write_field_csv(&u)).expect("written field must parse"), u);
    }
});
