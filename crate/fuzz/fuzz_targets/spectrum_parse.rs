#![no_main]

use fraqmap::io::{parse_spectrum_csv, write_spectrum_csv};
use libfuzzer_sys::fuzz_target;

// first byte picks the mode count, the rest is the file
fuzz_target!(|data: &[u8]| {
    let Some((&m, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(f) = parse_spectrum_csv(text, m as usize) {
        let again = parse_spectrum_csv(&write_spectrum_csv(&f, 0), m as usize).expect("written spectrum must parse");
        for k in f.wavenumbers() {
            assert_eq!(again.coeff(k, 0), f.coeff(k, 0));
        }
    }
});
