#![no_main]

use fraqmap_cli::{split_overrides, Config, Experiment};
use libfuzzer_sys::fuzz_target;

// file text, then an optional NUL and whitespace-separated command-line words
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (file, args) = text.split_once('\0').unwrap_or((text, ""));
    let (_, overrides) = split_overrides(args.split_whitespace().map(str::to_string));
    for experiment in Experiment::ALL {
        if let Ok(cfg) = Config::resolve(experiment, Some(file), &overrides) {
            let echo = cfg.to_json().to_string();
            let again = Config::resolve(experiment, Some(&echo), &[]).expect("echoed config must resolve");
            assert_eq!(again, cfg);
        }
    }
});
