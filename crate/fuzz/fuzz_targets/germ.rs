#![no_main]

use libfuzzer_sys::fuzz_target;
use siegel_core::linearize::CoeffSource;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(src) = s.parse::<CoeffSource>() {
        let shown = src.to_string();
        let again: CoeffSource = shown.parse().expect("displayed germ parses");
        assert_eq!(again.to_string(), shown);
    }
});
