#![no_main]

use libfuzzer_sys::fuzz_target;
use siegel_core::arith::IrrationalSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = s.parse::<IrrationalSpec>() {
        let shown = spec.to_string();
        let again: IrrationalSpec = shown.parse().expect("displayed spec parses");
        assert_eq!(again.to_string(), shown);
    }
});
