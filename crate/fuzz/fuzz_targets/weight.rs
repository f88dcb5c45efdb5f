#![no_main]

use libfuzzer_sys::fuzz_target;
use siegel_core::weights::{make_weight, WeightKind};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(kind) = s.parse::<WeightKind>() else { return };
    let shown = kind.to_string();
    let again: WeightKind = shown.parse().expect("displayed weight parses");
    assert_eq!(again.to_string(), shown);
    // Building may fail on bad parameters but must not panic.
    let _ = make_weight(kind, 40, true);
});
