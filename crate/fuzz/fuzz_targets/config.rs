#![no_main]

use libfuzzer_sys::fuzz_target;
use siegel_cli::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = parse_config(text) else { return };
    let Ok(r) = cfg.resolve(None, false) else { return };
    // A resolved config is a fixed point.
    let text = toml::to_string(&r.config).expect("resolved config serializes");
    let again = parse_config(&text).and_then(|c| c.resolve(None, false)).expect("resolved config resolves");
    assert_eq!(again.config, r.config);
});
