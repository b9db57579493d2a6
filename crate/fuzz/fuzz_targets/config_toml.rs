#![no_main]

use libfuzzer_sys::fuzz_target;
use mcss::config::Config;

fuzz_target!(|text: &str| {
    if let Ok(c) = Config::from_toml(text) {
        assert_eq!(Config::from_toml(&c.to_toml()).expect("roundtrip"), c);
    }
});
