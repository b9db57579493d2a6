#![no_main]

use libfuzzer_sys::fuzz_target;
use mcss::render::{views_from_json, views_to_json};

fuzz_target!(|text: &str| {
    if let Ok(views) = views_from_json(text) {
        assert_eq!(views_from_json(&views_to_json(&views)).expect("roundtrip"), views);
    }
});
