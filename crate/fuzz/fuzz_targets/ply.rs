#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(points) = mcss::io::parse_ply(text) {
        let again = mcss::io::parse_ply(&mcss::io::write_ply(&points)).expect("written PLY parses");
        assert_eq!(again.len(), points.len());
    }
});
