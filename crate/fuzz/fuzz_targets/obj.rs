#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(mesh) = mcss::io::parse_obj(text) {
        let again = mcss::io::parse_obj(&mcss::io::write_obj(&mesh)).expect("written OBJ parses");
        assert_eq!(again.triangles.len(), mesh.triangles.len());
    }
});
