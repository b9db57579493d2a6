#![no_main]

use std::sync::Arc;

use libfuzzer_sys::fuzz_target;
use mcss::geometry::{TriangleMesh, Vec3};
use mcss::proposals::ProposalPool;

fuzz_target!(|text: &str| {
    // Every model reference resolves to a small box so geometry gets exercised.
    let mut load = |_: &str| Ok(Arc::new(TriangleMesh::cuboid(Vec3::zeros(), Vec3::repeat(0.3))));
    if let Ok(pool) = ProposalPool::from_json(text, &mut load) {
        assert!(pool.verify_caches());
    }
});
