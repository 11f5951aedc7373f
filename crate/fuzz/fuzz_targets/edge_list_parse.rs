#![no_main]

use libfuzzer_sys::fuzz_target;
use treewalk::graph::EdgeList;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(list) = EdgeList::parse(text) {
        let n = list.header.vertices;
        assert!(list.edges.iter().all(|&(u, v)| u < n && v < n));
    }
});
