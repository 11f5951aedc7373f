#![no_main]

use libfuzzer_sys::fuzz_target;
use treewalk::config::{Grid, MAX_GRID_POINTS};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = Grid::parse(text) {
        let values = g.values();
        assert!(!values.is_empty() && values.len() <= MAX_GRID_POINTS);
        assert!(values.iter().all(|v| v.is_finite()));
        assert_eq!(Grid::parse(&g.to_string()).unwrap().values(), values);
    }
});
