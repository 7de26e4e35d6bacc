//! Exact-rational strings appear in reports, problem files, and cache
//! entries; the parser must reject garbage without panicking, and accepted
//! values must round-trip.

#![no_main]

use libfuzzer_sys::fuzz_target;
use tsl::rational::{rat_from_str, rat_to_string};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(value) = rat_from_str(text) {
            let printed = rat_to_string(&value);
            let back = rat_from_str(&printed).expect("printed rationals parse");
            assert_eq!(back, value);
        }
    }
});
