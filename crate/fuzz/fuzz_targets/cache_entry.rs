//! Cache entries live on disk between runs and may be truncated or
//! corrupted; the parser must treat any malformed entry as a miss, never
//! panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = tsl::cache::parse_sum_entry(text);
    }
});
