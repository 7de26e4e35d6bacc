//! Cyclotomic numbers deserialize from report JSON; arbitrary documents
//! must either parse into a valid vector over ℚ(ζ_p) or error cleanly.

#![no_main]

use libfuzzer_sys::fuzz_target;
use tsl::cyclotomic::CyclotomicNumber;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(value) = serde_json::from_str::<CyclotomicNumber>(text) {
            let json = serde_json::to_string(&value).expect("serialization");
            let back: CyclotomicNumber = serde_json::from_str(&json).expect("round trip");
            assert_eq!(back, value);
        }
    }
});
