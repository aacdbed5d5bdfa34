#![no_main]
use libfuzzer_sys::fuzz_target;
use robust_potts::config::Command;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(c) = s.parse::<Command>() {
            assert_eq!(c.name(), s);
        }
    }
});
