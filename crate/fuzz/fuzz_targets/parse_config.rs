#![no_main]
use libfuzzer_sys::{fuzz_target, Corpus};
use robust_potts::config::{emit_config, parse_config};

fuzz_target!(|data: &[u8]| -> Corpus {
    let Ok(text) = std::str::from_utf8(data) else {
        return Corpus::Reject;
    };
    if let Ok(cfg) = parse_config(text) {
        let emitted = emit_config(&cfg).expect("resolved configs emit");
        let back = parse_config(&emitted).expect("emitted configs parse");
        assert_eq!(back, cfg);
    }
    Corpus::Keep
});
