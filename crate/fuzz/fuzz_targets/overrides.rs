#![no_main]
use libfuzzer_sys::{fuzz_target, Corpus};
use robust_potts::config::{apply_override, parse_with, Command};

const BASE: &str = "[model]\nL = 5\nq = 3\nJ = 0.8\n";

// Input: lines of `key=value`.
fuzz_target!(|data: &[u8]| -> Corpus {
    let Ok(text) = std::str::from_utf8(data) else {
        return Corpus::Reject;
    };
    let pairs: Vec<(String, String)> = text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let mut table = toml::Table::new();
    for (k, v) in &pairs {
        let _ = apply_override(&mut table, k, v);
    }
    let _ = parse_with(BASE, Some(Command::Sample), &pairs);
    Corpus::Keep
});
