#![no_main]

use libfuzzer_sys::fuzz_target;
use uncover::exec::{parse_trace, print_trace};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_trace(src) {
        assert_eq!(parse_trace(&print_trace(&t)).expect("printed trace parses"), t);
    }
});
