#![no_main]

use libfuzzer_sys::fuzz_target;
use uncover::syntax::{parse_core_program, parse_program, print_program};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_program(src) {
        let again = parse_core_program(&print_program(&p)).expect("printed program parses");
        assert_eq!(again.sig, p.sig);
    }
});
