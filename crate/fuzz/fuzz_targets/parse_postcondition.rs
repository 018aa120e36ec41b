#![no_main]

use libfuzzer_sys::fuzz_target;
use uncover::syntax::{parse_postcondition, parse_program};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let p = parse_program("vars x, y, z; consts c; funs f/1; program { skip }").unwrap();
    let _ = parse_postcondition(&p.sig, src);
});
