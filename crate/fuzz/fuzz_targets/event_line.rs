#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| empnet_fuzz::event_line(data));
