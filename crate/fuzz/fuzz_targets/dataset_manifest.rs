#![no_main]

use libfuzzer_sys::fuzz_target;
use texsplat::dataset::parse_manifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = parse_manifest(text) {
            for frame in &m.frames {
                let _ = frame.camera_to_world();
            }
        }
    }
});
