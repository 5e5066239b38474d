#![no_main]

use libfuzzer_sys::fuzz_target;
use texsplat::ply::{encode_splat_ply, parse_splat_ply};

fuzz_target!(|data: &[u8]| {
    if let Ok(scene) = parse_splat_ply(data) {
        scene.validate().expect("imported scene validates");
        let again = parse_splat_ply(&encode_splat_ply(&scene).expect("re-encode")).expect("re-parse");
        assert_eq!(again.len(), scene.len());
    }
});
