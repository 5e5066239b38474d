#![no_main]

use libfuzzer_sys::fuzz_target;
use texsplat::scene_file::{decode_scene, encode_scene};

fuzz_target!(|data: &[u8]| {
    if let Ok(scene) = decode_scene(data) {
        // anything accepted is valid and re-encodes to the same bytes
        scene.validate().expect("decoded scene validates");
        assert_eq!(encode_scene(&scene), data);
    }
});
