#![no_main]

use fraqmap::io::{parse_mesh, write_mesh};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mesh) = parse_mesh(text) {
        let again = parse_mesh(&write_mesh(&mesh)).expect("written mesh must parse");
        assert_eq!(again.vertices(), mesh.vertices());
        assert!(again.cells().eq(mesh.cells()));
        assert_eq!(again.classes(), mesh.classes());
    }
});
