fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("cargo sets CARGO_MANIFEST_DIR");
    let header = std::path::Path::new(&crate_dir).join("include").join("seqdep.h");
    // regenerates the committed header; write_to_file leaves it untouched
    // when the content is already current
    cbindgen::generate(&crate_dir)
        .expect("C header generation")
        .write_to_file(header);
}
