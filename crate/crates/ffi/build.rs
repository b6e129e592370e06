#[cfg(feature = "headers")]
fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    cbindgen::generate(&crate_dir)
        .expect("could not generate header")
        .write_to_file("include/p2pgnn.h");
}

#[cfg(not(feature = "headers"))]
fn main() {}
