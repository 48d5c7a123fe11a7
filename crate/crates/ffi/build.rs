use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();
    let out: PathBuf = [crate_dir.as_str(), "include", "lppl_vnv.h"].iter().collect();

    let mut config = cbindgen::Config::default();
    config.language = cbindgen::Language::C;
    config.include_guard = Some("LPPL_VNV_H".to_string());
    config.cpp_compat = true;
    config.header = Some("/* C API for the LPPL verification toolkit. */".to_string());
    config.enumeration.prefix_with_name = true;
    config.documentation_style = cbindgen::DocumentationStyle::C99;

    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("unable to generate C bindings")
        .write_to_file(out);

    println!("cargo:rerun-if-changed=src/lib.rs");
}
