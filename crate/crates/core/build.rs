//! Links the reference (netlib) LAPACK and BLAS archives statically.
//!
//! Override the search directories with `DICKE_LAPACK_DIR` and `DICKE_BLAS_DIR`.

fn main() {
    let lapack = std::env::var("DICKE_LAPACK_DIR")
        .unwrap_or_else(|_| "/usr/lib/x86_64-linux-gnu/lapack".to_string());
    let blas = std::env::var("DICKE_BLAS_DIR")
        .unwrap_or_else(|_| "/usr/lib/x86_64-linux-gnu/blas".to_string());
    println!("cargo:rerun-if-env-changed=DICKE_LAPACK_DIR");
    println!("cargo:rerun-if-env-changed=DICKE_BLAS_DIR");
    println!("cargo:rustc-link-search=native={lapack}");
    println!("cargo:rustc-link-search=native={blas}");
    println!("cargo:rustc-link-lib=static=lapack");
    println!("cargo:rustc-link-lib=static=blas");
    println!("cargo:rustc-link-lib=dylib=gfortran");
}
