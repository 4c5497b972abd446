fn main() {
    // System OpenBLAS provides the BLAS/CBLAS/LAPACK symbols lax expects.
    println!("cargo:rustc-link-lib=dylib=openblas");
    println!("cargo:rustc-link-lib=dylib=gfortran");
}
