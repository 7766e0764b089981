//! Compiles and runs a C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "compop.h"

int main(void) {
    const char *doc = "{\"domain\":{\"blocks\":[1,1]},\"symbol\":{\"type\":\"diag\",\"r\":[0.5,0.5]}}";
    CompopSymbol *sym = NULL;
    if (compop_symbol_from_json(doc, 1, &sym) != COMPOP_STATUS_OK) return 10;
    CompopSpectrum *spec = NULL;
    if (compop_approx_numbers(sym, 3, 0, &spec) != COMPOP_STATUS_OK) return 11;
    size_t n = compop_spectrum_len(spec);
    const double *v = compop_spectrum_data(spec);
    if (n != 10 || fabs(v[0] - 1.0) > 1e-15 || fabs(v[9] - 0.125) > 1e-15) return 12;
    compop_spectrum_free(spec);
    compop_symbol_free(sym);
    if (compop_symbol_from_json("{", 1, &sym) != COMPOP_STATUS_SPEC) return 13;
    if (compop_last_error() == NULL) return 14;
    printf("ok %s\n", compop_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test-binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libcompop_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
