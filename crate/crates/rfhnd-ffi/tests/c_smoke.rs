//! Compile and run a small C program against the generated header and the
//! cdylib, exercising the ABI from the consumer side.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    assert!(include_dir.join("rfhnd.h").exists(), "header must be generated at build time");
    // target/debug relative to the workspace root.
    let lib_dir = manifest.parent().unwrap().parent().unwrap().join("target").join("debug");
    let lib = lib_dir.join("librfhnd_ffi.so");
    if !lib.exists() {
        // The cdylib is produced by `cargo build`; unit-test-only builds may
        // not have linked it yet.
        let status = Command::new(env!("CARGO"))
            .args(["build", "-p", "rfhnd-ffi"])
            .status()
            .expect("cargo build");
        assert!(status.success());
    }

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include "rfhnd.h"
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

int main(void) {
    RfDataset *ds = NULL;
    if (rf_dataset_generate_sbm(30, 20, 5, 2, 4, 1.0, 3.0, 7, &ds) != RF_STATUS_OK) {
        return 1;
    }
    uintptr_t n = 0, m = 0, d = 0;
    if (rf_dataset_counts(ds, &n, &m, &d) != RF_STATUS_OK || n != 60 || m != 20 || d != 4) {
        return 2;
    }
    double *kappa = malloc(m * sizeof(double));
    if (rf_curvature(ds, 0, true, 0.1, kappa) != RF_STATUS_OK) {
        return 3;
    }
    double *energies = malloc(5 * sizeof(double));
    if (rf_diffuse_analytic(ds, 0, 0.05, 4, true, 0.1, energies) != RF_STATUS_OK) {
        return 4;
    }
    for (int i = 0; i < 5; i++) {
        if (!(energies[i] == energies[i])) {
            return 5;
        }
    }
    /* Error path: bad curvature kind must set a message. */
    if (rf_curvature(ds, 9, false, 0.1, kappa) != RF_STATUS_INVALID_ARGUMENT) {
        return 6;
    }
    char msg[128];
    if (rf_last_error(msg, sizeof msg) == 0 || strlen(msg) == 0) {
        return 7;
    }
    rf_dataset_free(ds);
    free(kappa);
    free(energies);
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();

    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include_dir)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lrfhnd_ffi")
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("cc available");
    assert!(status.success(), "C compilation failed");

    let out = Command::new(&exe)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .expect("smoke binary runs");
    assert!(
        out.status.success(),
        "smoke exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
