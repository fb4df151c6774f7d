//! Proves the ABI end to end: a genuine C program is compiled against the
//! generated header, linked against the cdylib, and executed. Skips with a
//! note when no C compiler is installed.

use std::path::PathBuf;
use std::process::Command;

const C_CLIENT: &str = r#"
#include <stdio.h>
#include <string.h>
#include "phishcorr.h"

int main(void) {
    if (pc_version() == NULL || strlen(pc_version()) == 0) {
        fprintf(stderr, "version missing\n");
        return 1;
    }

    uintptr_t distance = 0;
    if (pc_levenshtein("kitten", "sitting", &distance) != PC_STATUS_OK || distance != 3) {
        fprintf(stderr, "levenshtein wrong: %lu\n", (unsigned long)distance);
        return 1;
    }

    double similarity = 0.0;
    PcStatus status = pc_skeleton_similarity(
        "<html><body><p>a</p></body></html>",
        "<html><body><p>b</p></body></html>",
        &similarity);
    if (status != PC_STATUS_OK || similarity != 1.0) {
        fprintf(stderr, "skeleton similarity wrong: %f\n", similarity);
        return 1;
    }

    if (pc_levenshtein(NULL, "x", &distance) != PC_STATUS_NULL_ARGUMENT) {
        fprintf(stderr, "null argument not detected\n");
        return 1;
    }
    char *message = pc_last_error_message();
    if (message == NULL || strstr(message, "null") == NULL) {
        fprintf(stderr, "error message missing\n");
        return 1;
    }
    pc_string_free(message);

    printf("C-ABI-OK\n");
    return 0;
}
"#;

fn have_cc() -> bool {
    Command::new("cc")
        .arg("--version")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// target/debug, derived from this test executable's own location
/// (target/debug/deps/<name>).
fn target_debug_dir() -> PathBuf {
    let exe = std::env::current_exe().expect("test exe path");
    exe.parent().and_then(|p| p.parent()).expect("deps dir inside target").to_path_buf()
}

#[test]
fn a_c_client_compiles_links_and_runs() {
    if !have_cc() {
        println!("skipped: no C compiler on PATH");
        return;
    }

    // cargo test builds only the rlib the harness links against, so build
    // the shared library explicitly (cheap when the cache is warm)
    let status = Command::new(env!("CARGO"))
        .args(["build", "-p", "phishcorr-ffi"])
        .status()
        .expect("cargo runs");
    assert!(status.success(), "building the shared library failed");

    let lib_dir = target_debug_dir();
    assert!(
        lib_dir.join("libphishcorr_ffi.so").is_file() || lib_dir.join("libphishcorr_ffi.dylib").is_file(),
        "no shared library in {}",
        lib_dir.display()
    );
    let include_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");

    let work = tempfile::tempdir().unwrap();
    let source = work.path().join("client.c");
    std::fs::write(&source, C_CLIENT).unwrap();
    let program = work.path().join("client");
    let compile = Command::new("cc")
        .arg(&source)
        .arg("-I")
        .arg(&include_dir)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lphishcorr_ffi")
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-o")
        .arg(&program)
        .output()
        .expect("cc runs");
    assert!(
        compile.status.success(),
        "compilation failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&program).output().expect("client runs");
    assert!(
        run.status.success(),
        "client exited with {}: {}",
        run.status,
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "C-ABI-OK");
}
