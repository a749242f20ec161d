//! Compiles the C example against the static library and the generated
//! header, then runs it.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_example_builds_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include/dagsched.h");
    assert!(header.exists(), "header not generated");
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libdagsched_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out_dir = tempfile::tempdir().unwrap();
    let bin = out_dir.path().join("basic");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(manifest.join("examples/basic.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap_or_else(|e| panic!("cannot run C compiler '{cc}': {e}"));
    assert!(status.success(), "C example failed to compile");

    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "C example failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("fair avg_jct"), "{stdout}");
}
