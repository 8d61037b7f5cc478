//! Builds emitted C with the host toolchain behind a small stdin driver.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use pcroot::codegen::{emit_header, emit_source, CodegenOptions, MARGINALIZED};
use pcroot::{Circuit, Evidence};

pub fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|cc| {
        Command::new(cc)
            .arg("--version")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .is_ok_and(|s| s.success())
    })
}

/// Reads one evidence vector per line and prints eval (and recover) results.
fn driver(prefix: &str, vars: usize, recover: bool) -> String {
    let rec = if recover {
        format!(" printf(\" %.17g\", {prefix}_recover((double)r));")
    } else {
        String::new()
    };
    format!(
        "#include <stdio.h>\n#include \"model.h\"\n\
         int main(void) {{\n  unsigned char ev[{n}];\n  for (;;) {{\n\
         for (int i = 0; i < {vars}; i++) {{ unsigned v; if (scanf(\"%u\", &v) != 1) return 0; ev[i] = (unsigned char)v; }}\n\
         double r = (double){prefix}_eval(ev); printf(\"%.17g\", r);{rec} printf(\"\\n\");\n  }}\n}}\n",
        n = vars.max(1),
    )
}

pub struct Built {
    pub exe: std::path::PathBuf,
    _dir: tempfile::TempDir,
}

pub fn build(cc: &str, c: &Circuit, opts: &CodegenOptions) -> Built {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("model.h"), emit_header(c, opts).unwrap()).unwrap();
    std::fs::write(d.join("model.c"), emit_source(c, opts).unwrap()).unwrap();
    std::fs::write(
        d.join("main.c"),
        driver(&opts.symbol_prefix, c.num_vars(), opts.emit_recovery),
    )
    .unwrap();
    let exe = d.join("model");
    let status = Command::new(cc)
        .current_dir(d)
        .args([
            "-std=c99",
            "-O2",
            "-ffp-contract=off",
            "-Wall",
            "-Werror",
            "-Wno-unknown-pragmas",
            "-o",
        ])
        .arg(&exe)
        .args(["main.c", "model.c", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C build failed in {}", d.display());
    Built { exe, _dir: dir }
}

pub fn run(exe: &Path, evidence: &[Evidence]) -> Vec<Vec<f64>> {
    let mut input = String::new();
    for e in evidence {
        let row: Vec<String> = e
            .values()
            .iter()
            .map(|v| v.map_or(MARGINALIZED as usize, |x| x).to_string())
            .collect();
        input.push_str(&row.join(" "));
        input.push('\n');
    }
    let mut child = Command::new(exe)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect()
}
