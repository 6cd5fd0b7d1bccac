use std::path::Path;
use std::process::{Command, Output};

use metacp::pipeline::{self, ExportTarget};
use metacp::samples;

fn metacp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metacp")).current_dir(dir).args(args).output().unwrap()
}

fn write_samples(dir: &Path) {
    for (file, doc) in [("dhke.psv", samples::DHKE), ("ns.psv", samples::NS), ("nsl.psv", samples::NSL)] {
        std::fs::write(dir.join(file), doc).unwrap();
    }
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_samples(dir.path());
    let ok = metacp(dir.path(), &["validate", "dhke.psv"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(ok.stdout.is_empty());

    let bad = samples::DHKE.replace("<set id=\"Bool\"", "<set id=\"Boolean\"");
    std::fs::write(dir.path().join("broken.psv"), &bad).unwrap();
    let out = metacp(dir.path(), &["validate", "broken.psv"]);
    assert_eq!(out.status.code(), Some(1));
    let expected = metacp::diag::render(&pipeline::validate(&bad).unwrap_err().diagnostics);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);

    assert_eq!(metacp(dir.path(), &["validate", "missing.psv"]).status.code(), Some(2));
    std::fs::write(dir.path().join("junk.psv"), "<model").unwrap();
    assert_eq!(metacp(dir.path(), &["validate", "junk.psv"]).status.code(), Some(2));
}

#[test]
fn export_default_names_and_bytes() {
    let dir = tempfile::tempdir().unwrap();
    write_samples(dir.path());
    for (file, target, out) in
        [("dhke.psv", "proverif", "dhke.pv"), ("dhke.psv", "cpp", "dhke.cpp"), ("ns.psv", "tamarin", "ns.spthy")]
    {
        let before = std::fs::read(dir.path().join(file)).unwrap();
        let status = metacp(dir.path(), &["export", "--target", target, file]).status;
        assert_eq!(status.code(), Some(0), "{file} {target}");
        let written = std::fs::read_to_string(dir.path().join(out)).unwrap();
        let doc = String::from_utf8(before.clone()).unwrap();
        assert_eq!(written, pipeline::export(&doc, target.parse::<ExportTarget>().unwrap()).unwrap());
        assert_eq!(std::fs::read(dir.path().join(file)).unwrap(), before, "input was modified");
    }
}

#[test]
fn export_explicit_output_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    write_samples(dir.path());
    let out = metacp(dir.path(), &["export", "-t", "tamarin", "-o", "x.spthy", "nsl.psv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("x.spthy").is_file());

    let out = metacp(dir.path(), &["export", "--target", "cpp", "ns.psv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("no-group-structure"));
    assert!(!dir.path().join("ns.cpp").exists());

    assert_ne!(metacp(dir.path(), &["export", "--target", "coq", "dhke.psv"]).status.code(), Some(0));
}

#[test]
fn samples_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = metacp(dir.path(), &["samples"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "dhke\nneedham-schroeder\nneedham-schroeder-lowe\n");
    let out = metacp(dir.path(), &["samples", "--emit", "needham-schroeder-lowe"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), samples::NSL);
    assert_eq!(metacp(dir.path(), &["samples", "--emit", "nope"]).status.code(), Some(2));
}

#[test]
fn serve_uses_metacp_port() {
    use std::io::{Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::time::Duration;

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_metacp"))
        .arg("serve")
        .env("METACP_PORT", port.to_string())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let mut stream = None;
    for _ in 0..100 {
        if let Ok(s) = TcpStream::connect(("127.0.0.1", port)) {
            stream = Some(s);
            break;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    let mut stream = stream.expect("service did not start");
    stream.write_all(b"GET /samples HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut resp = String::new();
    stream.read_to_string(&mut resp).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.ends_with("dhke\nneedham-schroeder\nneedham-schroeder-lowe\n"));
}
