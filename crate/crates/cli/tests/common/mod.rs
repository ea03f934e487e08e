//! Shared helpers for the integration tests: running the binary, spawning
//! the HTTP service, and driving it over a raw socket.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::Duration;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sbmlkit")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawn sbmlkit")
}

pub fn run_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(bin())
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn sbmlkit");
    // A child that fails fast may exit without draining stdin; the broken
    // pipe is part of the scenario, not a harness error.
    match child.stdin.take().expect("stdin piped").write_all(input) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
        Err(e) => panic!("write stdin: {e}"),
    }
    child.wait_with_output().expect("wait for sbmlkit")
}

pub fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Assert success and hand back stdout.
pub fn ok_stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed (exit {:?}):\n{}",
        out.status.code(),
        stderr_str(out)
    );
    stdout_str(out)
}

pub fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).expect("write fixture");
    path
}

// ----- HTTP service ----------------------------------------------------------

/// A running `sbmlkit serve` process, killed on drop.
pub struct Server {
    child: Child,
    pub addr: String,
}

impl Server {
    /// Spawn `serve --port 0` and parse the bound address from its first
    /// stdout line.
    pub fn spawn(store: &Path, db: Option<&Path>) -> Server {
        let mut cmd = Command::new(bin());
        cmd.arg("serve")
            .arg("--port")
            .arg("0")
            .arg("--store")
            .arg(store)
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        if let Some(db) = db {
            cmd.arg("--db").arg(db);
        }
        let mut child = cmd.spawn().expect("spawn server");
        let stdout = child.stdout.take().expect("server stdout piped");
        let mut lines = BufReader::new(stdout).lines();
        let line = lines
            .next()
            .expect("server printed a line")
            .expect("read server stdout");
        let addr = line
            .strip_prefix("listening on http://")
            .unwrap_or_else(|| panic!("unexpected server banner: {line}"))
            .to_string();
        Server { child, addr }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.child.kill().ok();
        self.child.wait().ok();
    }
}

pub struct Response {
    pub status: u16,
    pub headers: BTreeMap<String, String>,
    pub body: Vec<u8>,
}

impl Response {
    pub fn body_str(&self) -> &str {
        std::str::from_utf8(&self.body).expect("utf-8 body")
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("body is not JSON ({e}): {}", self.body_str());
        })
    }

    pub fn content_type(&self) -> &str {
        self.headers.get("content-type").map(|s| s.as_str()).unwrap_or("")
    }
}

/// One HTTP/1.1 request over a fresh connection.
pub fn request(
    addr: &str,
    method: &str,
    path: &str,
    headers: &[(&str, &str)],
    body: &[u8],
) -> Response {
    let mut stream = TcpStream::connect(addr).expect("connect to server");
    stream
        .set_read_timeout(Some(Duration::from_secs(30)))
        .expect("set timeout");
    let mut req = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Length: {}\r\n",
        body.len()
    );
    for (k, v) in headers {
        req.push_str(&format!("{k}: {v}\r\n"));
    }
    req.push_str("\r\n");
    stream.write_all(req.as_bytes()).expect("write request head");
    stream.write_all(body).expect("write request body");

    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).expect("read response");
    parse_response(&raw)
}

fn parse_response(raw: &[u8]) -> Response {
    let head_end = raw
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .expect("response has a header block");
    let head = std::str::from_utf8(&raw[..head_end]).expect("utf-8 head");
    let mut lines = head.split("\r\n");
    let status_line = lines.next().expect("status line");
    let status: u16 = status_line
        .split_whitespace()
        .nth(1)
        .expect("status code")
        .parse()
        .expect("numeric status");
    let mut headers = BTreeMap::new();
    for line in lines {
        if let Some((k, v)) = line.split_once(':') {
            headers.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
    }
    let mut body = raw[head_end + 4..].to_vec();
    if headers.get("transfer-encoding").map(|v| v.as_str()) == Some("chunked") {
        body = dechunk(&body);
    }
    Response { status, headers, body }
}

fn dechunk(data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut rest = data;
    loop {
        let line_end = match rest.windows(2).position(|w| w == b"\r\n") {
            Some(p) => p,
            None => break,
        };
        let size_str = std::str::from_utf8(&rest[..line_end]).expect("chunk size line");
        let size = usize::from_str_radix(size_str.trim(), 16).expect("hex chunk size");
        if size == 0 {
            break;
        }
        let start = line_end + 2;
        out.extend_from_slice(&rest[start..start + size]);
        rest = &rest[start + size + 2..];
    }
    out
}

pub fn get(addr: &str, path: &str) -> Response {
    request(addr, "GET", path, &[], &[])
}

pub fn post(addr: &str, path: &str, body: &[u8]) -> Response {
    request(addr, "POST", path, &[], body)
}

pub fn post_json(addr: &str, path: &str, value: &serde_json::Value) -> Response {
    let body = serde_json::to_vec(value).expect("serialize request");
    request(
        addr,
        "POST",
        path,
        &[("Content-Type", "application/json")],
        &body,
    )
}
