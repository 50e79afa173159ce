#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::Duration;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xtrials"))
}

/// Runs derive-weights and build-index on the shared fixtures into `dir`.
/// Returns (index dir, weights path).
pub fn build_fixture_index(dir: &Path) -> (PathBuf, PathBuf) {
    let weights = dir.join("weights.json");
    let out = bin()
        .args(["derive-weights", "--feature-ratings"])
        .arg(fixture("feature_ratings.csv"))
        .arg("--formulation-ratings")
        .arg(fixture("formulation_ratings.csv"))
        .arg("--out")
        .arg(&weights)
        .output()
        .expect("run derive-weights");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let index = dir.join("index");
    let out = bin()
        .arg("build-index")
        .arg("--trials")
        .arg(fixture("trials.jsonl"))
        .arg("--concepts")
        .arg(fixture("concepts.jsonl"))
        .arg("--out-dir")
        .arg(&index)
        .arg("--weights")
        .arg(&weights)
        .output()
        .expect("run build-index");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (index, weights)
}

/// A running `xtrials serve` process, killed on drop.
pub struct Server {
    child: Child,
    pub addr: String,
}

impl Server {
    pub fn start(index: &Path, extra: &[&str]) -> Result<Server, String> {
        let mut child = bin()
            .arg("serve")
            .arg("--index-dir")
            .arg(index)
            .args(["--port", "0"])
            .args(extra)
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| e.to_string())?;
        let stdout = child.stdout.take().expect("piped stdout");
        let mut line = String::new();
        BufReader::new(stdout).read_line(&mut line).map_err(|e| e.to_string())?;
        match line.trim().strip_prefix("listening on http://") {
            Some(addr) => Ok(Server {
                addr: addr.to_string(),
                child,
            }),
            None => {
                let status = child.wait().map_err(|e| e.to_string())?;
                let mut err = String::new();
                if let Some(mut s) = child.stderr.take() {
                    let _ = s.read_to_string(&mut err);
                }
                Err(format!("server exited with {status}: {err}"))
            }
        }
    }

    pub fn get(&self, path: &str) -> (u16, String) {
        http(&self.addr, "GET", path)
    }

    pub fn post(&self, path: &str) -> (u16, String) {
        http(&self.addr, "POST", path)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Minimal HTTP/1.1 client: one request per connection.
pub fn http(addr: &str, method: &str, path: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).expect("connect");
    stream.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Length: 0\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).expect("read response");
    let text = String::from_utf8(raw).expect("utf-8 response");
    let (head, body) = text.split_once("\r\n\r\n").expect("header terminator");
    let status = head
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .expect("status code");
    let chunked = head.to_ascii_lowercase().contains("transfer-encoding: chunked");
    let body = if chunked { dechunk(body) } else { body.to_string() };
    (status, body)
}

fn dechunk(mut body: &str) -> String {
    let mut out = String::new();
    loop {
        let (size, rest) = body.split_once("\r\n").expect("chunk size");
        let n = usize::from_str_radix(size.trim(), 16).expect("hex size");
        if n == 0 {
            return out;
        }
        out.push_str(&rest[..n]);
        body = &rest[n + 2..];
    }
}
