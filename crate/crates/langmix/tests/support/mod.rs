//! Minimal HTTP/1.1 server for exercising the fetch client.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

pub struct Request {
    pub headers: Vec<(String, String)>,
    pub body: String,
}

pub type Handler = dyn Fn(usize, &Request) -> (u16, String) + Send + Sync;

pub struct MockServer {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
    pub seen: Arc<Mutex<Vec<Request>>>,
}

fn handle(mut stream: TcpStream, n: usize, handler: &Handler, seen: &Mutex<Vec<Request>>, delay: Duration) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    let mut headers = Vec::new();
    let mut length = 0usize;
    loop {
        line.clear();
        reader.read_line(&mut line).unwrap();
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((k, v)) = l.split_once(':') {
            let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_owned());
            if k == "content-length" {
                length = v.parse().unwrap();
            }
            headers.push((k, v));
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    let request = Request {
        headers,
        body: String::from_utf8(body).unwrap(),
    };
    thread::sleep(delay);
    let (status, reply) = handler(n, &request);
    seen.lock().unwrap().push(request);
    let head = format!(
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        reply.len()
    );
    let _ = stream.write_all(head.as_bytes());
    let _ = stream.write_all(reply.as_bytes());
    let _ = stream.flush();
}

impl MockServer {
    pub fn start(handler: Box<Handler>) -> Self {
        Self::start_with_delay(handler, Duration::ZERO)
    }

    pub fn start_with_delay(handler: Box<Handler>, delay: Duration) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/generate", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let seen = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::from(handler);
        let (h, s) = (hits.clone(), seen.clone());
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let n = h.fetch_add(1, Ordering::SeqCst);
                let (handler, s) = (handler.clone(), s.clone());
                thread::spawn(move || handle(stream, n, &*handler, &s, delay));
            }
        });
        MockServer { url, hits, seen }
    }
}

/// Echoes the request so outputs are a pure function of the request.
pub fn echo(_: usize, r: &Request) -> (u16, String) {
    let v: serde_json::Value = serde_json::from_str(&r.body).unwrap();
    let text = format!("답변 {} {} {}", v["prompt"].as_str().unwrap(), v["temperature"], v["seed"]);
    (200, serde_json::json!({ "text": text }).to_string())
}

pub fn write_prompts(dir: &std::path::Path, n: usize) -> std::path::PathBuf {
    let path = dir.join("prompts.jsonl");
    let mut text = String::new();
    for i in 1..=n {
        text.push_str(&format!("{{\"prompt_id\":\"p{i}\",\"text\":\"질문 {i}\"}}\n"));
    }
    std::fs::write(&path, text).unwrap();
    path
}
