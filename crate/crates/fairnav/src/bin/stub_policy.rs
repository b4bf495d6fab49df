//! Reference external policy speaking fairnav's line-delimited protocol.
//!
//! Reads one request object per line on stdin and answers one response
//! object per line on stdout. Modes (first CLI argument, default `noop`):
//!
//! - `noop`    answer 0 for every agent
//! - `greedy`  accelerate along the axis that most reduces the distance
//!             to the nearest observed goal
//! - `short`   answer one action too few (protocol-error fixture)
//! - `bad-code` answer an out-of-range action code (fixture)
//! - `hang`    never answer (timeout fixture)

use fairnav::policy::{WireRequest, WireResponse};
use std::io::{BufRead, Write};

fn greedy_code(ego: &[f64; 10]) -> u8 {
    let (gx, gy) = (ego[4], ego[5]);
    if gx == 0.0 && gy == 0.0 {
        0
    } else if gx.abs() >= gy.abs() {
        if gx > 0.0 {
            1
        } else {
            2
        }
    } else if gy > 0.0 {
        3
    } else {
        4
    }
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "noop".into());
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(_) => break,
        };
        if line.trim().is_empty() {
            continue;
        }
        let request: WireRequest = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("stub_policy: bad request: {e}");
                std::process::exit(1);
            }
        };
        if mode == "hang" {
            std::thread::sleep(std::time::Duration::from_secs(3600));
        }
        let mut actions: Vec<u8> = match mode.as_str() {
            "greedy" => request.agents.iter().map(|a| greedy_code(&a.ego)).collect(),
            "bad-code" => vec![9; request.agents.len()],
            _ => vec![0; request.agents.len()],
        };
        if mode == "short" && !actions.is_empty() {
            actions.pop();
        }
        let response = WireResponse { actions };
        let mut out = serde_json::to_string(&response).expect("serialize response");
        out.push('\n');
        if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
            break;
        }
    }
}
