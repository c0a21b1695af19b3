// Copyright 2026 The spectral-casimir authors
//
// Licensed under the Apache license, version 2.0 (the "license");
// you may not use this file except in compliance with the license.
// You may obtain a copy of the license at
//
//     http://www.apache.org/licenses/license-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the license is distributed on an "as is" basis,
// without warranties or conditions of any kind, either express or implied.
// See the license for the specific language governing permissions and
// limitations under the license.

//! Runs every acceptance criterion and prints one pass/fail line each.
//! Exits nonzero if any criterion fails. Pass criterion ids (C1 ... C9) as
//! arguments to run a subset.

use std::time::Instant;

use casimir_validation::CRITERIA;

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in CRITERIA.iter() {
        if !filter.is_empty() && !filter.iter().any(|f| f == c.id) {
            continue;
        }
        let start = Instant::now();
        let result = (c.run)();
        let t = start.elapsed().as_secs_f64();
        let (mut ok, mut detail) = match result {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let timing = match c.bound {
            Some(b) => {
                if t >= b {
                    ok = false;
                    detail.push_str("; runtime bound exceeded");
                }
                format!("{t:.2} s, bound {b} s")
            }
            None => format!("{t:.2} s"),
        };
        if !ok {
            failed += 1;
        }
        println!("[{}] {} {}: {detail} [{timing}]", if ok { "PASS" } else { "FAIL" }, c.id, c.name);
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
