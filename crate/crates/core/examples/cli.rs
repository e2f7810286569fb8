//! The command-line front end driven in process.

use std::error::Error;

use cqac::cli::{run as cqac, Report};

pub fn run() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join(format!("cqac-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let q1 = dir.join("q1.cq");
    let q2 = dir.join("q2.cq");
    std::fs::write(&q1, "q(X) :- a(X,Y), Y <= 5.")?;
    std::fs::write(&q2, "q(X) :- a(X,Y), a(Y,Y), Y < 4.")?;
    let out = cqac(["cqac", "contains", q1.to_str().ok_or("path")?, q2.to_str().ok_or("path")?]);
    print!("{}", out.stdout);
    println!("exit {}", out.code);

    let out = cqac(["cqac", "selftest", "--corpus-size", "25", "--seed", "9", "--json"]);
    let report: Report = serde_json::from_str(&out.stdout)?;
    println!("selftest {} with {} failures", report.verdict.unwrap_or_default(), report.fields["failures"]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
