use std::process::exit;

use duffing_floquet::{parse_args, run, USAGE};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let invocation = match parse_args(&args) {
        Ok(inv) => inv,
        Err(message) => {
            eprintln!("error: {message}");
            eprintln!("{USAGE}");
            exit(1);
        }
    };
    match run(&invocation) {
        Ok(payload) => {
            if let Some(path) = &invocation.output {
                if let Err(e) = std::fs::write(path, &payload) {
                    eprintln!("error: cannot write `{path}`: {e}");
                    exit(1);
                }
            } else {
                print!("{payload}");
            }
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            exit(failure.code);
        }
    }
}
