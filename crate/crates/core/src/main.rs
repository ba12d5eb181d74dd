use std::process::exit;

fn main() {
    exit(cqc::cli::run(std::env::args_os()));
}
