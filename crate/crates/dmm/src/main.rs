use std::io::{stderr, stdout};

fn main() {
    let code = dmm::cli::run_cli(std::env::args_os(), &mut stdout(), &mut stderr());
    std::process::exit(code);
}
