use std::io;

use wignerbox::cli::{run_cli, Style};

fn main() {
    let code = run_cli(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
        Style::from_env(),
    );
    std::process::exit(code);
}
