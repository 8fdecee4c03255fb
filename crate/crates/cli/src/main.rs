use std::io::{self, Write};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = wlat_cli::run(&args, &mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    std::process::exit(code);
}
