use std::io::Write as _;

fn main() {
    env_logger::init();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr();
    let code = met_cli::run(std::env::args().skip(1), &mut stdout, &mut stderr);
    let _ = stdout.flush();
    std::process::exit(code);
}
