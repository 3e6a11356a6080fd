use std::io::Write;

fn main() {
    let workers = match herdsim::cli::workers_from_env() {
        Ok(w) => w,
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(herdsim::cli::EXIT_USAGE);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = herdsim::cli::run(
        std::env::args_os(),
        workers,
        &mut out,
        &mut std::io::stderr(),
    );
    let _ = out.flush();
    std::process::exit(code);
}
