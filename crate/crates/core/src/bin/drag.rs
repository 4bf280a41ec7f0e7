fn main() {
    drag::cli::configure_threads();
    let args: Vec<String> = std::env::args().collect();
    let code = drag::cli::run(&args, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
