fn main() {
    std::process::exit(spanex_cli::run(std::env::args_os()));
}
