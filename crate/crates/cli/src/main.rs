fn main() {
    std::process::exit(evolex_cli::run(std::env::args_os()));
}
