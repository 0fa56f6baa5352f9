fn main() {
    std::process::exit(pgspread_cli::run(std::env::args_os()));
}
