fn main() {
    std::process::exit(qjae::cli::main_with_args(std::env::args_os()));
}
