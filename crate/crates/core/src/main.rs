fn main() {
    std::process::exit(hbm::cli::main_with_args(std::env::args_os()));
}
