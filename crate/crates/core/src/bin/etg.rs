fn main() {
    std::process::exit(etg::cli::main_with_args(std::env::args_os()));
}
