fn main() {
    std::process::exit(ortrend_cli::main_with_args(std::env::args_os()));
}
