fn main() {
    std::process::exit(gatecap::cli::main_with_args(std::env::args_os()));
}
