fn main() {
    std::process::exit(acev_cli::main_with_args(std::env::args_os()));
}
