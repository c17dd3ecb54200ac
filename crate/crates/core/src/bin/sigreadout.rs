fn main() {
    std::process::exit(sigreadout::cli::main_with_args(std::env::args_os()));
}
