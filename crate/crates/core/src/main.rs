fn main() {
    std::process::exit(breglab::cli::main_with_args(std::env::args_os()));
}
