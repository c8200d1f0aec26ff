fn main() {
    std::process::exit(sphlab::cli::main_with_args(std::env::args_os()));
}
