fn main() {
    std::process::exit(exes_lab::cli::main_with_args(std::env::args_os()));
}
