fn main() {
    std::process::exit(pu_trihamiltonian::cli::main_with_args(std::env::args_os()));
}
