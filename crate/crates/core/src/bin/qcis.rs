fn main() {
    std::process::exit(qcis::cli::main_with_args(std::env::args_os()));
}
