fn main() {
    std::process::exit(tale::cli::main_with_args(std::env::args_os()));
}
