fn main() {
    std::process::exit(risuav::cli::main_with_args(std::env::args_os()));
}
