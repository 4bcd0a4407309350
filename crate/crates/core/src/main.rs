fn main() {
    std::process::exit(legrec::cli::main_with_args(std::env::args_os()));
}
