fn main() {
    std::process::exit(ddfiber::cli::main_with_args(std::env::args_os()));
}
