fn main() {
    std::process::exit(sptc::cli::main_with_args(std::env::args_os()));
}
