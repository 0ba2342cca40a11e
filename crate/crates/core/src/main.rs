fn main() {
    std::process::exit(ladnas_core::cli::run(std::env::args_os()));
}
