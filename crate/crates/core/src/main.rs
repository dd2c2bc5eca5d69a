fn main() {
    std::process::exit(marginal_gme::cli::main_with_args(std::env::args_os()));
}
