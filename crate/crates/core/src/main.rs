fn main() {
    std::process::exit(allee_core::cli::main_with(std::env::args_os()));
}
