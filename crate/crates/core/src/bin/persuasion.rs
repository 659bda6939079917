fn main() {
    std::process::exit(persuasion_core::cli::main_with_args(std::env::args_os()));
}
