fn main() {
    std::process::exit(cloaklab_cli::main_with_args(std::env::args_os()));
}
