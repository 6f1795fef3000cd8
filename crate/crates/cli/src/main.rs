fn main() {
    std::process::exit(polarnet_cli::main_with(std::env::args_os()));
}
