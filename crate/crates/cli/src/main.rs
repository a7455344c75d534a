fn main() {
    std::process::exit(chromapart_cli::main_with_args(std::env::args_os()));
}
