fn main() {
    std::process::exit(tacnode_cli::run(std::env::args_os()));
}
