fn main() {
    std::process::exit(vttn::cli::run(std::env::args_os()));
}
