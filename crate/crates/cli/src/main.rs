fn main() {
    std::process::exit(twophase_cli::run(std::env::args_os()));
}
