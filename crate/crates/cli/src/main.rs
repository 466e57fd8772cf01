fn main() {
    std::process::exit(averaging_cli::run(std::env::args()));
}
