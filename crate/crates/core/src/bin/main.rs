fn main() {
    std::process::exit(chirp_interferometry::cli::cli_main(std::env::args_os()));
}
