fn main() {
    std::process::exit(hexiso::cli::cli_main());
}
