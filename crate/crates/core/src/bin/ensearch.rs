fn main() {
    std::process::exit(ensemble_search::cli::cli_main(std::env::args()));
}
