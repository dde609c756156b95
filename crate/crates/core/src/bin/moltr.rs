fn main() {
    std::process::exit(moltr::cli::cli_main(std::env::args_os()));
}
