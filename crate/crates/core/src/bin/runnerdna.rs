fn main() {
    std::process::exit(runnerdna::cli::cli_main(std::env::args_os()));
}
