fn main() {
    std::process::exit(misc_clustering::cli::cli_main(std::env::args_os()));
}
