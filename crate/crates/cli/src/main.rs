fn main() {
    std::process::exit(synbif_cli::run(std::env::args_os()));
}
