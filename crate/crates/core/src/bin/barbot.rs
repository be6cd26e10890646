fn main() {
    std::process::exit(barbot_anosov::cli::run(std::env::args_os()));
}
