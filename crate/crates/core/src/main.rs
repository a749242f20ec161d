fn main() {
    std::process::exit(dagsched::cli::run(std::env::args_os()));
}
