fn main() {
    std::process::exit(roe_kms::cli::run(std::env::args_os()));
}
