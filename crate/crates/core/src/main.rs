fn main() {
    std::process::exit(mcompare::cli::run_cli(std::env::args_os()));
}
