fn main() {
    std::process::exit(entgrowth_cli::run(std::env::args_os()));
}
