fn main() {
    std::process::exit(flowtwin::cli::run(std::env::args_os()));
}
