fn main() {
    std::process::exit(finet::cli::run(std::env::args_os()));
}
