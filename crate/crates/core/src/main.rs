fn main() {
    std::process::exit(gwgames::cli::run(std::env::args_os()));
}
