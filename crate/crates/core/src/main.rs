fn main() {
    std::process::exit(tripartite::cli::run(std::env::args_os()));
}
