fn main() {
    std::process::exit(sgl::cli::run(std::env::args_os()));
}
