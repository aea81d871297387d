fn main() {
    std::process::exit(facedeform::cli::run(std::env::args_os()));
}
