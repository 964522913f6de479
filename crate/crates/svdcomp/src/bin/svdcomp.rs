fn main() {
    std::process::exit(svdcomp::cli::run());
}
