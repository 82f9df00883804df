fn main() {
    std::process::exit(sctc::cli::run());
}
