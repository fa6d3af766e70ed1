fn main() {
    std::process::exit(cwseg::cli::run());
}
